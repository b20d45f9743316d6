#!/usr/bin/env python
# -*- coding: utf-8 -*-
#-----------------------------------------------------------------------------
# Copyright (c) 2015-2023, IBM Corp.
# All rights reserved.
#
# Distributed under the terms of the BSD Simplified License.
#
# The full license is in the LICENSE file, distributed with this software.
#-----------------------------------------------------------------------------

"""
setup.py
"""

# -*- coding: utf-8 -*-
# Note: Always prefer setuptools over distutils
from setuptools import setup, find_packages
from codecs import open


# Get the long description from the relevant file


with open('README.md', 'r', encoding='utf-8') as f:
    longdesc = f.read()


classifiers = [
        # How mature is this project? Common values are
        #   3 - Alpha
        #   4 - Beta
        #   5 - Production/Stable
        'Development Status :: 3 - Alpha',

        # Indicate who your project is intended for
        'Intended Audience :: Education',
        'Intended Audience :: Science/Research',

        # Pick your license as you wish (should match "license" above)
        'License :: OSI Approved :: BSD License',

        'Operating System :: MacOS :: MacOS X',
        'Operating System :: Microsoft :: Windows',
        'Operating System :: POSIX',

        'Natural Language :: English',

        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: Implementation :: CPython',

        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Scientific/Engineering :: Information Analysis'
      ]

setup(name='dparm',
      python_requires='>=3.8',
      install_requires=['numpy', 'scipy', 'pandas', 'six', 'lazy'],

      extras_require={
        'test':['pytest', 'flaky==3.*', 'hypothesis'],
        'doc':['sphinx', 'numpydoc', 'sphinx_rtd_theme']
      },
      description='Partition MCMC samplers with adaptive reconfiguration moves for '
                  'Dirichlet process mixture and relational models',
      long_description=longdesc,
      long_description_content_type='text/markdown',
      author='IBM Corp.',
      license='BSD',
      classifiers=classifiers,
      keywords='mcmc gibbs split-merge dirichlet-process clustering stochastic-block-model '
               'bayesian nonparametric partition',
      packages=find_packages(exclude=['docs', 'tests*']),
      package_data={
        'dparm.sampledata': ['*.txt']},
      entry_points={
        'console_scripts': ['dparm=dparm.cli:main']},
     )

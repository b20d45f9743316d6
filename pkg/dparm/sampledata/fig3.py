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

'''
This module provides the four vertex network used for the exact frequency
test. It provides an object 'fig3' which is a NetworkDataset with the edges
1-2, 1-3, 1-4 and 3-4 (1-based), and the path of its edge list.

Examples
--------
>>> from dparm.sampledata.fig3 import fig3
>>> fig3.edges()
[(0, 1), (0, 2), (0, 3), (2, 3)]
'''
from os.path import dirname, join

from dparm.datagen import load_network

FIG3_PATH = join(dirname(__file__), 'fig3.txt')

fig3 = load_network(FIG3_PATH)

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

""" Utility functions """
import os
import logging
from time import perf_counter_ns
from functools import wraps

import six
import numpy as np

from dparm.exceptions import ConfigError

logger = logging.getLogger(__name__)

#-----------------------------------------------------------------------------
# Environment variable setter

def set_verbose(is_verbose):
    """
    Set the environment variable “VERBOSE” to ‘TRUE’ or ‘FALSE’. If it is set
    to ‘TRUE’, the dparm loggers emit DEBUG records, including the elapsed
    time of the functions decorated with :func:`timed`.
    """
    if is_verbose is True:
        os.environ['VERBOSE'] = 'True'
        logging.getLogger('dparm').setLevel(logging.DEBUG)
    elif is_verbose is False:
        os.environ['VERBOSE'] = 'False'
        logging.getLogger('dparm').setLevel(logging.NOTSET)
    else:
        raise ValueError("is_verbose should be a boolean")

def is_verbose():
    """Return True if the “VERBOSE” environment variable is set to ‘TRUE’."""
    return os.environ.get('VERBOSE', 'False') == 'True'

#-----------------------------------------------------------------------
# Performance measurement wrapper

def timed(function):
    """
    Measure the elapsed time of custom functions of the package. Should be used
    as a decorator.
    """
    @wraps(function)
    def wrapper(*args, **kwds):
        """Calculate elapsed time in seconds"""
        start = perf_counter_ns()
        result = function(*args, **kwds)
        elapsed = (perf_counter_ns() - start) / 1e9
        if is_verbose():
            logger.debug("%s execution time: %s seconds.", function.__name__, elapsed)
        return result
    return wrapper

class Stopwatch(object):
    """
    Accumulates wall-clock nanoseconds over several ``with`` blocks.

    Examples
    --------
    >>> watch = Stopwatch()
    >>> with watch:
    ...     pass
    >>> watch.elapsed_ns >= 0
    True
    """
    def __init__(self):
        self.elapsed_ns = 0
        self._start = None

    def __enter__(self):
        self._start = perf_counter_ns()
        return self

    def __exit__(self, ex_type, value, traceback):
        self.elapsed_ns += perf_counter_ns() - self._start
        self._start = None

#-----------------------------------------------------------------------
# Random streams

def spawn_generators(seed, count):
    """
    Spawn independent random generators from a single seed.

    Parameters
    ----------
    seed : int or numpy.random.SeedSequence
        Root seed.
    count : int
        Number of streams.

    Returns
    -------
    list of numpy.random.Generator
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seed.spawn(count)]

#-----------------------------------------------------------------------
# key=value configuration files

def read_config(path):
    """
    Read a plain ``key=value`` configuration file.

    Parameters
    ----------
    path : str
        File to read. Blank lines and lines starting with '#' are ignored.

    Returns
    -------
    dict
        Mapping of stripped keys to stripped string values.

    Raises
    ------
    ConfigError
        If a line has no '=' or an empty key.
    """
    config = {}
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ConfigError("%s:%s: expected key=value, got '%s'" % (path, number, line))
            key, value = line.split('=', 1)
            key = key.strip().lower().replace('-', '_')
            if not key:
                raise ConfigError("%s:%s: empty key" % (path, number))
            config[key] = value.strip()
    return config

def parse_bool(value):
    """Convert the usual textual spellings of a boolean."""
    if isinstance(value, bool):
        return value
    if isinstance(value, six.string_types):
        lowered = value.strip().lower()
        if lowered in ('1', 'true', 'yes', 'y', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'n', 'off'):
            return False
    raise ConfigError("cannot interpret '%s' as a boolean" % value)

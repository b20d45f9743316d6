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
Custom exceptions module
"""

#----------------------------------------------------------------------
# Custom Exception Classes

class Error(Exception):
    """
    This is the base class of all other exceptions thrown by dparm. It can
    be used to catch all exceptions with a single except statement.
    """
    def __init__(self, message):
        """
        This is the constructor which take one string argument.
        """
        super().__init__(message)
        self._message = message
    def __str__(self):
        """Converts the message to a string."""
        return('dparm::'+str(self.__class__.__name__)+': '+str(self._message))

class PartitionError(Error, KeyError):
    """
    This exception is raised when a partition operation is called outside
    of its domain: overlapping or empty blocks, an observation that the
    partition does not cover, mismatching coverage.
    """
    pass

class ModelError(Error):
    """
    This exception is raised when a model is evaluated on a partition that
    does not match its dataset, or when a dataset violates its invariants.
    """
    pass

class SweepError(Error):
    """
    This exception is raised when a Gibbs sweep receives an invalid moving
    set or candidate list.
    """
    pass

class KernelError(Error):
    """
    This exception is raised when a Metropolis-Hastings kernel is called
    with an invalid observation pair or proposal context.
    """
    pass

class NoDisagreement(Error):
    """
    This exception is raised when the history window holds no pair of
    states that disagree on the co-clustering of any observation pair.
    """
    pass

class OrchestratorError(Error):
    """
    This exception is raised when an ensemble is misconfigured or driven
    out of order.
    """
    pass

class DiagnosticsError(Error):
    """
    This exception is raised when a convergence statistic cannot be
    computed from the given series.
    """
    pass

class DataError(Error):
    """
    This exception is raised when an input file is malformed or a data
    transform is given an out of range argument.
    """
    pass

class OracleError(Error):
    """
    This exception is raised when an exact enumeration is requested for a
    problem that is too large.
    """
    pass

class ConfigError(Error):
    """
    This exception is raised when a configuration key is unknown or its
    value cannot be parsed.
    """
    pass

#----------------------------------------------------------------------
# Warnings

class DegenerateStatisticWarning(UserWarning):
    """
    Issued when a statistic falls back to its degenerate definition, for
    instance the autocorrelation time of a constant series.
    """
    pass

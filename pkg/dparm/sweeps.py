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
Gibbs sweep primitives.

A sweep jointly reassigns a set C of observations to one block of a
candidate list I. Candidates are labels of blocks of the working
partition or :data:`~dparm.models.NEW`. Every kernel of
:mod:`dparm.kernels` is assembled from the three primitives of this
module:

* :func:`restricted_sweep` draws the destination,
* :func:`forced_sweep` imposes it and reports its probability,
* :func:`full_sweep_step` uses every block plus the empty block.

All sweeps work in place on a :class:`~dparm.models.SufficientStats`.
A :class:`~dparm.partitions.Partition` may be passed instead, in which
case the sweep works on a private copy and returns the resulting
partition in :attr:`SweepResult.partition`.

Random decisions go through a chooser, an object with a
``choose(probs, step=None)`` method returning the index of the realized
candidate. :class:`RandomChooser` draws one uniform number per call and
inverts the cumulative distribution; the oracle and the forced replay
substitute scripted choosers.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from dparm.exceptions import PartitionError, SweepError
from dparm.models import NEW, SufficientStats
from dparm.partitions import Partition

logger = logging.getLogger(__name__)


#-----------------------------------------------------------------------------
# Choosers

@dataclass
class SweepStep:
    """What a chooser may inspect before deciding: the moving set, the
    resolved candidate labels and the working statistics with C removed."""
    C: np.ndarray
    candidates: List[int]
    stats: SufficientStats
    extra: Any = None


class RandomChooser(object):
    """
    Inverse-CDF categorical draws from a :class:`numpy.random.Generator`,
    one uniform number per call.
    """
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def choose(self, probs, step: SweepStep=None):
        cdf = np.cumsum(probs)
        u = self.rng.random() * cdf[-1]
        k = int(np.searchsorted(cdf, u, side='right'))
        return min(k, len(probs) - 1)


class ScriptedChooser(object):
    """
    Follows a fixed prefix of indices, then always takes the first
    candidate with positive probability. Records the probabilities seen at
    every decision so that a caller can enumerate the alternatives.

    Parameters
    ----------
    script : sequence of int
        Indices to take at the first ``len(script)`` decisions.
    """
    def __init__(self, script: Sequence[int]=()):
        self.script = list(script)
        self.taken = []
        self.seen = []

    def choose(self, probs, step: SweepStep=None):
        position = len(self.taken)
        if position < len(self.script):
            k = self.script[position]
        else:
            k = int(np.flatnonzero(np.asarray(probs) > 0)[0])
        self.taken.append(k)
        self.seen.append(np.asarray(probs, dtype=float))
        return k


class _Fixed(object):
    def __init__(self, k):
        self.k = k

    def choose(self, probs, step=None):
        return self.k


def as_chooser(rng):
    """
    Wrap a random source into a chooser.

    Parameters
    ----------
    rng : numpy.random.Generator, int, None or chooser
        Objects with a ``choose`` method are returned unchanged; seeds and
        None are passed to :func:`numpy.random.default_rng`.
    """
    if hasattr(rng, 'choose'):
        return rng
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return RandomChooser(rng)

def choose(rng, probs):
    """Draw one index from the categorical distribution ``probs``."""
    return as_chooser(rng).choose(np.asarray(probs, dtype=float))


#-----------------------------------------------------------------------------
# Sweeps

@dataclass
class SweepResult:
    """
    Outcome of one sweep.

    Attributes
    ----------
    index : int
        Position k of the realized candidate in I.
    prob : float
        Normalized weight pi_k of the realized candidate.
    log_prob : float
        log pi_k.
    probs : numpy.ndarray
        Normalized weights of every candidate; they sum to one.
    label : int
        Label of the block now holding C.
    partition : Partition, optional
        Resulting partition when the sweep was given a Partition.
    """
    index: int
    prob: float
    log_prob: float
    probs: np.ndarray
    label: int
    partition: Optional[Partition] = field(default=None, repr=False)


def _prepare(model, z):
    if isinstance(z, Partition):
        return model.new_stats(z), True
    if isinstance(z, SufficientStats):
        return z, False
    raise TypeError("z should be a Partition or SufficientStats")

def _sweep(model, z, C, I, pick, extra=None):
    stats, snapshot = _prepare(model, z)
    C = np.unique(np.asarray(C, dtype=np.intp))
    if len(C) == 0:
        raise SweepError("the moving set must be non-empty")
    I = [NEW if t is None else int(t) for t in I]
    if not I:
        raise SweepError("the candidate list must be non-empty")
    existing = [t for t in I if t != NEW]
    if len(set(existing)) != len(existing):
        raise SweepError("the candidate list holds duplicate blocks")
    try:
        source = stats.source_of(C)
    except PartitionError as err:
        raise SweepError("the moving set straddles several blocks") from err
    for t in existing:
        if not stats.is_alive(t):
            raise SweepError("candidate %s is not a block of the partition" % t)

    if source != NEW:
        stats.remove(C)
    stay = source if source != NEW and stats.is_alive(source) else NEW
    candidates = [stay if t == source and source != NEW else t for t in I]

    log_w = np.full(len(candidates), -np.inf)
    first = {}
    for k, t in enumerate(candidates):
        first.setdefault(t, k)
    unique = sorted(first.values())
    log_w[unique] = stats.gains(C, [candidates[k] for k in unique])
    log_probs = log_w - logsumexp(log_w)
    probs = np.exp(log_probs)

    k = pick.choose(probs, SweepStep(C, candidates, stats, extra))
    if not 0 <= k < len(candidates):
        raise SweepError("candidate index %s out of range" % k)
    label = stats.add(C, candidates[k])
    result = SweepResult(k, float(probs[k]), float(log_probs[k]), probs, label)
    if snapshot:
        result.partition = stats.partition()
    return result

def restricted_sweep(model, z, C, I, rng, extra=None):
    """
    Jointly reassign C to one candidate of I, drawn with probability
    proportional to q.

    Parameters
    ----------
    model : ConjugateModel
    z : SufficientStats or Partition
        Working partition, modified in place when statistics are given.
    C : sequence of int
        Observations to move; inside one block of z or uncovered.
    I : sequence of int
        Candidate labels, :data:`~dparm.models.NEW` for the empty block.
        When C sits in a block listed in I, that candidate stands for the
        block's remainder, or for a new block if C was all of it.
    rng : numpy.random.Generator or chooser
    extra : object, optional
        Passed to the chooser along with the step.

    Returns
    -------
    SweepResult

    Raises
    ------
    SweepError
        If C is empty or straddles blocks, or I is empty, holds a duplicate
        or a label that is not a block.

    Notes
    -----
    A candidate that coincides with an earlier one, the stay candidate
    resolving to a new block while I also lists the empty block, keeps
    weight zero so that the outcome is counted once.
    """
    return _sweep(model, z, C, I, as_chooser(rng), extra)

def forced_sweep(model, z, C, I, k: int):
    """
    Assign C to candidate k of I and return the probability
    :func:`restricted_sweep` would have given to that choice.
    """
    return _sweep(model, z, C, I, _Fixed(int(k)))

def full_candidates(stats: SufficientStats):
    """Every block of the working partition followed by the empty block."""
    return stats.alive().tolist() + [NEW]

def full_sweep_step(model, z, C, rng, extra=None):
    """
    Unrestricted sweep: :func:`restricted_sweep` with every block of z and
    one empty block as candidates.
    """
    stats, snapshot = _prepare(model, z)
    result = _sweep(model, stats, C, full_candidates(stats), as_chooser(rng), extra)
    if snapshot:
        result.partition = stats.partition()
    return result

def gibbs_sweep(model, z, rng, order: Sequence[int]=None):
    """
    One full Gibbs sweep: every observation is updated once by
    :func:`full_sweep_step`, in ``order`` (ascending index by default).

    Returns
    -------
    SufficientStats or Partition
        The updated statistics, or a new partition when given one.
    """
    stats, snapshot = _prepare(model, z)
    chooser = as_chooser(rng)
    if order is None:
        order = range(stats.n)
    for h in order:
        _sweep(model, stats, [h], full_candidates(stats), chooser)
    return stats.partition() if snapshot else stats

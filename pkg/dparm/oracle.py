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
Exact enumeration for small problems.

The functions of this module are the reference the samplers are tested
against:

* :func:`enumerate_partitions` lists every partition of a small set,
* :func:`exact_posterior` normalizes the joint over all of them,
* :func:`direct_log_joint` evaluates the joint from the raw data, without
  the incremental statistics used by the samplers,
* :func:`enumerate_kernel_paths` walks every branch of a kernel and
  returns each final partition with the exact probability of its path.
"""
import logging
from dataclasses import dataclass
from math import lgamma, log
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import betaln, logsumexp

from dparm.exceptions import OracleError
from dparm.kernels import KERNELS, ProposalContext, propose
from dparm.models import BernoulliMixture, ConjugateModel, RelationalModel, UniformModel
from dparm.partitions import Partition, to_string
from dparm.sweeps import ScriptedChooser

logger = logging.getLogger(__name__)

MAX_ENUMERATED = 12
MAX_POSTERIOR = 10
MAX_LEAVES = 10 ** 7


#-----------------------------------------------------------------------------
# Partitions

def bell_number(n: int):
    """
    Number of partitions of n elements.

    Examples
    --------
    >>> [bell_number(n) for n in range(6)]
    [1, 1, 2, 5, 15, 52]
    """
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]

def enumerate_partitions(n: int):
    """
    Every partition of ``{0, ..., n-1}``, in restricted growth string order.

    The k-th element is labelled with the smallest label not used by an
    earlier element, or with any label already used, so the first
    partition is the single block and the last the all-singletons one.

    Parameters
    ----------
    n : int
        Between 1 and 12.

    Returns
    -------
    list of Partition

    Raises
    ------
    OracleError
        If n is out of range.

    Examples
    --------
    >>> [str(z) for z in enumerate_partitions(3)]
    ['1,2,3', '1,2;3', '1,3;2', '1;2,3', '1;2;3']
    """
    if not 1 <= n <= MAX_ENUMERATED:
        raise OracleError("n must lie in [1, %s], got %s" % (MAX_ENUMERATED, n))
    result = []
    labels = [0] * n
    peaks = [0] * n

    def grow(k):
        if k == n:
            result.append(Partition.from_labels(labels))
            return
        for label in range(peaks[k - 1] + 2):
            labels[k] = label
            peaks[k] = max(peaks[k - 1], label)
            grow(k + 1)

    grow(1)
    return result


@dataclass
class PartitionTable:
    """
    Partitions with exact probabilities.

    Attributes
    ----------
    partitions : list of Partition
    log_joint : numpy.ndarray
        Unnormalized log probabilities.
    probabilities : numpy.ndarray
        Normalized, summing to one.
    """
    partitions: List[Partition]
    log_joint: np.ndarray
    probabilities: np.ndarray

    @classmethod
    def from_log_joint(cls, partitions, log_joint):
        log_joint = np.asarray(log_joint, dtype=float)
        return cls(list(partitions), log_joint, np.exp(log_joint - logsumexp(log_joint)))

    def __len__(self):
        return len(self.partitions)

    def probability_of(self, z: Partition):
        """Probability of z, zero if z is not listed."""
        for candidate, p in zip(self.partitions, self.probabilities):
            if candidate == z:
                return float(p)
        return 0.0

    def mode(self):
        return self.partitions[int(np.argmax(self.probabilities))]

    def to_frame(self):
        """One row per partition: canonical string, log joint, probability."""
        return pd.DataFrame({'partition': [to_string(z) for z in self.partitions],
                             'log_joint': self.log_joint,
                             'probability': self.probabilities})

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def exact_posterior(model: ConjugateModel):
    """
    Posterior over all partitions of the model's observations.

    Parameters
    ----------
    model : ConjugateModel
        At most ten observations.

    Returns
    -------
    PartitionTable

    Raises
    ------
    OracleError
        If the model has more than ten observations.

    Examples
    --------
    >>> table = exact_posterior(UniformModel(2))
    >>> table.probabilities.round(6).tolist()
    [0.5, 0.5]
    """
    if model.n > MAX_POSTERIOR:
        raise OracleError("exact posterior limited to %s observations, got %s"
                          % (MAX_POSTERIOR, model.n))
    partitions = enumerate_partitions(model.n)
    return PartitionTable.from_log_joint(partitions, [model.log_joint(z) for z in partitions])


#-----------------------------------------------------------------------------
# Direct evaluation

def _direct_crp(sizes, alpha):
    total = sum(sizes)
    return (lgamma(alpha) + len(sizes) * log(alpha) - lgamma(alpha + total)
            + sum(lgamma(s) for s in sizes))

def _beta_term(ones, dyads, params):
    return float(betaln(ones + params.beta_plus, dyads - ones + params.beta_minus)
                 - betaln(params.beta_plus, params.beta_minus))

def direct_log_joint(model: ConjugateModel, z: Partition):
    """
    log q(z) recomputed from the raw data block by block.

    Every Beta term is rebuilt from the feature matrix or the adjacency
    matrix with plain loops, sharing nothing with the statistics of
    :mod:`dparm.models`.

    Raises
    ------
    OracleError
        If z does not cover every observation or the model type is unknown.
    """
    if z.n != model.n or not z.is_full():
        raise OracleError("z must partition all %s observations" % model.n)
    params = model.params
    blocks = [list(block) for block in z.blocks]
    total = _direct_crp([len(block) for block in blocks], params.alpha)
    if isinstance(model, BernoulliMixture):
        matrix = model.data.matrix
        for block in blocks:
            for row in matrix:
                ones = sum(int(row[x]) for x in block)
                total += _beta_term(ones, len(block), params)
    elif isinstance(model, RelationalModel):
        adjacency = model.network.adjacency
        for k, first in enumerate(blocks):
            for second in blocks[k:]:
                if first is second:
                    pairs = [(u, v) for a, u in enumerate(first) for v in first[a + 1:]]
                else:
                    pairs = [(u, v) for u in first for v in second]
                ones = sum(int(adjacency[u, v]) for u, v in pairs)
                total += _beta_term(ones, len(pairs), params)
    elif not isinstance(model, UniformModel):
        raise OracleError("no direct evaluation for %s" % type(model).__name__)
    return total

def exact_conditional(model: ConjugateModel, z: Partition, C: Sequence[int]):
    """
    Exact distribution of the block of C given the rest of z.

    C is removed from z and joined, as a whole, to every remaining block
    and to a new block; the joints of these completions are evaluated by
    :func:`direct_log_joint` and normalized.

    Returns
    -------
    PartitionTable
    """
    C = set(int(x) for x in C)
    if not C:
        raise OracleError("C must be non-empty")
    rest = [set(block) - C for block in z.blocks]
    rest = [block for block in rest if block]
    completions = [Partition(rest[:k] + [rest[k] | C] + rest[k + 1:], n=z.n)
                   for k in range(len(rest))]
    completions.append(Partition(rest + [C], n=z.n))
    return PartitionTable.from_log_joint(completions,
                                         [direct_log_joint(model, c) for c in completions])


#-----------------------------------------------------------------------------
# Kernel branches

@dataclass
class KernelPath:
    """
    One leaf of the branch enumeration.

    Attributes
    ----------
    choices : tuple of int
        Index taken at every categorical decision.
    partition : Partition
        Final state z*.
    probability : float
        Product of the probabilities of the choices.
    log_t : float
        log T(z*|z) as reported by the kernel.
    kind : str
    """
    choices: Tuple[int, ...]
    partition: Partition
    probability: float
    log_t: float
    kind: str


def enumerate_kernel_paths(kernel: str, model: ConjugateModel, z: Partition,
                           ctx: ProposalContext, L: int=1, order: Sequence[int]=None,
                           limit: int=MAX_LEAVES):
    """
    Walk every branch of a kernel by depth-first search over scripted
    choices.

    Each run follows a script prefix and then takes the first candidate
    with positive probability; every other positive candidate seen after
    the prefix becomes a new prefix. Branches of probability zero are not
    followed.

    Parameters
    ----------
    kernel : str
        One of :data:`~dparm.kernels.KERNELS`.
    model : ConjugateModel
    z : Partition
        Current state.
    ctx : ProposalContext
        Pair, and past states for the adaptive kernels.
    L : int, default: 1
        Intermediate sweeps of the split-merge kernels.
    order : sequence of int, optional
    limit : int
        Maximum number of leaves.

    Returns
    -------
    list of KernelPath

    Raises
    ------
    OracleError
        If the kernel is unknown or the walk exceeds ``limit`` leaves.
    """
    if kernel not in KERNELS:
        raise OracleError("unknown kernel '%s'" % kernel)
    paths = []
    stack = [()]
    while stack:
        script = stack.pop()
        chooser = ScriptedChooser(script)
        outcome = propose(kernel, model, z, ctx, rng=chooser, L=L, order=order, reverse=False)
        probability = float(np.prod([probs[k] for probs, k in zip(chooser.seen, chooser.taken)]))
        paths.append(KernelPath(tuple(chooser.taken), outcome.partition, probability,
                                outcome.log_t_fwd, outcome.kind))
        if len(paths) > limit:
            raise OracleError("more than %s leaves" % limit)
        for position in range(len(chooser.taken) - 1, len(script) - 1, -1):
            probs = chooser.seen[position]
            for k in np.flatnonzero(probs > 0)[::-1].tolist():
                if k != chooser.taken[position]:
                    stack.append(tuple(chooser.taken[:position]) + (k,))
    logger.debug("%s: %s leaves from %s", kernel, len(paths), z)
    return paths

def proposal_distribution(paths: Sequence[KernelPath]):
    """Total path probability per final partition, as a pandas Series."""
    frame = pd.DataFrame({'partition': [to_string(p.partition) for p in paths],
                          'probability': [p.probability for p in paths]})
    return frame.groupby('partition', sort=True)['probability'].sum()


#-----------------------------------------------------------------------------
# Frequencies

def compare_frequencies(partitions: Sequence, table: PartitionTable):
    """
    Empirical frequencies of sampled partitions against exact
    probabilities.

    Parameters
    ----------
    partitions : sequence of Partition or str
        Sampled states.
    table : PartitionTable

    Returns
    -------
    pandas.DataFrame
        Columns ``partition``, ``empirical``, ``exact``, ``deviation``, one
        row per partition of the table.
    """
    keys = pd.Series([p if isinstance(p, str) else to_string(p) for p in partitions])
    if keys.empty:
        raise OracleError("no sampled partitions")
    counts = keys.value_counts()
    frame = table.to_frame()[['partition', 'probability']].rename(columns={'probability': 'exact'})
    unknown = set(counts.index) - set(frame['partition'])
    if unknown:
        raise OracleError("sampled partitions outside the table: %s" % sorted(unknown)[:5])
    frame['empirical'] = frame['partition'].map(counts).fillna(0).to_numpy() / len(keys)
    frame['deviation'] = (frame['empirical'] - frame['exact']).abs()
    return frame[['partition', 'empirical', 'exact', 'deviation']]

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
Conjugate partition models.

A model evaluates the marginalized joint ``q(z) = p(Y | z) p_CRP(z)`` of
a partition z, where the Chinese restaurant process prior is

    p_CRP(z | alpha) = Gamma(alpha) alpha^K / Gamma(alpha + n) prod_k Gamma(|B_k|)

and the block parameters of the likelihood are integrated out against Beta
priors. Two likelihoods are provided: the Bernoulli mixture over a binary
feature matrix and the infinite relational model over a symmetric binary
network. Both are evaluated in log-Gamma form.

Sweeps and kernels never re-evaluate q from scratch. They work on a
:class:`SufficientStats` object, the mutable working partition of one
chain, which keeps per-block counts and returns the change of log q when
a set of observations is placed into a block.
"""
import hashlib
import heapq
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from lazy import lazy
from scipy.special import betaln, gammaln

from dparm.exceptions import ModelError, PartitionError
from dparm.partitions import Partition

logger = logging.getLogger(__name__)

NEW = -1
"""Target marker for the empty candidate block (open a new block)."""


#-----------------------------------------------------------------------------
# Parameters and datasets

@dataclass(frozen=True)
class ModelParams:
    """
    Hyperparameters shared by the models.

    Parameters
    ----------
    alpha : float, default: 1.0
        CRP concentration.
    beta_plus : float, default: 1.0
        Beta pseudo-count of ones.
    beta_minus : float, default: 1.0
        Beta pseudo-count of zeros.
    """
    alpha: float = 1.0
    beta_plus: float = 1.0
    beta_minus: float = 1.0

    def __post_init__(self):
        for name in ('alpha', 'beta_plus', 'beta_minus'):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ModelError("%s must be strictly positive, got %s" % (name, value))


class FeatureDataset(object):
    """
    Binary feature matrix with d rows (features) and n columns
    (observations).

    Raises
    ------
    ModelError
        If the matrix is not two-dimensional or holds values other than 0/1.
    """
    def __init__(self, matrix):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise ModelError("feature matrix must be two-dimensional")
        if matrix.size and not np.isin(matrix, (0, 1)).all():
            raise ModelError("feature matrix entries must be 0 or 1")
        self.matrix = matrix.astype(np.int8)
        self.matrix.setflags(write=False)

    @property
    def d(self):
        return self.matrix.shape[0]

    @property
    def n(self):
        return self.matrix.shape[1]

    @classmethod
    def from_csv(cls, path):
        """Read a CSV of 0/1 values, d rows by n columns, no header."""
        frame = pd.read_csv(path, header=None)
        data = cls(frame.values)
        logger.debug("loaded %r from %s", data, path)
        return data

    def to_csv(self, path):
        """Write the matrix as a CSV of 0/1 values without header."""
        pd.DataFrame(self.matrix).to_csv(path, header=False, index=False)

    def sha256(self):
        return hashlib.sha256(np.ascontiguousarray(self.matrix).tobytes()).hexdigest()

    def __repr__(self):
        return "FeatureDataset(d=%s, n=%s)" % (self.d, self.n)


class NetworkDataset(object):
    """
    Symmetric binary adjacency matrix with zero diagonal.

    Raises
    ------
    ModelError
        If the matrix is not square, not symmetric, not binary or has a
        non-zero diagonal.
    """
    def __init__(self, adjacency):
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ModelError("adjacency matrix must be square")
        if adjacency.size and not np.isin(adjacency, (0, 1)).all():
            raise ModelError("adjacency entries must be 0 or 1")
        if not (adjacency == adjacency.T).all():
            raise ModelError("adjacency matrix must be symmetric")
        if np.diagonal(adjacency).any():
            raise ModelError("adjacency matrix must have a zero diagonal")
        self.adjacency = adjacency.astype(np.int8)
        self.adjacency.setflags(write=False)

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]], n: int):
        """
        Build a network on n vertices from 0-based (u, v) pairs. Edges are
        symmetrized and self-loops dropped.
        """
        adjacency = np.zeros((n, n), dtype=np.int8)
        for u, v in edges:
            if u != v:
                adjacency[u, v] = adjacency[v, u] = 1
        return cls(adjacency)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @lazy
    def degrees(self):
        return self.adjacency.sum(axis=1).astype(np.int64)

    def edges(self):
        """Undirected edges as 0-based (u, v) pairs with u < v."""
        rows, cols = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(rows.tolist(), cols.tolist()))

    def to_edge_list(self, path):
        """Write the edges as 1-based ``u v`` lines, u < v, after a vertex count comment."""
        frame = pd.DataFrame(self.edges(), columns=['u', 'v']) + 1
        with open(path, 'w', encoding='utf-8') as f:
            f.write("# %s vertices\n" % self.n)
            frame.to_csv(f, sep=' ', header=False, index=False)

    def sha256(self):
        return hashlib.sha256(np.ascontiguousarray(self.adjacency).tobytes()).hexdigest()

    def __repr__(self):
        return "NetworkDataset(n=%s, edges=%s)" % (self.n, len(self.edges()))


#-----------------------------------------------------------------------------
# CRP prior

def crp_log_density(z: Partition, alpha: float):
    """
    Log density of the Chinese restaurant process,
    ``log Gamma(alpha) + K log alpha - log Gamma(alpha + n) + sum_k log Gamma(|B_k|)``.

    Parameters
    ----------
    z : Partition
        A non-empty partition. n is taken as the number of covered
        observations.
    alpha : float
        Concentration, strictly positive.

    Returns
    -------
    float

    Raises
    ------
    ModelError
        If z is empty or alpha is not positive.

    Examples
    --------
    >>> round(float(np.exp(crp_log_density(Partition([[0, 1]]), 1.0))), 6)
    0.5
    """
    if len(z) == 0:
        raise ModelError("the CRP density is undefined for an empty partition")
    if alpha <= 0:
        raise ModelError("alpha must be strictly positive")
    sizes = np.asarray(z.sizes(), dtype=float)
    m = sizes.sum()
    return float(gammaln(alpha) + len(sizes) * np.log(alpha) - gammaln(alpha + m)
                 + gammaln(sizes).sum())


#-----------------------------------------------------------------------------
# Sufficient statistics

class SufficientStats(object):
    """
    Mutable working partition of one chain, with the per-block counts of
    its model.

    Observations are either covered by a block, identified by an integer
    label in ``range(n)``, or uncovered (label -1). Freed labels are
    reused smallest first so that the labeling is a deterministic function
    of the sequence of operations.

    The central query is :meth:`gains`: for an uncovered set C and a list
    of targets it returns ``log q(z + C -> t) - log q(z)`` for every
    target t, where t is an existing label or :data:`NEW`.

    Notes
    -----
    Instances belong to a single chain and are never shared between
    threads.
    """

    def __init__(self, model):
        n = model.n
        self.model = model
        self.n = n
        self.labels = np.full(n, -1, dtype=np.intp)
        self.sizes = np.zeros(n, dtype=np.int64)
        self.members = [set() for _ in range(n)]
        self._free = list(range(n))
        self.covered = 0

    #-------------------------------------------------------------------------
    # structure

    @property
    def n_blocks(self):
        return self.n - len(self._free)

    def alive(self):
        """Labels of the non-empty blocks, ascending."""
        return np.flatnonzero(self.sizes > 0)

    def label_of(self, i: int):
        """Label of the block holding i, -1 if i is uncovered."""
        return int(self.labels[i])

    def source_of(self, C):
        """
        Label of the block holding all of C, or :data:`NEW` if C is
        entirely uncovered.

        Raises
        ------
        PartitionError
            If C straddles two blocks or is partially covered.
        """
        labels = self.labels[np.asarray(C, dtype=np.intp)]
        first = labels[0]
        if (labels != first).any():
            raise PartitionError("the moving set must lie inside one block or be uncovered")
        return int(first) if first >= 0 else NEW

    def block(self, label: int):
        """Sorted members of a block."""
        return sorted(self.members[label])

    def is_alive(self, label: int):
        return 0 <= label < self.n and self.sizes[label] > 0

    def _allocate(self, label=None):
        if label is None or label == NEW:
            return heapq.heappop(self._free)
        self._free.remove(label)
        heapq.heapify(self._free)
        return label

    def add(self, C, label: int=NEW):
        """
        Place the uncovered set C into block ``label`` (or a new block).

        Returns
        -------
        int
            The label of the receiving block.
        """
        C = np.asarray(C, dtype=np.intp)
        if (self.labels[C] >= 0).any():
            raise PartitionError("observations %s are already covered" % C[self.labels[C] >= 0].tolist())
        if label is None or label == NEW or self.sizes[label] == 0:
            label = self._allocate(label if label is not None and label != NEW else None)
        self._count(C, label, 1)
        self.labels[C] = label
        self.sizes[label] += len(C)
        self.members[label].update(C.tolist())
        self.covered += len(C)
        return label

    def remove(self, C):
        """
        Uncover the set C, which must lie inside one block.

        Returns
        -------
        int
            The label C was removed from. The label is freed if the block
            became empty.
        """
        C = np.asarray(C, dtype=np.intp)
        label = self.source_of(C)
        if label == NEW:
            raise PartitionError("observations %s are not covered" % C.tolist())
        self.labels[C] = -1
        self.sizes[label] -= len(C)
        self.members[label].difference_update(C.tolist())
        self.covered -= len(C)
        self._count(C, label, -1)
        if self.sizes[label] == 0:
            heapq.heappush(self._free, label)
        return label

    def move(self, C, label: int=NEW):
        """Move C, covered or not, into ``label``. Returns the receiving label."""
        if self.source_of(C) != NEW:
            self.remove(C)
        return self.add(C, label)

    #-------------------------------------------------------------------------
    # evaluation

    def gains(self, C, targets):
        """
        Change of log q when the uncovered set C is placed in each target.

        Parameters
        ----------
        C : sequence of int
            Uncovered observations.
        targets : sequence of int
            Existing labels or :data:`NEW`.

        Returns
        -------
        numpy.ndarray
            One log gain per target.
        """
        C = np.asarray(C, dtype=np.intp)
        targets = np.asarray(targets, dtype=np.intp)
        is_new = targets == NEW
        existing = targets[~is_new]
        if (self.sizes[existing] == 0).any():
            raise PartitionError("targets must be existing blocks or NEW")
        alpha = self.model.params.alpha
        c = len(C)
        m = self.covered
        result = np.empty(len(targets), dtype=float)
        sizes = self.sizes[existing].astype(float)
        result[~is_new] = gammaln(sizes + c) - gammaln(sizes)
        result[is_new] = np.log(alpha) + gammaln(c)
        result -= gammaln(alpha + m + c) - gammaln(alpha + m)
        result += self._likelihood_gains(C, targets, is_new)
        return result

    def log_prior(self):
        """CRP log density of the covered part of the working partition."""
        alpha = self.model.params.alpha
        sizes = self.sizes[self.sizes > 0].astype(float)
        return float(gammaln(alpha) + len(sizes) * np.log(alpha)
                     - gammaln(alpha + self.covered) + gammaln(sizes).sum())

    def log_likelihood(self):
        return float(self._log_likelihood())

    def log_joint(self):
        """log q of the covered part of the working partition."""
        return self.log_likelihood() + self.log_prior()

    def partition(self):
        """Immutable snapshot, blocks ordered by label."""
        blocks = [tuple(sorted(self.members[label])) for label in self.alive()]
        return Partition(blocks, n=self.n, check=False)

    def copy(self):
        other = self.__class__.__new__(self.__class__)
        other.model = self.model
        other.n = self.n
        other.labels = self.labels.copy()
        other.sizes = self.sizes.copy()
        other.members = [set(m) for m in self.members]
        other._free = list(self._free)
        other.covered = self.covered
        self._copy_counts(other)
        return other

    #-------------------------------------------------------------------------
    # model hooks

    def _count(self, C, label, sign):
        """Update the counts for C entering (+1) or leaving (-1) ``label``.
        C is uncovered in ``self.labels`` when this is called."""
        pass

    def _likelihood_gains(self, C, targets, is_new):
        return np.zeros(len(targets))

    def _log_likelihood(self):
        return 0.0

    def _copy_counts(self, other):
        pass


class MixtureStats(SufficientStats):
    """
    Per block counts of ones ``N+_ik`` for every feature i; the zeros are
    ``|B_k| - N+_ik``.
    """
    def __init__(self, model):
        super().__init__(model)
        self._x = np.ascontiguousarray(model.data.matrix.T, dtype=np.int64)
        self.ones = np.zeros((self.n, model.data.d), dtype=np.int64)

    def _count(self, C, label, sign):
        self.ones[label] += sign * self._x[C].sum(axis=0)

    def _likelihood_gains(self, C, targets, is_new):
        bp, bm = self.model.params.beta_plus, self.model.params.beta_minus
        x = self._x[C].sum(axis=0).astype(float)
        c = float(len(C))
        rows = np.where(is_new, 0, targets)
        a = np.where(is_new[:, None], 0.0, self.ones[rows].astype(float))
        s = np.where(is_new, 0.0, self.sizes[rows].astype(float))[:, None]
        after = betaln(a + x + bp, s - a + c - x + bm)
        before = betaln(a + bp, s - a + bm)
        return (after - before).sum(axis=1)

    def _log_likelihood(self):
        bp, bm = self.model.params.beta_plus, self.model.params.beta_minus
        alive = self.alive()
        a = self.ones[alive].astype(float)
        s = self.sizes[alive].astype(float)[:, None]
        return (betaln(a + bp, s - a + bm) - betaln(bp, bm)).sum()

    def _copy_counts(self, other):
        other._x = self._x
        other.ones = self.ones.copy()


class RelationalStats(SufficientStats):
    """
    Edge counts between blocks. ``links[k, l]`` for k != l is the number of
    edges between blocks k and l; ``links[k, k]`` is the number of edges
    inside block k, each unordered dyad counted once. The dyad counts follow
    from the block sizes: ``|B_k| |B_l|`` between blocks and
    ``|B_k| (|B_k| - 1) / 2`` inside a block.
    """
    def __init__(self, model):
        super().__init__(model)
        self._adjacency = np.asarray(model.network.adjacency, dtype=np.int64)
        self.links = np.zeros((self.n, self.n), dtype=np.int64)

    def _edges_to_blocks(self, C):
        row = self._adjacency[C].sum(axis=0)
        covered = self.labels >= 0
        e = np.bincount(self.labels[covered], weights=row[covered], minlength=self.n)
        internal = int(self._adjacency[np.ix_(C, C)].sum()) // 2
        return np.rint(e).astype(np.int64), internal

    def _count(self, C, label, sign):
        e, internal = self._edges_to_blocks(C)
        self.links[label, :] += sign * e
        self.links[:, label] += sign * e
        self.links[label, label] += sign * (internal - e[label])

    def _pair_term(self, ones, dyads):
        bp, bm = self.model.params.beta_plus, self.model.params.beta_minus
        return betaln(ones + bp, dyads - ones + bm) - betaln(bp, bm)

    def _likelihood_gains(self, C, targets, is_new):
        e, internal = self._edges_to_blocks(C)
        c = float(len(C))
        alive = self.alive()
        sl = self.sizes[alive].astype(float)
        el = e[alive].astype(float)
        result = np.empty(len(targets), dtype=float)

        existing = targets[~is_new]
        if len(existing):
            st = self.sizes[existing].astype(float)
            between = self.links[np.ix_(existing, alive)].astype(float)
            off = (self._pair_term(between + el[None, :], (st[:, None] + c) * sl[None, :])
                   - self._pair_term(between, st[:, None] * sl[None, :]))
            off[existing[:, None] == alive[None, :]] = 0.0
            within = self.links[existing, existing].astype(float)
            diag = (self._pair_term(within + e[existing] + internal, (st + c) * (st + c - 1) / 2)
                    - self._pair_term(within, st * (st - 1) / 2))
            result[~is_new] = off.sum(axis=1) + diag
        if is_new.any():
            fresh = self._pair_term(el, c * sl).sum() + self._pair_term(float(internal), c * (c - 1) / 2)
            result[is_new] = fresh
        return result

    def _log_likelihood(self):
        alive = self.alive()
        s = self.sizes[alive].astype(float)
        ones = self.links[np.ix_(alive, alive)].astype(float)
        dyads = np.outer(s, s)
        np.fill_diagonal(dyads, s * (s - 1) / 2)
        upper = np.triu_indices(len(alive))
        return self._pair_term(ones[upper], dyads[upper]).sum()

    def _copy_counts(self, other):
        other._adjacency = self._adjacency
        other.links = self.links.copy()


#-----------------------------------------------------------------------------
# Models

class ConjugateModel(object):
    """
    Generic conjugate partition model. Subclasses bind a dataset and a
    :class:`SufficientStats` flavour.

    Parameters
    ----------
    n : int
        Number of observations.
    params : ModelParams, optional
        Hyperparameters, all equal to one by default.
    """
    stats_class = SufficientStats

    def __init__(self, n: int, params: ModelParams=None):
        self.n = int(n)
        self.params = params if params is not None else ModelParams()

    def new_stats(self, z: Partition=None):
        """
        Sufficient statistics of z, or of the empty partition.

        Raises
        ------
        ModelError
            If z is defined over a different number of observations.
        """
        stats = self.stats_class(self)
        if z is not None:
            if z.n != self.n:
                raise ModelError("partition over %s observations given to a model over %s"
                                 % (z.n, self.n))
            for block in z.blocks:
                stats.add(block, NEW)
        return stats

    def _check_full(self, z):
        if z.n != self.n or not z.is_full():
            raise ModelError("the partition must cover all %s observations" % self.n)

    def log_likelihood(self, z: Partition):
        """log p(Y | z) for a partition of all observations."""
        self._check_full(z)
        return self.new_stats(z).log_likelihood()

    def log_joint(self, z: Partition):
        """
        log q(z) = log p(Y | z) + log p_CRP(z | alpha).

        Raises
        ------
        ModelError
            If z does not partition all observations of the dataset.
        """
        self._check_full(z)
        return self.new_stats(z).log_likelihood() + crp_log_density(z, self.params.alpha)

    def delta_log_joint(self, stats: SufficientStats, C, target: int=NEW):
        """
        Change of log q when C is moved into ``target``.

        Parameters
        ----------
        stats : SufficientStats
            Working partition z; left unchanged on return.
        C : sequence of int
            Inside a single block of z, or uncovered.
        target : int
            Label of an existing block or :data:`NEW`. Naming C's own block
            means staying.

        Returns
        -------
        float
            ``log q(z') - log q(z)``; for uncovered C, z' is z with C added.

        Raises
        ------
        PartitionError
            If C straddles two blocks.
        """
        if target is None:
            target = NEW
        C = np.asarray(C, dtype=np.intp)
        source = stats.source_of(C)
        if source == NEW:
            return float(stats.gains(C, [target])[0])
        stats.remove(C)
        try:
            stay = source if stats.is_alive(source) else NEW
            if target == source:
                target = stay
            moved, stayed = stats.gains(C, [target, stay])
        finally:
            stats.add(C, source)
        return float(moved - stayed)


class UniformModel(ConjugateModel):
    """
    Model with a constant likelihood: q(z) is the CRP prior alone. Used as
    a reference in symmetry checks.
    """
    stats_class = SufficientStats


class BernoulliMixture(ConjugateModel):
    """
    Bernoulli mixture model over a binary feature matrix. Observation j
    carries the column ``A[:, j]``; block k draws a Beta distributed
    probability for each feature.

    Parameters
    ----------
    data : FeatureDataset or array_like
        d x n binary matrix.
    params : ModelParams, optional
    """
    stats_class = MixtureStats

    def __init__(self, data, params: ModelParams=None):
        if not isinstance(data, FeatureDataset):
            data = FeatureDataset(data)
        super().__init__(data.n, params)
        self.data = data


class RelationalModel(ConjugateModel):
    """
    Infinite relational model for a symmetric network. Every unordered
    pair of blocks k <= l, including the diagonal, draws a Beta
    distributed link probability; each unordered vertex pair is one
    Bernoulli dyad.

    Parameters
    ----------
    network : NetworkDataset or array_like
        n x n symmetric adjacency matrix.
    params : ModelParams, optional
    """
    stats_class = RelationalStats

    def __init__(self, network, params: ModelParams=None):
        if not isinstance(network, NetworkDataset):
            network = NetworkDataset(network)
        super().__init__(network.n, params)
        self.network = network


def log_joint(model: ConjugateModel, z: Partition):
    """Module-level alias of :meth:`ConjugateModel.log_joint`."""
    return model.log_joint(z)

def delta_log_joint(model: ConjugateModel, stats: SufficientStats, C, target: int=NEW):
    """Module-level alias of :meth:`ConjugateModel.delta_log_joint`."""
    return model.delta_log_joint(stats, C, target)

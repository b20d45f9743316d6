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
Partitions of observation indices and the set algebra the samplers are
written in.

A partition is an ordered list of disjoint, non-empty blocks. Blocks are
stored as ascending tuples so that ``B[0]`` is the smallest element of a
block. A partition does not need to cover every index in ``range(n)``:
proposals are assembled from partial partitions.

Indices are 0-based in memory and 1-based in the textual form
``"1,2;3"`` used by files.
"""
from typing import Iterable, Sequence

import numpy as np
import six
from lazy import lazy

from dparm.exceptions import PartitionError


class CanonicalPartition(tuple):
    """
    Label-order normalized encoding of a partition: a tuple of ascending
    tuples sorted by their smallest element. Two partitions are set-equal
    if and only if their canonical forms are equal, so the canonical form
    is used as a dictionary key by the oracle and the diagnostics.
    """
    def __str__(self):
        return ';'.join(','.join(str(x + 1) for x in block) for block in self)


class Partition(object):
    """
    Ordered list of disjoint non-empty blocks of observation indices.

    Parameters
    ----------
    blocks : iterable of iterables of int
        The blocks, in order. Each block is stored sorted.
    n : int, optional
        Total number of observations of the problem. Defaults to one more
        than the largest covered index.
    check : bool, default: True
        Sort the blocks and validate emptiness, disjointness and range,
        raising :class:`PartitionError`. With False the blocks must already
        be sorted; the same conditions are then asserted unless Python runs
        with ``-O``.

    Raises
    ------
    PartitionError
        If a block is empty, two blocks overlap or an index is outside
        ``range(n)``.

    Notes
    -----
    Instances are immutable. Equality and hashing follow the canonical
    form, i.e. two partitions are equal when they hold the same blocks in
    any order. Use :attr:`blocks` to compare block order.

    Examples
    --------
    >>> z = Partition([[0, 1], [2]])
    >>> len(z), z.n
    (2, 3)
    >>> str(z)
    '1,2;3'
    """

    def __init__(self, blocks: Iterable[Iterable[int]]=(), n: int=None, check: bool=True):
        if check:
            normalized = []
            for block in blocks:
                block = tuple(sorted(set(int(x) for x in block)))
                if not block:
                    raise PartitionError("blocks of a partition must be non-empty")
                normalized.append(block)
            seen = set()
            for block in normalized:
                if seen.intersection(block):
                    raise PartitionError("blocks of a partition must be pairwise disjoint")
                seen.update(block)
            largest = max(seen) if seen else -1
            if n is None:
                n = largest + 1
            if n < 0 or largest >= n or (seen and min(seen) < 0):
                raise PartitionError("indices must lie in range(%s)" % n)
            self._blocks = tuple(normalized)
        else:
            self._blocks = tuple(tuple(block) for block in blocks)
            if n is None:
                n = max((block[-1] for block in self._blocks), default=-1) + 1
        self._n = int(n)
        if __debug__ and not check:
            assert self._well_formed(), "malformed blocks %r for n=%s" % (self._blocks, n)

    def _well_formed(self):
        seen = set()
        for block in self._blocks:
            if not block or list(block) != sorted(set(block)):
                return False
            if block[0] < 0 or block[-1] >= self._n or seen.intersection(block):
                return False
            seen.update(block)
        return True

    @classmethod
    def from_labels(cls, labels: Sequence[int]):
        """
        Build a partition from a label vector. Negative labels mark
        uncovered observations. Blocks are ordered by their smallest
        element.
        """
        labels = np.asarray(labels)
        groups = {}
        for index, label in enumerate(labels.tolist()):
            if label >= 0:
                groups.setdefault(label, []).append(index)
        return cls(list(groups.values()), n=len(labels), check=False)

    @classmethod
    def singletons(cls, n: int):
        """Partition of ``range(n)`` into n singleton blocks."""
        return cls([(i,) for i in range(n)], n=n, check=False)

    @classmethod
    def from_string(cls, text: str, n: int=None):
        """
        Parse the 1-based textual form, e.g. ``"1,2;3"``.

        Raises
        ------
        PartitionError
            If the text is malformed or violates the partition invariants.
        """
        if not isinstance(text, six.string_types):
            raise TypeError("text should be a string")
        text = text.strip()
        if not text:
            return cls([], n=n if n is not None else 0)
        try:
            blocks = [[int(x) - 1 for x in chunk.split(',')] for chunk in text.split(';')]
        except ValueError:
            raise PartitionError("cannot parse partition '%s'" % text)
        return cls(blocks, n=n)

    @property
    def blocks(self):
        """The blocks as a tuple of ascending tuples, in list order."""
        return self._blocks

    @property
    def n(self):
        """Total number of observations of the problem."""
        return self._n

    @lazy
    def covered(self):
        """Frozen set of the observations covered by the partition."""
        return frozenset(x for block in self._blocks for x in block)

    @lazy
    def labels(self):
        """
        Label vector of length n: the position of the block holding each
        observation, -1 for uncovered observations.
        """
        labels = np.full(self._n, -1, dtype=np.intp)
        for k, block in enumerate(self._blocks):
            labels[list(block)] = k
        labels.setflags(write=False)
        return labels

    @lazy
    def canonical(self):
        """The :class:`CanonicalPartition` of this partition."""
        return CanonicalPartition(sorted(self._blocks, key=lambda block: block[0]))

    def is_full(self):
        """True if the partition covers every index in ``range(n)``."""
        return len(self.covered) == self._n

    def sizes(self):
        """Block sizes, in list order."""
        return [len(block) for block in self._blocks]

    def __len__(self):
        return len(self._blocks)

    def __iter__(self):
        return iter(self._blocks)

    def __getitem__(self, k):
        return self._blocks[k]

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.canonical == other.canonical

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash(self.canonical)

    def __str__(self):
        return to_string(self, canonical=False)

    def __repr__(self):
        return "Partition('%s', n=%s)" % (to_string(self, canonical=False), self._n)


#-----------------------------------------------------------------------------
# Set algebra

def block_of(z: Partition, i: int):
    """
    Return the unique block of z containing observation i.

    Raises
    ------
    PartitionError
        If i is not covered by z.

    Examples
    --------
    >>> block_of(Partition([[0, 1], [2]]), 1)
    (0, 1)
    """
    if not 0 <= i < z.n or z.labels[i] < 0:
        raise PartitionError("observation %s is not covered by the partition" % i)
    return z.blocks[z.labels[i]]

def remove_set(z: Partition, A: Iterable[int]):
    """
    Remove the set A from every block of z, dropping the blocks that become
    empty. The order of the surviving blocks is preserved.
    """
    A = frozenset(A)
    if not A:
        return z
    blocks = []
    for block in z.blocks:
        rest = tuple(x for x in block if x not in A)
        if rest:
            blocks.append(rest)
    return Partition(blocks, n=z.n, check=False)

def restrict(z: Partition, A: Iterable[int]):
    """Keep only the members of A in every block of z."""
    A = frozenset(A)
    blocks = []
    for block in z.blocks:
        kept = tuple(x for x in block if x in A)
        if kept:
            blocks.append(kept)
    return Partition(blocks, n=z.n, check=False)

def concat(za: Partition, zb: Partition):
    """
    Concatenate the blocks of zb after the blocks of za.

    Raises
    ------
    PartitionError
        If za and zb cover overlapping observations.
    """
    if za.covered & zb.covered:
        raise PartitionError("cannot concatenate overlapping partitions")
    return Partition(za.blocks + zb.blocks, n=max(za.n, zb.n), check=False)

def coarsest_common_refinement(z: Partition, *others: Partition):
    """
    Coarsest common refinement of two or more partitions, the set of all
    non-empty intersections of their blocks.

    The refinement of three partitions is obtained by pairwise application,
    which this function does for any number of arguments. Output blocks are
    ordered by their smallest element.

    Raises
    ------
    PartitionError
        If the partitions do not cover the same observations.

    Examples
    --------
    >>> a = Partition.from_string('1,2,3;4,5')
    >>> b = Partition.from_string('1,2;3,4,5')
    >>> str(coarsest_common_refinement(a, b))
    '1,2;3;4,5'
    """
    result = z
    for other in others:
        if result.covered != other.covered:
            raise PartitionError("refinement requires partitions covering the same observations")
        groups = {}
        for x in sorted(result.covered):
            key = (result.labels[x], other.labels[x])
            groups.setdefault(key, []).append(x)
        result = Partition(groups.values(), n=max(result.n, other.n), check=False)
    return result

def relabel(z: Partition, perm: Sequence[int]):
    """
    Replace every index i by perm[i].

    Raises
    ------
    PartitionError
        If perm is not a bijection of ``range(z.n)``.
    """
    perm = [int(p) for p in perm]
    if len(perm) != z.n or sorted(perm) != list(range(z.n)):
        raise PartitionError("relabeling map must be a permutation of range(%s)" % z.n)
    return Partition([[perm[x] for x in block] for block in z.blocks], n=z.n)

def merge_blocks(z: Partition, i: int, j: int):
    """
    Return z with the blocks holding i and j merged. The merged block takes
    the position of the first of the two.
    """
    zi, zj = block_of(z, i), block_of(z, j)
    if zi == zj:
        return z
    blocks = []
    for block in z.blocks:
        if block == zi:
            blocks.append(tuple(sorted(zi + zj)))
        elif block != zj:
            blocks.append(block)
    return Partition(blocks, n=z.n, check=False)

def co_clustered(z: Partition, i: int, j: int):
    """True if i and j belong to the same block of z."""
    labels = z.labels
    return labels[i] >= 0 and labels[i] == labels[j]

def canonicalize(z: Partition):
    """Return the :class:`CanonicalPartition` of z."""
    return z.canonical

def to_string(z: Partition, canonical: bool=True):
    """
    1-based textual form of z, blocks separated by ';' and elements by ','.
    Canonical block order unless ``canonical`` is False.
    """
    blocks = z.canonical if canonical else z.blocks
    return ';'.join(','.join(str(x + 1) for x in block) for block in blocks)

def from_string(text: str, n: int=None):
    """Inverse of :func:`to_string`."""
    return Partition.from_string(text, n=n)

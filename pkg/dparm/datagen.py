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
Synthetic data and network ingestion.

* :func:`generate_bmm` draws the planted Bernoulli mixture benchmark:
  five components of twenty observations with the feature probabilities
  of :data:`MIXTURE_PROBABILITIES`.
* :func:`load_network` reads an edge list into a symmetric binary network,
  :func:`downsample` keeps the highest-degree vertices.
* :func:`planted_network` draws a planted partition network used as a
  stand-in for real networks.

Edge lists hold one ``u v`` pair of positive 1-based vertex labels per
line; lines starting with '#' are comments, except a ``# <n> vertices``
header declaring the vertex count.
"""
import logging
import re
from dataclasses import dataclass

import numpy as np

from dparm.exceptions import DataError
from dparm.models import FeatureDataset, NetworkDataset
from dparm.partitions import Partition

logger = logging.getLogger(__name__)

MIXTURE_PROBABILITIES = np.array([
    [.95, .95, .95, .95, .95, .95],
    [.05, .05, .05, .05, .95, .95],
    [.95, .05, .05, .95, .95, .95],
    [.05, .05, .05, .05, .05, .05],
    [.95, .95, .95, .95, .05, .05],
])
"""p(A_ij = 1 | z_j = k) for the five components and the first six features."""

FEATURE_COUNTS = (6, 8, 10)

VERTEX_HEADER = re.compile(r"^\s*#\s*(\d+)\s+vertices\s*$")


@dataclass(frozen=True)
class PlantedSpec:
    """
    Layout of the planted mixture benchmark.

    Attributes
    ----------
    d : int
        Number of features, one of 6, 8 or 10. Features beyond the sixth
        repeat the probabilities of the sixth.
    components : int
    size : int
        Observations per component.
    """
    d: int = 6
    components: int = 5
    size: int = 20

    def __post_init__(self):
        if self.d not in FEATURE_COUNTS:
            raise DataError("d must be one of %s, got %s" % (FEATURE_COUNTS, self.d))

    @property
    def n(self):
        return self.components * self.size

    def probabilities(self):
        """components x d matrix of feature probabilities."""
        table = MIXTURE_PROBABILITIES[:self.components]
        extra = np.repeat(table[:, -1:], self.d - table.shape[1], axis=1)
        return np.hstack([table, extra])

    def planted(self):
        """The planted partition: consecutive runs of ``size`` observations."""
        return Partition([range(k * self.size, (k + 1) * self.size)
                          for k in range(self.components)], n=self.n)


def generate_bmm(spec, seed=None):
    """
    Draw a planted Bernoulli mixture dataset.

    Parameters
    ----------
    spec : PlantedSpec or int
        Layout, or the number of features d.
    seed : int or numpy.random.Generator, optional

    Returns
    -------
    dataset : FeatureDataset
        d x 100 binary matrix.
    planted : Partition
        Five blocks of twenty observations.

    Raises
    ------
    DataError
        If d is not one of 6, 8 or 10.
    """
    if not isinstance(spec, PlantedSpec):
        spec = PlantedSpec(d=int(spec))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    planted = spec.planted()
    probabilities = spec.probabilities()[planted.labels].T
    matrix = (rng.random(probabilities.shape) < probabilities).astype(np.int8)
    return FeatureDataset(matrix), planted

def scaled_size(n: int, fraction: float):
    """Number of vertices kept at scale ``fraction``, at least one."""
    if not 0 < fraction <= 1:
        raise DataError("scale must lie in (0, 1], got %s" % fraction)
    return max(1, int(round(n * fraction)))


#-----------------------------------------------------------------------------
# Networks

def read_edge_list(path):
    """
    Parse an edge list into 0-based (u, v) pairs.

    A ``# <n> vertices`` comment line, as written by
    :func:`write_edge_list`, declares the number of vertices.

    Returns
    -------
    edges : list of (int, int)
    declared : int or None
        Vertex count of the header, None without one.

    Raises
    ------
    DataError
        On a line that is not two positive integers, or on a label beyond
        the declared vertex count.
    """
    edges = []
    declared = None
    with open(path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            header = VERTEX_HEADER.match(line)
            if header is not None:
                declared = int(header.group(1))
                continue
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            parts = line.replace(',', ' ').split()
            try:
                u, v = (int(x) for x in parts)
            except ValueError:
                raise DataError("%s:%s: expected 'u v', got '%s'" % (path, number, line))
            if u < 1 or v < 1:
                raise DataError("%s:%s: vertex labels start at 1" % (path, number))
            if declared is not None and max(u, v) > declared:
                raise DataError("%s:%s: vertex %s beyond the declared %s vertices"
                                % (path, number, max(u, v), declared))
            edges.append((u - 1, v - 1))
    return edges, declared

def load_network(path, n: int=None):
    """
    Load an edge list as a :class:`~dparm.models.NetworkDataset`.

    The adjacency matrix is symmetrized, thresholded at zero and its
    diagonal removed.

    Parameters
    ----------
    path : str
    n : int, optional
        Number of vertices; by default the count of the ``# <n> vertices``
        header, or the largest label without a header.

    Raises
    ------
    DataError
        On a malformed line or a label beyond n.
    """
    edges, declared = read_edge_list(path)
    largest = max((max(u, v) for u, v in edges), default=-1) + 1
    if n is None:
        n = largest if declared is None else declared
    if largest > n:
        raise DataError("%s: vertex %s beyond the declared %s vertices" % (path, largest, n))
    raw = np.zeros((n, n), dtype=np.int64)
    for u, v in edges:
        raw[u, v] += 1
    adjacency = ((raw + raw.T) > 0).astype(np.int8)
    np.fill_diagonal(adjacency, 0)
    network = NetworkDataset(adjacency)
    logger.debug("loaded %r from %s", network, path)
    return network

def write_edge_list(network: NetworkDataset, path):
    """Write the edges of a network as 1-based ``u v`` lines, u < v."""
    network.to_edge_list(path)

def downsample(network: NetworkDataset, m: int):
    """
    Keep the m first vertices ordered by degree, then label, both
    descending, and relabel them 0..m-1 in that order.

    Raises
    ------
    DataError
        If m is not in ``[1, n]``.

    Examples
    --------
    >>> from dparm.sampledata.fig3 import fig3
    >>> downsample(fig3, 2).n
    2
    """
    n = network.n
    if not 1 <= m <= n:
        raise DataError("m must lie in [1, %s], got %s" % (n, m))
    keep = retained_vertices(network, m)
    return NetworkDataset(network.adjacency[np.ix_(keep, keep)])

def retained_vertices(network: NetworkDataset, m: int):
    """Original 0-based labels of the vertices kept by :func:`downsample`."""
    labels = np.arange(network.n)
    return np.lexsort((-labels, -network.degrees))[:m].tolist()

def planted_network(n_blocks: int, block_size: int, p_in: float, p_out: float, seed=None):
    """
    Planted partition network: vertices in the same block are linked with
    probability ``p_in``, others with ``p_out``.

    Returns
    -------
    network : NetworkDataset
    planted : Partition
    """
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise DataError("link probabilities must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = n_blocks * block_size
    planted = Partition([range(k * block_size, (k + 1) * block_size) for k in range(n_blocks)], n=n)
    labels = planted.labels
    p = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < p, 1)
    adjacency = (upper | upper.T).astype(np.int8)
    return NetworkDataset(adjacency), planted

def fig3_network():
    """
    The four vertex network of the exact frequency test: vertex 0 linked
    to every other vertex, and vertices 2 and 3 linked.
    """
    return NetworkDataset.from_edges([(0, 1), (0, 2), (0, 3), (2, 3)], 4)

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
Multi-chain ensemble driver.

An ensemble advances S chains in lockstep epochs. Each chain owns a
random generator spawned from the run seed, so the result of a run does
not depend on how many threads execute the chains. Every chain keeps the
states it visited since iteration ``t // 2``; the adaptive kernels draw
their past states ``za`` and ``zb`` from this window, pooled over all
chains, as it stood at the start of the epoch.

One iteration of a chain is:

1. draw a random visiting order of the observations,
2. pick the proposal context: a random pair for ``sm`` and ``srm``, a
   pair of disagreeing past states and a disagreeing pair of
   observations for the adaptive kernels,
3. run the kernel and the Metropolis-Hastings accept step,
4. run one full Gibbs sweep when interlacing is on.

Per-move records are collected as rows of a trace table; wall-clock
timings are collected in a separate table.
"""
import logging
import os
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
import pandas as pd

from dparm.exceptions import (ConfigError, DegenerateStatisticWarning, NoDisagreement,
                              OrchestratorError)
from dparm.kernels import ADAPTIVE, KERNELS, ProposalContext, accept_move, propose
from dparm.models import ModelParams
from dparm.partitions import Partition, to_string
from dparm.sweeps import gibbs_sweep
from dparm.utils import Stopwatch, parse_bool, spawn_generators, timed

logger = logging.getLogger(__name__)

SAMPLERS = ('gibbs',) + KERNELS

TRACE_COLUMNS = ['iteration', 'chain', 'log_joint', 'n_blocks', 'move', 'accepted',
                 'log_t_fwd', 'log_t_rev', 'partition']
TIMING_COLUMNS = ['iteration', 'chain', 'kernel_ns', 'gibbs_ns']


#-----------------------------------------------------------------------------
# Configuration

@dataclass
class RunConfig:
    """
    Parameters of a sampling run.

    Attributes
    ----------
    sampler : {'gibbs', 'sm', 'bsm', 'srm', 'sarm', 'arm'}
    chains : int
        Number of chains S.
    iterations : int
        Number of iterations T after the warm-up.
    burn_in : float
        Fraction of every series discarded by the diagnostics.
    seed : int
        Run seed; every chain and restart stream is spawned from it.
    alpha, beta_plus, beta_minus : float
        Model hyperparameters.
    L : int
        Intermediate restricted sweeps of the split-merge kernels.
    restarts : int
        Number of independent restarts.
    warmup : int
        Gibbs sweeps run on every chain before sampling.
    interlace : bool
        Follow every kernel move by a full Gibbs sweep.
    threads : int, optional
        Worker threads, ``min(S, cpu count)`` by default.
    scale : float
        Fraction of the vertices of a network kept by downsampling.

    Raises
    ------
    ConfigError
        If a value is out of range.
    """
    sampler: str = 'arm'
    chains: int = 8
    iterations: int = 1000
    burn_in: float = 0.5
    seed: int = 0
    alpha: float = 1.0
    beta_plus: float = 1.0
    beta_minus: float = 1.0
    L: int = 5
    restarts: int = 1
    warmup: int = 50
    interlace: bool = True
    threads: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError("sampler must be one of %s, got '%s'" % (SAMPLERS, self.sampler))
        if self.chains < 1:
            raise ConfigError("chains must be at least 1")
        if self.iterations < 1:
            raise ConfigError("iterations must be at least 1")
        if not 0 <= self.burn_in < 1:
            raise ConfigError("burn_in must lie in [0, 1)")
        if self.L < 0 or self.warmup < 0:
            raise ConfigError("L and warmup must be non-negative")
        if self.restarts < 1:
            raise ConfigError("restarts must be at least 1")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 < self.scale <= 1:
            raise ConfigError("scale must lie in (0, 1]")
        if self.sampler in ADAPTIVE and self.chains < 2 and self.warmup < 1:
            raise ConfigError("adaptive samplers need two chains or a warm-up history")
        for name in ('alpha', 'beta_plus', 'beta_minus'):
            if getattr(self, name) <= 0:
                raise ConfigError("%s must be strictly positive" % name)

    @property
    def params(self):
        return ModelParams(self.alpha, self.beta_plus, self.beta_minus)

    @classmethod
    def from_mapping(cls, mapping, **overrides):
        """
        Build a configuration from strings, as read by
        :func:`dparm.utils.read_config`. Keyword overrides take
        precedence; None overrides are ignored.

        Raises
        ------
        ConfigError
            On unknown keys or values that cannot be converted.
        """
        types = {f.name: f.type for f in fields(cls)}
        values = dict(mapping)
        values.update({k: v for k, v in overrides.items() if v is not None})
        kwargs = {}
        for key, value in values.items():
            if key not in types:
                raise ConfigError("unknown configuration key '%s'" % key)
            kind = types[key]
            try:
                if value is None or (isinstance(value, str) and value.lower() in ('', 'none')):
                    if key != 'threads':
                        raise ConfigError("%s needs a value" % key)
                    kwargs[key] = None
                elif kind in (bool, 'bool'):
                    kwargs[key] = parse_bool(value)
                elif kind in (int, 'int') or key == 'threads':
                    kwargs[key] = int(value)
                elif kind in (float, 'float'):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = str(value)
            except ValueError:
                raise ConfigError("cannot convert %s='%s'" % (key, value))
        return cls(**kwargs)

    def to_dict(self):
        return asdict(self)


#-----------------------------------------------------------------------------
# Ensemble

class HistoryWindow(object):
    """
    States of all chains stored since iteration ``t // 2``.

    Entries are appended once per epoch for every chain and pruned from the
    front, so drawing an entry uniformly costs O(S). The number of entries
    per distinct partition is maintained alongside.

    Parameters
    ----------
    chains : int
    """
    def __init__(self, chains: int):
        self._states = [[] for _ in range(chains)]
        self._start = [0] * chains
        self.counts = Counter()
        self.t = 0

    @classmethod
    def from_entries(cls, entries):
        """Window holding the given ``(chain, iteration, Partition)`` entries."""
        entries = list(entries)
        chains = max((s for s, _, _ in entries), default=-1) + 1
        window = cls(chains)
        for s, t, z in sorted(entries, key=lambda entry: (entry[1], entry[0])):
            window._states[s].append((t, z))
            window.counts[z.canonical] += 1
            window.t = max(window.t, t)
        return window

    @property
    def low(self):
        return self.t // 2

    def append(self, t: int, partitions):
        """Store one state per chain at iteration t and prune below ``t // 2``."""
        self.t = t
        for s, z in enumerate(partitions):
            self._states[s].append((t, z))
            self.counts[z.canonical] += 1
        low = self.low
        for s, states in enumerate(self._states):
            start = self._start[s]
            while start < len(states) and states[start][0] < low:
                canonical = states[start][1].canonical
                self.counts[canonical] -= 1
                if not self.counts[canonical]:
                    del self.counts[canonical]
                start += 1
            if start > 1024 and start * 2 > len(states):
                del states[:start]
                start = 0
            self._start[s] = start

    def chain_size(self, s: int):
        return len(self._states[s]) - self._start[s] if s < len(self._states) else 0

    def chain_entry(self, s: int, k: int):
        return self._states[s][self._start[s] + k][1]

    def __len__(self):
        return sum(self.chain_size(s) for s in range(len(self._states)))

    def entry(self, k: int):
        """The k-th entry in chain-major order."""
        for s in range(len(self._states)):
            size = self.chain_size(s)
            if k < size:
                return self.chain_entry(s, k)
            k -= size
        raise IndexError("window index out of range")

    def entries(self):
        """All ``(chain, iteration, Partition)`` entries, chain-major."""
        return [(s, t, z) for s, states in enumerate(self._states)
                for t, z in states[self._start[s]:]]

    def distinct(self):
        """Number of distinct partitions in the window."""
        return len(self.counts)


class ChainEnsemble(object):
    """
    S chains with their current states, generators and shared history
    window.

    Parameters
    ----------
    model : ConjugateModel
    config : RunConfig
    seed : int or numpy.random.SeedSequence, optional
        Root of the chain streams, ``config.seed`` by default.

    Attributes
    ----------
    t : int
        Global iteration counter; warm-up sweeps count.
    states : list of SufficientStats
    history : HistoryWindow

    Notes
    -----
    The ensemble owns a thread pool; use it as a context manager or call
    :meth:`close`.
    """

    def __init__(self, model, config: RunConfig, seed=None):
        self.model = model
        self.config = config
        self.generators = spawn_generators(config.seed if seed is None else seed, config.chains)
        self.states = [model.new_stats(Partition.singletons(model.n))
                       for _ in range(config.chains)]
        self.history = HistoryWindow(config.chains)
        self.history.append(0, self.partitions())
        self.warned = False
        threads = config.threads or min(config.chains, os.cpu_count() or 1)
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    @property
    def S(self):
        return len(self.states)

    @property
    def t(self):
        return self.history.t

    def partitions(self):
        return [stats.partition() for stats in self.states]

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, ex_type, value, traceback):
        self.close()

    def _map(self, function):
        if self._pool is None:
            return [function(s) for s in range(self.S)]
        return list(self._pool.map(function, range(self.S)))

    def _sweep(self, s):
        rng = self.generators[s]
        gibbs_sweep(self.model, self.states[s], rng, rng.permutation(self.model.n))

    def warm_up(self, sweeps: int):
        """Advance every chain by full Gibbs sweeps in a random order, recording each state."""
        for _ in range(sweeps):
            self._map(self._sweep)
            self.history.append(self.t + 1, self.partitions())

    def _context(self, s, rng):
        n = self.model.n
        if self.config.sampler in ADAPTIVE:
            return select_context(self.history, s, rng)
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        return ProposalContext(i, j)

    def _advance(self, s, iteration):
        rng = self.generators[s]
        config = self.config
        model = self.model
        row = dict(iteration=iteration, chain=s, move='none', accepted=False,
                   log_t_fwd=np.nan, log_t_rev=np.nan)
        kernel_watch, gibbs_watch = Stopwatch(), Stopwatch()
        # one relabeling per iteration, shared by the kernel and the sweep
        order = rng.permutation(model.n)

        if config.sampler != 'gibbs' and model.n >= 2:
            with kernel_watch:
                try:
                    ctx = self._context(s, rng)
                except NoDisagreement:
                    ctx = None
                    row['move'] = 'skipped'
                if ctx is not None:
                    outcome = propose(config.sampler, model, self.states[s], ctx, rng,
                                      L=config.L, order=order)
                    accept_move(outcome, rng)
                    if outcome.accepted:
                        self.states[s] = outcome.state
                    row.update(move=outcome.kind, accepted=outcome.accepted,
                               log_t_fwd=outcome.log_t_fwd, log_t_rev=outcome.log_t_rev)

        if config.sampler == 'gibbs' or config.interlace:
            with gibbs_watch:
                gibbs_sweep(model, self.states[s], rng, order)

        stats = self.states[s]
        z = stats.partition()
        row.update(log_joint=stats.log_joint(), n_blocks=len(z), partition=to_string(z))
        timing = dict(iteration=iteration, chain=s, kernel_ns=kernel_watch.elapsed_ns,
                      gibbs_ns=gibbs_watch.elapsed_ns)
        return row, timing

    def step(self, iteration: int=None):
        """
        Advance every chain by one iteration. The chains read the window as
        it stood at the start of the call; the new states are appended once
        all chains are done.

        Returns
        -------
        rows, timings : list of dict
            One trace row and one timing row per chain, in chain order.
        """
        if iteration is None:
            iteration = self.t - self.config.warmup + 1
        results = self._map(lambda s: self._advance(s, iteration))
        self.history.append(self.t + 1, self.partitions())
        rows = [row for row, _ in results]
        if not self.warned and any(row['move'] == 'skipped' for row in rows):
            warnings.warn("no disagreeing pair of past states; kernel moves skipped",
                          DegenerateStatisticWarning)
            self.warned = True
        return rows, [timing for _, timing in results]


def init_ensemble(model, config: RunConfig, seed=None):
    """
    Create S chains in the all-singletons state and advance each by
    ``config.warmup`` full Gibbs sweeps.
    """
    ensemble = ChainEnsemble(model, config, seed)
    ensemble.warm_up(config.warmup)
    logger.debug("ensemble of %s chains warmed up for %s sweeps", ensemble.S, config.warmup)
    return ensemble

def disagreement_pairs(za: Partition, zb: Partition):
    """
    Pairs (i, j), i < j, that one partition co-clusters and the other does
    not.

    Examples
    --------
    >>> disagreement_pairs(Partition.from_string('1,2;3'), Partition.from_string('1;2,3'))
    [(0, 1), (1, 2)]
    """
    a = za.labels
    b = zb.labels
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    rows, cols = np.nonzero(np.triu(same_a != same_b, 1))
    return list(zip(rows.tolist(), cols.tolist()))

def select_context(window, s: int, rng):
    """
    Adaptive proposal context.

    The first state is drawn uniformly from chain s's entries of the
    window, the second uniformly from the entries holding a different
    partition. The pair (i, j) is drawn uniformly from the ordered pairs
    on which the two states disagree, and the states are oriented so that
    ``za`` co-clusters i and j.

    Parameters
    ----------
    window : HistoryWindow or list of (chain, iteration, Partition)
    s : int
        Chain receiving the context.
    rng : numpy.random.Generator

    Returns
    -------
    ProposalContext

    Raises
    ------
    NoDisagreement
        If every state of the window is the same partition.
    OrchestratorError
        If chain s has no state in the window.
    """
    if not isinstance(window, HistoryWindow):
        window = HistoryWindow.from_entries(window)
    size = window.chain_size(s)
    if not size:
        raise OrchestratorError("chain %s has no state in the window" % s)
    first = window.chain_entry(s, int(rng.integers(size)))
    total = len(window)
    if window.counts[first.canonical] == total:
        raise NoDisagreement("all states of the window induce the same partition")
    while True:
        second = window.entry(int(rng.integers(total)))
        if second != first:
            break
    pairs = disagreement_pairs(first, second)
    pick = int(rng.integers(2 * len(pairs)))
    i, j = pairs[pick // 2]
    if pick % 2:
        i, j = j, i
    return ProposalContext.oriented(i, j, first, second)

def step(ensemble: ChainEnsemble, iteration: int=None):
    """Module-level alias of :meth:`ChainEnsemble.step`."""
    return ensemble.step(iteration)

#-----------------------------------------------------------------------------
# Runs

class TraceWriter(object):
    """
    Appends trace rows to a CSV file epoch by epoch.

    Parameters
    ----------
    path : str
    columns : list of str
    """
    def __init__(self, path, columns):
        self.path = path
        self.columns = columns
        pd.DataFrame(columns=columns).to_csv(path, index=False)

    def write(self, rows):
        if rows:
            pd.DataFrame(rows, columns=self.columns).to_csv(self.path, mode='a', header=False,
                                                            index=False)

@timed
def run_chains(model, config: RunConfig, seed=None, trace_path: str=None,
               timing_path: str=None):
    """
    One restart: initialize the ensemble and run ``config.iterations``
    iterations.

    Parameters
    ----------
    model : ConjugateModel
    config : RunConfig
    seed : int or numpy.random.SeedSequence, optional
    trace_path, timing_path : str, optional
        Stream the trace and timing tables to these CSV files.

    Returns
    -------
    trace, timing : pandas.DataFrame
    """
    trace_writer = TraceWriter(trace_path, TRACE_COLUMNS) if trace_path else None
    timing_writer = TraceWriter(timing_path, TIMING_COLUMNS) if timing_path else None
    rows, timings = [], []
    with init_ensemble(model, config, seed) as ensemble:
        for iteration in range(1, config.iterations + 1):
            step_rows, step_timings = ensemble.step(iteration)
            rows.extend(step_rows)
            timings.extend(step_timings)
            if trace_writer:
                trace_writer.write(step_rows)
            if timing_writer:
                timing_writer.write(step_timings)
            if iteration % 100 == 0:
                logger.info("iteration %s/%s", iteration, config.iterations)
    return (pd.DataFrame(rows, columns=TRACE_COLUMNS),
            pd.DataFrame(timings, columns=TIMING_COLUMNS))

def restart_seeds(config: RunConfig):
    """Independent seed sequences, one per restart."""
    return np.random.SeedSequence(config.seed).spawn(config.restarts)

def run_restarts(model, config: RunConfig, out_dir: str=None):
    """
    Run ``config.restarts`` independent restarts.

    Returns
    -------
    list of (trace, timing)
        With ``out_dir``, the tables are also written there as
        ``trace_<r>.csv`` and ``timing_<r>.csv``.
    """
    results = []
    for r, seed in enumerate(restart_seeds(config)):
        paths = {}
        if out_dir:
            paths = dict(trace_path=os.path.join(out_dir, 'trace_%d.csv' % r),
                         timing_path=os.path.join(out_dir, 'timing_%d.csv' % r))
        logger.info("restart %s/%s with %s", r + 1, config.restarts, config.sampler)
        results.append(run_chains(model, config, seed, **paths))
    return results

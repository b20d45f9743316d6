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
Convergence and performance statistics computed from trace tables.

Every function here is a pure function of the trace files written by
:mod:`dparm.orchestrator`: the log joint, the block count and the
canonical partition of each chain at each iteration, plus the timing
table. Degenerate cases return their conventional value and emit a
:class:`~dparm.exceptions.DegenerateStatisticWarning`.
"""
import itertools
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
import six

from dparm.exceptions import DegenerateStatisticWarning, DiagnosticsError
from dparm.partitions import Partition, co_clustered

logger = logging.getLogger(__name__)

QUANTITIES = ('logjoint', 'topfrac', 'indicator')


#-----------------------------------------------------------------------------
# Series statistics

def autocorrelation_time(series):
    """
    Integrated autocorrelation time ``1 + 2 sum_{tau=1}^{m} r(tau)``.

    The sum is truncated before the first lag with a non-positive sample
    autocorrelation, so the estimate is never below one.

    Parameters
    ----------
    series : array_like
        At least 10 finite values.

    Returns
    -------
    float
        1.0 for a constant series, with a warning.

    Raises
    ------
    DiagnosticsError
        If the series is too short or holds non-finite values.

    Examples
    --------
    >>> autocorrelation_time([1, -1] * 10)
    1.0
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 10:
        raise DiagnosticsError("the autocorrelation time needs a series of at least 10 values")
    if not np.isfinite(x).all():
        raise DiagnosticsError("the series holds non-finite values")
    x = x - x.mean()
    n = len(x)
    spectrum = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(spectrum * np.conjugate(spectrum))[:n]
    if acf[0] <= 0:
        warnings.warn("constant series, autocorrelation time set to 1", DegenerateStatisticWarning)
        return 1.0
    r = acf / acf[0]
    non_positive = np.flatnonzero(r[1:] <= 0)
    m = non_positive[0] if len(non_positive) else n - 1
    return float(1.0 + 2.0 * r[1:m + 1].sum())

def _gelman_rubin(series, burn_in):
    arrays = [np.asarray(s, dtype=float) for s in series]
    if len(arrays) < 2:
        raise DiagnosticsError("the Gelman-Rubin statistic needs at least two restarts")
    kept = [a[int(np.floor(len(a) * burn_in)):] for a in arrays]
    n = min(len(a) for a in kept)
    if n < 4:
        raise DiagnosticsError("each restart needs at least 4 samples after burn-in")
    x = np.vstack([a[len(a) - n:] for a in kept])
    W = x.var(axis=1, ddof=1).mean()
    B = n * x.mean(axis=1).var(ddof=1)
    if W == 0:
        if B == 0:
            return 1.0, 'constant'
        return np.inf, 'zero-within'
    value = float(np.sqrt(((n - 1) / n * W + B / n) / W))
    return value, ('zero-between' if B == 0 else '')

def gelman_rubin(series, burn_in: float=0.5):
    """
    Potential scale reduction factor of one quantity over restarts.

    Parameters
    ----------
    series : sequence of array_like
        One series per restart.
    burn_in : float, default: 0.5
        Leading fraction of every series discarded.

    Returns
    -------
    float
        ``sqrt(((n-1)/n W + B/n) / W)`` with W the mean within-restart
        variance and B/n the variance of the restart means. 1.0 when all
        restarts are the same constant, +inf when they are different
        constants; both with a warning.

    Raises
    ------
    DiagnosticsError
        With fewer than two restarts or four samples per restart.
    """
    value, flag = _gelman_rubin(series, burn_in)
    if flag:
        warnings.warn("degenerate Gelman-Rubin statistic (%s)" % flag, DegenerateStatisticWarning)
    return value

def gelman_rubin_by_chain(traces: Sequence[pd.DataFrame], column: str='log_joint',
                          burn_in: float=0.5):
    """
    R-hat of ``column`` for every chain index, comparing the restarts.

    Returns
    -------
    pandas.Series
        Indexed by chain.
    """
    chains = sorted(set(traces[0]['chain']))
    values = {}
    for chain in chains:
        series = [trace.loc[trace['chain'] == chain].sort_values('iteration')[column].values
                  for trace in traces]
        values[chain] = gelman_rubin(series, burn_in)
    return pd.Series(values, name='rhat')


#-----------------------------------------------------------------------------
# Partition series

def _as_partitions(partitions):
    return [Partition.from_string(z) if isinstance(z, six.string_types) else z
            for z in partitions]

def block_fraction_trace(partitions, k: int=1):
    """
    Fraction of the observations held by the k largest blocks, per state.

    Parameters
    ----------
    partitions : iterable of Partition or str
    k : int, default: 1

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    DiagnosticsError
        If k < 1.

    Examples
    --------
    >>> block_fraction_trace(['1,2,3;4'], 1)
    array([0.75])
    """
    if k < 1:
        raise DiagnosticsError("k must be at least 1")
    values = []
    for z in _as_partitions(partitions):
        sizes = sorted(z.sizes(), reverse=True)
        values.append(sum(sizes[:k]) / sum(sizes))
    return np.asarray(values, dtype=float)

def indicator_series(partitions, pair):
    """
    1 where observations i and j share a block, 0 elsewhere.

    Raises
    ------
    DiagnosticsError
        If i equals j or one of them is not covered by a state.
    """
    i, j = pair
    if i == j:
        raise DiagnosticsError("the pair must hold two distinct observations")
    values = []
    for z in _as_partitions(partitions):
        if max(i, j) >= z.n or z.labels[i] < 0 or z.labels[j] < 0:
            raise DiagnosticsError("observations %s are not covered" % (pair,))
        values.append(1.0 if co_clustered(z, i, j) else 0.0)
    return np.asarray(values)

def select_indicator_observations(planted: Partition, blocks: int=5, per_block: int=3,
                                  rng=None):
    """
    Observations whose pairwise co-clustering is tracked: ``per_block``
    members of each of the ``blocks`` largest blocks of a reference
    partition, the first ones or, with ``rng``, drawn at random.
    """
    ordered = sorted(planted.blocks, key=lambda block: (-len(block), block[0]))[:blocks]
    if rng is None:
        return sorted(x for block in ordered for x in block[:per_block])
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    picked = []
    for block in ordered:
        picked.extend(rng.choice(block, size=min(per_block, len(block)), replace=False).tolist())
    return sorted(picked)

def max_indicator_autocorrelation(partitions, observations: Sequence[int]):
    """
    Largest autocorrelation time over the indicator series of all
    unordered pairs of ``observations``.
    """
    partitions = _as_partitions(partitions)
    worst = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', DegenerateStatisticWarning)
        for pair in itertools.combinations(observations, 2):
            worst = max(worst, autocorrelation_time(indicator_series(partitions, pair)))
    return worst

def standardized_iterations(kernel_time, gibbs_time, iterations):
    """
    Iterations expressed in units of full Gibbs sweeps:
    ``iterations * (kernel_time + gibbs_time) / gibbs_time``.

    Raises
    ------
    DiagnosticsError
        If the Gibbs time is not positive or the kernel time is negative.

    Examples
    --------
    >>> standardized_iterations(2.0, 1.0, 100)
    300.0
    """
    if gibbs_time <= 0:
        raise DiagnosticsError("the Gibbs time must be positive")
    if kernel_time < 0:
        raise DiagnosticsError("the kernel time must be non-negative")
    return float(iterations * (kernel_time + gibbs_time) / gibbs_time)

def accept_rate(trace: pd.DataFrame):
    """Percentage of kernel proposals accepted, NaN when none was made."""
    moves = trace.loc[trace['move'].isin(('split', 'merge'))]
    if moves.empty:
        return float('nan')
    return float(100.0 * moves['accepted'].astype(bool).mean())

def total_variation(p, q):
    """
    Total variation distance between two distributions given as mappings
    from outcomes to probabilities, or as aligned arrays.
    """
    if isinstance(p, dict) or isinstance(q, dict):
        p, q = dict(p), dict(q)
        keys = set(p) | set(q)
        return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    return float(0.5 * np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


#-----------------------------------------------------------------------------
# Reports

@dataclass
class DiagnosticsReport:
    """
    Summary of one sampler run over its restarts.

    Attributes
    ----------
    quantity : str
    tau : float
        Mean autocorrelation time of the quantity over chains and restarts.
    tau_indicator : float, optional
        Mean of the per-chain maximum indicator autocorrelation time.
    rhat : float, optional
        Mean per-chain R-hat across restarts; None with a single restart.
    normalized_iterations : float, optional
        Standardized iterations, from the timing tables.
    accept_rate : float
        Accepted kernel proposals, percent.
    flags : list of str
    per_chain : pandas.DataFrame
    """
    quantity: str
    iterations: int
    chains: int
    restarts: int
    tau: float
    tau_indicator: Optional[float] = None
    rhat: Optional[float] = None
    normalized_iterations: Optional[float] = None
    accept_rate: float = float('nan')
    flags: List[str] = field(default_factory=list)
    per_chain: pd.DataFrame = field(default=None, repr=False)

    def to_frame(self):
        """One-row frame of the summary values."""
        return pd.DataFrame([{
            'quantity': self.quantity,
            'iterations': self.iterations,
            'chains': self.chains,
            'restarts': self.restarts,
            'autocorrelation': self.tau,
            'indicator_autocorrelation': self.tau_indicator,
            'rhat': self.rhat,
            'normalized_iterations': self.normalized_iterations,
            'accept_rate_x100': self.accept_rate,
            'flags': ';'.join(self.flags),
        }])

    def to_json(self, path: str=None):
        """JSON document with the summary and the per-chain table."""
        summary = json.loads(self.to_frame().iloc[0].to_json())
        per_chain = [] if self.per_chain is None else json.loads(self.per_chain.to_json(orient='records'))
        text = json.dumps({'summary': summary, 'per_chain': per_chain}, indent=2)
        if path:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text)
        return text


def read_trace(path):
    """Read a trace CSV written by :mod:`dparm.orchestrator`."""
    return pd.read_csv(path, dtype={'partition': str, 'move': str}, keep_default_na=True)

def _chain_series(trace, chain, quantity, observations):
    rows = trace.loc[trace['chain'] == chain].sort_values('iteration')
    if quantity == 'logjoint':
        return rows['log_joint'].values, None
    partitions = _as_partitions(rows['partition'].values)
    if quantity == 'topfrac':
        return block_fraction_trace(partitions, 1), partitions
    return None, partitions

def summarize(traces: Sequence[pd.DataFrame], timings: Sequence[pd.DataFrame]=None,
              quantity: str='logjoint', observations: Sequence[int]=None,
              burn_in: float=0.5):
    """
    Diagnostics of a run.

    Parameters
    ----------
    traces : sequence of pandas.DataFrame
        One trace table per restart.
    timings : sequence of pandas.DataFrame, optional
        Matching timing tables, for the standardized iterations.
    quantity : {'logjoint', 'topfrac', 'indicator'}
        Series used for the autocorrelation time and R-hat.
    observations : sequence of int, optional
        Observations whose pairwise indicators are tracked; required for
        ``'indicator'``.
    burn_in : float, default: 0.5

    Returns
    -------
    DiagnosticsReport

    Raises
    ------
    DiagnosticsError
        If no trace is given, or the quantity is unknown.
    """
    if not traces:
        raise DiagnosticsError("no trace to diagnose")
    if quantity not in QUANTITIES:
        raise DiagnosticsError("quantity must be one of %s" % (QUANTITIES,))
    if quantity == 'indicator' and not observations:
        raise DiagnosticsError("the indicator quantity needs a list of observations")

    flags = []
    chains = sorted(set(traces[0]['chain']))
    records = []
    per_restart_series = {chain: [] for chain in chains}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', DegenerateStatisticWarning)
        for r, trace in enumerate(traces):
            for chain in chains:
                series, partitions = _chain_series(trace, chain, quantity, observations)
                start = int(np.floor(len(partitions if series is None else series) * burn_in))
                record = {'restart': r, 'chain': chain}
                if series is not None:
                    record['tau'] = autocorrelation_time(series[start:])
                    per_restart_series[chain].append(series)
                if observations:
                    if partitions is None:
                        rows = trace.loc[trace['chain'] == chain].sort_values('iteration')
                        partitions = _as_partitions(rows['partition'].values)
                    record['tau_indicator'] = max_indicator_autocorrelation(
                        partitions[start:], observations)
                    if series is None:
                        record['tau'] = record['tau_indicator']
                rows = trace.loc[trace['chain'] == chain]
                record['accept_rate'] = accept_rate(rows)
                record['mean_log_joint'] = float(rows['log_joint'].mean())
                record['final_blocks'] = int(rows.sort_values('iteration')['n_blocks'].iloc[-1])
                records.append(record)
        if len(traces) >= 2 and quantity != 'indicator':
            rhats = [_gelman_rubin(per_restart_series[chain], burn_in) for chain in chains]
            rhat = float(np.mean([value for value, _ in rhats]))
            flags.extend(sorted(set(flag for _, flag in rhats if flag)))
        else:
            rhat = None
    flags.extend(sorted(set(str(w.message) for w in caught
                            if issubclass(w.category, DegenerateStatisticWarning))))
    if rhat is None:
        warnings.warn("R-hat omitted: it needs two restarts of a scalar quantity",
                      DegenerateStatisticWarning)
        flags.append('rhat-omitted')

    per_chain = pd.DataFrame(records)
    normalized = None
    iterations = int(traces[0]['iteration'].max())
    if timings:
        kernel = float(np.mean([t['kernel_ns'].sum() for t in timings]))
        gibbs = float(np.mean([t['gibbs_ns'].sum() for t in timings]))
        if gibbs > 0:
            normalized = standardized_iterations(kernel, gibbs, iterations)
    return DiagnosticsReport(
        quantity=quantity, iterations=iterations, chains=len(chains), restarts=len(traces),
        tau=float(per_chain['tau'].mean()),
        tau_indicator=float(per_chain['tau_indicator'].mean()) if observations else None,
        rhat=rhat, normalized_iterations=normalized,
        accept_rate=float(np.nanmean(per_chain['accept_rate'].values))
        if per_chain['accept_rate'].notna().any() else float('nan'),
        flags=flags, per_chain=per_chain)

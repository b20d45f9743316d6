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
Test module for the convergence diagnostics
"""
import json

import numpy as np
import pandas as pd
import pytest
from flaky import flaky

from dparm.diagnostics import (DiagnosticsReport, accept_rate, autocorrelation_time,
                               block_fraction_trace, gelman_rubin, gelman_rubin_by_chain,
                               indicator_series, max_indicator_autocorrelation, read_trace,
                               select_indicator_observations, standardized_iterations,
                               summarize, total_variation)
from dparm.exceptions import DegenerateStatisticWarning, DiagnosticsError
from dparm.orchestrator import RunConfig, run_chains
from dparm.partitions import Partition


def ar1(rho, n, rng):
    x = np.empty(n)
    x[0] = rng.standard_normal() / np.sqrt(1 - rho ** 2)
    noise = rng.standard_normal(n)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + noise[t]
    return x

def fake_trace(partitions, chains=1, log_joint=None):
    rows = []
    for chain in range(chains):
        for t, z in enumerate(partitions, start=1):
            z = z if isinstance(z, Partition) else Partition.from_string(z)
            rows.append(dict(iteration=t, chain=chain,
                             log_joint=float(t % 3) if log_joint is None else log_joint[t - 1],
                             n_blocks=len(z), move='split' if t % 2 else 'merge',
                             accepted=t % 4 == 0, log_t_fwd=0.0, log_t_rev=0.0,
                             partition=str(z)))
    return pd.DataFrame(rows)


class Test_AutocorrelationTime(object):

    @flaky(max_runs=3)
    def test_ar1(self, rng):
        # 1 + 2 rho / (1 - rho) = 3 for rho = 0.5
        assert autocorrelation_time(ar1(0.5, 200000, rng)) == pytest.approx(3.0, abs=0.2)

    @flaky(max_runs=3)
    def test_iid(self, rng):
        assert autocorrelation_time(rng.standard_normal(50000)) == pytest.approx(1.0, abs=0.1)

    def test_alternating(self):
        assert autocorrelation_time([1, -1] * 10) == 1.0

    def test_constant(self):
        with pytest.warns(DegenerateStatisticWarning):
            assert autocorrelation_time(np.ones(20)) == 1.0

    @pytest.mark.parametrize("series", [np.ones(9), [1.0, np.nan] * 10, np.ones((4, 4))])
    def test_invalid(self, series):
        with pytest.raises(DiagnosticsError):
            autocorrelation_time(series)


class Test_GelmanRubin(object):

    @flaky(max_runs=3)
    def test_iid_restarts(self, rng):
        series = [rng.standard_normal(20000) for _ in range(4)]
        assert gelman_rubin(series) == pytest.approx(1.0, abs=0.01)

    def test_separated_restarts(self, rng):
        series = [rng.standard_normal(1000), 10 + rng.standard_normal(1000)]
        assert gelman_rubin(series) > 5

    def test_duplicated_restart(self, rng):
        x = rng.standard_normal(40)
        n = 20
        with pytest.warns(DegenerateStatisticWarning):
            value = gelman_rubin([x, x.copy()])
        assert value == pytest.approx(np.sqrt((n - 1) / n))

    @pytest.mark.parametrize("a, b", [(3.0, -7.0), (-0.5, 1e3), (1e4, 0.0)])
    def test_affine_invariance(self, rng, a, b):
        series = [rng.standard_normal(200) + shift for shift in (0.0, 0.3, -0.2)]
        value = gelman_rubin(series)
        assert gelman_rubin([a * s + b for s in series]) == pytest.approx(value, rel=1e-9)

    def test_constant_restarts(self):
        with pytest.warns(DegenerateStatisticWarning):
            assert gelman_rubin([np.ones(10), np.ones(10)]) == 1.0
        with pytest.warns(DegenerateStatisticWarning):
            assert gelman_rubin([np.ones(10), np.zeros(10)]) == np.inf

    def test_burn_in(self):
        first = np.r_[np.full(10, 100.0), np.arange(10.0)]
        second = np.r_[np.full(10, -100.0), np.arange(10.0) + 0.5]
        assert gelman_rubin([first, second], burn_in=0.5) < 1.1

    @pytest.mark.parametrize("series", [[np.arange(10.0)], [np.arange(6.0), np.arange(6.0)]])
    def test_invalid(self, series):
        with pytest.raises(DiagnosticsError):
            gelman_rubin(series)

    def test_by_chain(self, rng):
        traces = [fake_trace(['1;2'] * 20, chains=2, log_joint=rng.standard_normal(20))
                  for _ in range(2)]
        rhat = gelman_rubin_by_chain(traces)
        assert list(rhat.index) == [0, 1]


class Test_PartitionSeries(object):

    def test_block_fraction(self):
        values = block_fraction_trace(['1,2,3;4', '1;2;3;4', '1,2;3,4'], 1)
        np.testing.assert_allclose(values, [0.75, 0.25, 0.5])
        np.testing.assert_allclose(block_fraction_trace(['1,2;3;4'], 2), [0.75])
        with pytest.raises(DiagnosticsError):
            block_fraction_trace(['1'], 0)

    def test_indicator(self):
        series = indicator_series(['1,2;3', '1;2,3', '1,2,3'], (0, 1))
        assert series.tolist() == [1.0, 0.0, 1.0]
        with pytest.raises(DiagnosticsError):
            indicator_series(['1,2;3'], (1, 1))
        with pytest.raises(DiagnosticsError):
            indicator_series(['1,2;3'], (0, 5))

    def test_select_observations(self):
        planted = Partition([range(k * 20, (k + 1) * 20) for k in range(5)], n=100)
        picked = select_indicator_observations(planted)
        assert picked == [0, 1, 2, 20, 21, 22, 40, 41, 42, 60, 61, 62, 80, 81, 82]
        drawn = select_indicator_observations(planted, rng=3)
        assert len(drawn) == 15
        assert sorted(set(x // 20 for x in drawn)) == [0, 1, 2, 3, 4]
        assert drawn == select_indicator_observations(planted, rng=3)

    def test_max_indicator_autocorrelation(self):
        frozen = ['1,2;3'] * 12
        assert max_indicator_autocorrelation(frozen, [0, 1, 2]) == 1.0


class Test_Summaries(object):

    def test_standardized_iterations(self):
        assert standardized_iterations(0.0, 1.0, 100) == 100.0
        assert standardized_iterations(2.0, 1.0, 100) == 300.0
        with pytest.raises(DiagnosticsError):
            standardized_iterations(1.0, 0.0, 100)
        with pytest.raises(DiagnosticsError):
            standardized_iterations(-1.0, 1.0, 100)

    def test_accept_rate(self):
        trace = pd.DataFrame({'move': ['split', 'merge', 'skipped', 'none', 'split'],
                              'accepted': [True, False, False, False, True]})
        assert accept_rate(trace) == pytest.approx(100 * 2 / 3)
        assert np.isnan(accept_rate(trace.iloc[2:4]))

    def test_total_variation(self):
        assert total_variation({'a': 0.5, 'b': 0.5}, {'a': 1.0}) == pytest.approx(0.5)
        assert total_variation([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_summarize_single_restart(self):
        trace = fake_trace(['1,2;3', '1;2;3', '1,2,3', '1;2,3'] * 10, chains=2)
        with pytest.warns(DegenerateStatisticWarning):
            report = summarize([trace])
        assert isinstance(report, DiagnosticsReport)
        assert report.rhat is None
        assert 'rhat-omitted' in report.flags
        assert report.chains == 2
        assert report.iterations == 40
        assert report.accept_rate == pytest.approx(25.0)
        assert len(report.per_chain) == 2

    def test_summarize_restarts(self, rng):
        traces = [fake_trace(['1,2;3', '1;2;3'] * 20, chains=1, log_joint=rng.standard_normal(40))
                  for _ in range(3)]
        report = summarize(traces, quantity='topfrac')
        assert report.rhat is not None
        assert report.restarts == 3

    def test_summarize_duplicated_restarts_flag(self, rng):
        trace = fake_trace(['1,2;3', '1;2;3'] * 20, log_joint=rng.standard_normal(40))
        report = summarize([trace, trace.copy()])
        assert report.rhat == pytest.approx(np.sqrt(19 / 20))
        assert 'zero-between' in report.flags

    def test_summarize_indicator(self):
        trace = fake_trace(['1,2;3', '1;2,3', '1,3;2'] * 10)
        with pytest.warns(DegenerateStatisticWarning):
            report = summarize([trace, trace], quantity='indicator', observations=[0, 1, 2])
        assert report.rhat is None
        assert report.tau_indicator >= 1.0
        assert report.tau == report.tau_indicator

    def test_summarize_timings(self):
        trace = fake_trace(['1;2'] * 24)
        timing = pd.DataFrame({'iteration': range(1, 25), 'chain': 0,
                               'kernel_ns': 10, 'gibbs_ns': 20})
        with pytest.warns(DegenerateStatisticWarning):
            report = summarize([trace], timings=[timing])
        assert report.normalized_iterations == pytest.approx(24 * 1.5)

    @pytest.mark.parametrize("kwargs", [dict(traces=[]),
                                        dict(quantity='entropy'),
                                        dict(quantity='indicator')])
    def test_summarize_invalid(self, kwargs):
        kwargs.setdefault('traces', [fake_trace(['1;2'] * 12)])
        with pytest.raises(DiagnosticsError):
            summarize(**kwargs)

    def test_report_json(self, tmp_path):
        trace = fake_trace(['1,2;3', '1;2;3'] * 10)
        with pytest.warns(DegenerateStatisticWarning):
            report = summarize([trace])
        path = tmp_path / 'report.json'
        text = report.to_json(str(path))
        document = json.loads(path.read_text())
        assert json.loads(text) == document
        assert document['summary']['quantity'] == 'logjoint'
        assert len(document['per_chain']) == 1
        assert list(report.to_frame().columns)[0] == 'quantity'

    def test_run_trace_round_trip(self, small_irm_model, tmp_path):
        config = RunConfig(sampler='sm', chains=2, iterations=24, warmup=1, threads=1)
        path = tmp_path / 'trace.csv'
        trace, _ = run_chains(small_irm_model, config, trace_path=str(path))
        with pytest.warns(DegenerateStatisticWarning):
            report = summarize([read_trace(str(path))], quantity='topfrac')
        assert report.iterations == 24
        assert report.chains == 2

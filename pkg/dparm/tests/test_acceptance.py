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
Test module for the long acceptance runs

Every test of this module is marked ``slow``; run them with
``py.test --runslow``.
"""
import warnings

import numpy as np
import pytest

from dparm.cli import main
from dparm.datagen import generate_bmm, planted_network
from dparm.diagnostics import accept_rate, summarize, total_variation
from dparm.exceptions import DegenerateStatisticWarning
from dparm.kernels import ProposalContext, accept_move, forced_log_proposal, propose
from dparm.models import BernoulliMixture, RelationalModel
from dparm.oracle import compare_frequencies, exact_posterior
from dparm.orchestrator import RunConfig, run_chains
from dparm.partitions import Partition, co_clustered
from dparm.sampledata import FIG3_PATH

pytestmark = pytest.mark.slow


def rates(model, kernels, chains, iterations, seed):
    result = {}
    for kernel in kernels:
        config = RunConfig(sampler=kernel, chains=chains, iterations=iterations, seed=seed,
                           threads=1)
        result[kernel] = accept_rate(run_chains(model, config)[0])
    return result


@pytest.mark.parametrize("sampler", ['gibbs', 'sm', 'srm', 'arm'])
def test_exact_frequencies(fig3_model, sampler):
    config = RunConfig(sampler=sampler, chains=1, iterations=160000, interlace=False,
                       threads=1, seed=17)
    trace, _ = run_chains(fig3_model, config)
    comparison = compare_frequencies(trace['partition'], exact_posterior(fig3_model))
    assert total_variation(comparison['empirical'].values, comparison['exact'].values) < 0.02


@pytest.mark.parametrize("kernel", ['srm', 'sarm', 'arm'])
def test_forced_replay_many(kernel, rng):
    network, planted = planted_network(3, 5, 0.7, 0.1, seed=8)
    model = RelationalModel(network)
    n = model.n
    z = Partition.singletons(n)
    history = [planted, Partition([range(n)]), z]
    for _ in range(10000):
        i, j = rng.choice(n, size=2, replace=False).tolist()
        if kernel == 'srm':
            ctx = ProposalContext(i, j)
        else:
            merged = [h for h in history if co_clustered(h, i, j)]
            split = [h for h in history if not co_clustered(h, i, j)]
            if not merged or not split:
                continue
            ctx = ProposalContext(i, j, merged[rng.integers(len(merged))],
                                  split[rng.integers(len(split))])
        order = rng.permutation(n)
        outcome = propose(kernel, model, z, ctx, rng=rng, order=order)
        assert forced_log_proposal(kernel, model, z, outcome.partition, ctx, order) == \
            pytest.approx(outcome.log_t_fwd, abs=1e-12)
        if np.isfinite(outcome.log_t_rev):
            assert forced_log_proposal(kernel, model, outcome.partition, z, ctx, order) == \
                outcome.log_t_rev
        if accept_move(outcome, rng):
            z = outcome.partition
            history.append(z)
            history = history[-50:]


def test_autocorrelation_ordering():
    taus = {'arm': [], 'sm': [], 'gibbs': []}
    for seed in range(10):
        dataset, _ = generate_bmm(8, seed=seed)
        model = BernoulliMixture(dataset)
        for sampler in taus:
            config = RunConfig(sampler=sampler, chains=4, iterations=500, seed=seed, threads=1)
            trace, _ = run_chains(model, config)
            with warnings.catch_warnings():
                warnings.simplefilter('ignore', DegenerateStatisticWarning)
                taus[sampler].append(summarize([trace]).tau)
    means = {sampler: np.mean(values) for sampler, values in taus.items()}
    assert means['arm'] < means['sm'] < means['gibbs']


def test_accept_rate_ordering(planted_irm):
    network, _ = planted_irm
    result = rates(RelationalModel(network), ['sm', 'bsm', 'sarm', 'arm'], chains=4,
                   iterations=1250, seed=3)
    assert result['sm'] < result['bsm'] < result['sarm'] < result['arm']
    assert result['arm'] > 3 * result['sm']


def test_informed_launch_beats_random_launch():
    network, _ = planted_network(2, 6, 0.8, 0.1, seed=21)
    result = rates(RelationalModel(network), ['sm', 'bsm'], chains=4, iterations=2500, seed=5)
    assert result['bsm'] >= result['sm']


def test_thread_count_gives_identical_files(tmp_path):
    for threads in ('1', '4'):
        assert main(['run', '--model', 'irm', '--data', FIG3_PATH, '--sampler', 'arm',
                     '--chains', '8', '--iters', '1000', '--seed', '12', '--threads', threads,
                     '--out', str(tmp_path / threads)]) == 0
    first = (tmp_path / '1' / 'trace_0.csv').read_bytes()
    assert first == (tmp_path / '4' / 'trace_0.csv').read_bytes()

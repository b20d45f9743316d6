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
Test module for the exact enumeration reference
"""
import numpy as np
import pytest

from dparm.exceptions import OracleError
from dparm.kernels import ProposalContext
from dparm.models import BernoulliMixture, ModelParams, RelationalModel, UniformModel
from dparm.oracle import (PartitionTable, bell_number, compare_frequencies, direct_log_joint,
                          enumerate_kernel_paths, enumerate_partitions, exact_conditional,
                          exact_posterior, proposal_distribution)
from dparm.partitions import Partition


class Test_Enumeration(object):

    @pytest.mark.parametrize("n, count", [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52), (7, 877)])
    def test_bell_numbers(self, n, count):
        partitions = enumerate_partitions(n)
        assert len(partitions) == count == bell_number(n)
        assert len(set(partitions)) == count
        assert all(z.is_full() and z.n == n for z in partitions)

    def test_order(self):
        partitions = enumerate_partitions(4)
        assert str(partitions[0]) == '1,2,3,4'
        assert str(partitions[-1]) == '1;2;3;4'

    @pytest.mark.parametrize("n", [0, 13])
    def test_limits(self, n):
        with pytest.raises(OracleError):
            enumerate_partitions(n)


class Test_Posterior(object):

    def test_sums_to_one(self, fig3_model):
        table = exact_posterior(fig3_model)
        assert len(table) == 15
        assert table.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        assert (table.probabilities > 0).all()

    def test_uniform_model_is_the_prior(self):
        table = exact_posterior(UniformModel(3, ModelParams(alpha=1.0)))
        # CRP(alpha=1) over three observations: 1/3, 1/6 x 3, 1/6
        expected = {'1,2,3': 1 / 3, '1,2;3': 1 / 6, '1,3;2': 1 / 6, '1;2,3': 1 / 6,
                    '1;2;3': 1 / 6}
        for z, p in zip(table.partitions, table.probabilities):
            assert p == pytest.approx(expected[str(z)], abs=1e-12)

    def test_probability_of_and_mode(self, fig3_model):
        table = exact_posterior(fig3_model)
        mode = table.mode()
        assert table.probability_of(mode) == table.probabilities.max()
        assert table.probability_of(Partition.singletons(5)) == 0.0

    def test_frame(self, fig3_model, tmp_path):
        table = exact_posterior(fig3_model)
        frame = table.to_frame()
        assert list(frame.columns) == ['partition', 'log_joint', 'probability']
        table.to_csv(str(tmp_path / 'exact.csv'))
        assert (tmp_path / 'exact.csv').read_text().startswith('partition,log_joint,probability')

    def test_limit(self):
        with pytest.raises(OracleError):
            exact_posterior(UniformModel(11))


class Test_DirectEvaluation(object):

    def test_models_agree(self, small_bmm_model, small_irm_model, fig3_model):
        for model in (small_bmm_model, small_irm_model, fig3_model, UniformModel(5)):
            for z in enumerate_partitions(model.n):
                assert direct_log_joint(model, z) == pytest.approx(model.log_joint(z), abs=1e-10)

    def test_relational_single_block(self):
        # CRP 1/4 and Beta(5, 3) / Beta(1, 1) = 1/105 for four edges among six pairs
        model = RelationalModel(np.array([[0, 1, 1, 1], [1, 0, 0, 0],
                                          [1, 0, 0, 1], [1, 0, 1, 0]]))
        z = Partition.from_string('1,2,3,4')
        expected = np.log(1 / 4) + np.log(1 / 105)
        assert direct_log_joint(model, z) == pytest.approx(expected, abs=1e-12)

    def test_mixture_singletons(self):
        model = BernoulliMixture(np.array([[1, 0]]))
        z = Partition.from_string('1;2')
        # CRP 1/2, each singleton Beta(1,1) term 1/2
        assert direct_log_joint(model, z) == pytest.approx(np.log(1 / 8), abs=1e-12)

    def test_partial_partition(self, fig3_model):
        with pytest.raises(OracleError):
            direct_log_joint(fig3_model, Partition([(0, 1)], n=4))

    def test_conditional(self, fig3_model):
        z = Partition.from_string('1,2;3;4')
        table = exact_conditional(fig3_model, z, [2])
        assert [str(c) for c in table.partitions] == ['1,2,3;4', '1,2;3,4', '1,2;4;3']
        assert table.probabilities.sum() == pytest.approx(1.0)
        with pytest.raises(OracleError):
            exact_conditional(fig3_model, z, [])


class Test_KernelPaths(object):

    def test_sm_merge_is_deterministic(self, fig3_model):
        z = Partition.from_string('1,2;3;4')
        paths = enumerate_kernel_paths('sm', fig3_model, z, ProposalContext(0, 2))
        assert len(paths) == 1
        assert paths[0].kind == 'merge'
        assert paths[0].probability == 1.0
        assert paths[0].partition == Partition.from_string('1,2,3;4')

    def test_sm_split(self, fig3_model):
        z = Partition.from_string('1,2,3,4')
        paths = enumerate_kernel_paths('sm', fig3_model, z, ProposalContext(0, 3))
        distribution = proposal_distribution(paths)
        # two free observations, each joins the block of i or of j
        assert len(distribution) == 4
        assert distribution.sum() == pytest.approx(1.0)
        assert all(path.kind == 'split' for path in paths)

    def test_unknown_kernel(self, fig3_model):
        with pytest.raises(OracleError):
            enumerate_kernel_paths('hmc', fig3_model, Partition.singletons(4),
                                   ProposalContext(0, 1))

    def test_leaf_limit(self, fig3_model):
        with pytest.raises(OracleError):
            enumerate_kernel_paths('sm', fig3_model, Partition.from_string('1,2,3,4'),
                                   ProposalContext(0, 3), limit=2)


class Test_Frequencies(object):

    def test_compare(self):
        table = exact_posterior(UniformModel(2))
        sample = ['1,2', '1,2', '1;2', Partition.from_string('1,2')]
        frame = compare_frequencies(sample, table)
        assert list(frame.columns) == ['partition', 'empirical', 'exact', 'deviation']
        row = frame.set_index('partition').loc['1,2']
        assert row['empirical'] == 0.75
        assert row['deviation'] == pytest.approx(0.25)

    def test_unsampled_partitions_count_zero(self):
        frame = compare_frequencies(['1,2,3'], exact_posterior(UniformModel(3)))
        assert frame['empirical'].sum() == 1.0
        assert (frame['empirical'] == 0).sum() == 4

    def test_invalid(self):
        table = exact_posterior(UniformModel(2))
        with pytest.raises(OracleError):
            compare_frequencies([], table)
        with pytest.raises(OracleError):
            compare_frequencies(['1,2,3'], table)

    def test_table_from_log_joint(self):
        table = PartitionTable.from_log_joint(enumerate_partitions(2), [0.0, np.log(3)])
        np.testing.assert_allclose(table.probabilities, [0.25, 0.75])

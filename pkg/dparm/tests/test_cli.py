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
Test module for the command line entry point
"""
import json

import pandas as pd
import pytest

from dparm.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, RunManifest, main
from dparm.datagen import load_network
from dparm.models import FeatureDataset
from dparm.partitions import Partition
from dparm.sampledata import FIG3_PATH


def run_fig3(out, *extra):
    return main(['run', '--model', 'irm', '--data', FIG3_PATH, '--chains', '2', '--iters', '30',
                 '--warmup', '2', '--threads', '1', '--out', str(out)] + list(extra))


class Test_Usage(object):

    def test_no_command(self, capsys):
        assert main([]) == EXIT_USAGE
        assert 'sub-command' in capsys.readouterr().err

    def test_unknown_flag(self):
        assert main(['run', '--frobnicate']) == EXIT_USAGE

    def test_unknown_sampler(self, tmp_path):
        assert run_fig3(tmp_path, '--sampler', 'hmc') == EXIT_USAGE

    def test_invalid_scale(self, tmp_path):
        assert run_fig3(tmp_path, '--scale', '1.5') == EXIT_USAGE

    def test_invalid_config_value(self, tmp_path):
        config = tmp_path / 'run.cfg'
        config.write_text("interlace = maybe\n")
        assert run_fig3(tmp_path / 'out', '--config', str(config)) == EXIT_USAGE

    def test_adaptive_single_chain_without_history(self, tmp_path):
        assert main(['run', '--model', 'irm', '--data', FIG3_PATH, '--sampler', 'arm',
                     '--chains', '1', '--warmup', '0', '--out', str(tmp_path)]) == EXIT_USAGE


class Test_Generate(object):

    def test_bmm(self, tmp_path):
        out = tmp_path / 'bmm.csv'
        assert main(['generate', '--model', 'bmm', '--d', '8', '--seed', '3',
                     '--out', str(out)]) == EXIT_OK
        dataset = FeatureDataset.from_csv(str(out))
        assert (dataset.d, dataset.n) == (8, 100)
        planted = Partition.from_string((tmp_path / 'bmm.planted.txt').read_text().strip())
        assert planted.sizes() == [20] * 5

    def test_invalid_d(self, tmp_path):
        assert main(['generate', '--d', '7', '--out', str(tmp_path / 'x.csv')]) == EXIT_USAGE

    def test_network(self, tmp_path):
        out = tmp_path / 'net.txt'
        assert main(['generate', '--model', 'irm', '--blocks', '3', '--block-size', '5',
                     '--out', str(out)]) == EXIT_OK
        assert load_network(str(out)).n == 15
        assert (tmp_path / 'net.planted.txt').exists()


class Test_Run(object):

    def test_gibbs(self, tmp_path):
        assert run_fig3(tmp_path, '--sampler', 'gibbs') == EXIT_OK
        trace = pd.read_csv(tmp_path / 'trace_0.csv', dtype={'partition': str})
        assert len(trace) == 60
        assert set(trace['chain']) == {0, 1}
        assert len(pd.read_csv(tmp_path / 'timing_0.csv')) == 60
        manifest = RunManifest.from_json(str(tmp_path / 'manifest.json'))
        assert manifest.config['sampler'] == 'gibbs'
        assert manifest.dataset['n'] == 4
        assert manifest.traces == ['trace_0.csv']
        assert set(manifest.versions) == {'dparm', 'numpy', 'scipy', 'pandas'}

    def test_restarts_and_seeds(self, tmp_path):
        assert run_fig3(tmp_path, '--sampler', 'sm', '--restarts', '2', '--seed', '9') == EXIT_OK
        manifest = json.loads((tmp_path / 'manifest.json').read_text())
        assert manifest['config']['seed'] == 9
        assert len(manifest['seeds']) == 2
        assert (tmp_path / 'trace_1.csv').exists()

    def test_same_seed_same_trace(self, tmp_path):
        for name in ('a', 'b'):
            assert run_fig3(tmp_path / name, '--sampler', 'arm', '--seed', '4') == EXIT_OK
        first = pd.read_csv(tmp_path / 'a' / 'trace_0.csv')
        second = pd.read_csv(tmp_path / 'b' / 'trace_0.csv')
        pd.testing.assert_frame_equal(first, second)

    def test_config_file(self, tmp_path):
        config = tmp_path / 'run.cfg'
        config.write_text("# defaults\nsampler = srm\nchains = 3\niterations = 5\n")
        assert main(['run', '--model', 'irm', '--data', FIG3_PATH, '--config', str(config),
                     '--warmup', '1', '--out', str(tmp_path / 'out')]) == EXIT_OK
        manifest = json.loads((tmp_path / 'out' / 'manifest.json').read_text())
        assert manifest['config']['sampler'] == 'srm'
        assert manifest['config']['chains'] == 3
        assert len(pd.read_csv(tmp_path / 'out' / 'trace_0.csv')) == 15

    def test_scaled_network(self, tmp_path):
        data = tmp_path / 'net.txt'
        main(['generate', '--model', 'irm', '--blocks', '2', '--block-size', '10',
              '--p-in', '0.9', '--out', str(data)])
        assert main(['run', '--model', 'irm', '--data', str(data), '--scale', '0.5',
                     '--sampler', 'gibbs', '--chains', '1', '--iters', '2', '--warmup', '0',
                     '--out', str(tmp_path / 'out')]) == EXIT_OK
        manifest = json.loads((tmp_path / 'out' / 'manifest.json').read_text())
        assert manifest['dataset']['n'] == 10
        assert len(manifest['dataset']['retained']) == 10

    def test_missing_data(self, tmp_path):
        assert main(['run', '--model', 'bmm', '--data', str(tmp_path / 'none.csv'),
                     '--out', str(tmp_path)]) == EXIT_DATA

    def test_malformed_data(self, tmp_path):
        data = tmp_path / 'bad.csv'
        data.write_text("0,1,2\n1,0,1\n")
        assert main(['run', '--model', 'bmm', '--data', str(data),
                     '--out', str(tmp_path / 'out')]) == EXIT_DATA


class Test_Diagnose(object):

    def test_report(self, tmp_path):
        assert run_fig3(tmp_path, '--sampler', 'sm', '--restarts', '2') == EXIT_OK
        out = tmp_path / 'report.json'
        assert main(['diagnose', '--traces', str(tmp_path / 'trace_*.csv'),
                     '--out', str(out)]) == EXIT_OK
        document = json.loads(out.read_text())
        assert document['summary']['restarts'] == 2
        assert document['summary']['normalized_iterations'] is not None
        assert len(document['per_chain']) == 4

    def test_pairs_csv(self, tmp_path):
        assert run_fig3(tmp_path, '--sampler', 'gibbs') == EXIT_OK
        pairs = tmp_path / 'pairs.txt'
        pairs.write_text("1 2\n4\n")
        out = tmp_path / 'report.csv'
        assert main(['diagnose', '--traces', str(tmp_path / 'trace_*.csv'), '--quantity',
                     'indicator', '--pairs', str(pairs), '--out', str(out)]) == EXIT_OK
        frame = pd.read_csv(out)
        assert frame.loc[0, 'quantity'] == 'indicator'
        assert frame.loc[0, 'indicator_autocorrelation'] >= 1.0

    def test_no_traces(self, tmp_path):
        assert main(['diagnose', '--traces', str(tmp_path / 'nothing_*.csv'),
                     '--out', str(tmp_path / 'r.csv')]) == EXIT_DATA


class Test_VerifyExact(object):

    def test_short_run(self, tmp_path, capsys):
        out = tmp_path / 'freq.csv'
        assert main(['verify-exact', '--sampler', 'gibbs', '--iters', '200', '--warmup', '5',
                     '--out', str(out)]) == EXIT_OK
        assert 'sampler=gibbs samples=200' in capsys.readouterr().out
        frame = pd.read_csv(out)
        assert len(frame) == 15
        assert frame['empirical'].sum() == pytest.approx(1.0)
        assert frame['exact'].sum() == pytest.approx(1.0)

    def test_config_file_sets_length(self, tmp_path, capsys):
        config = tmp_path / 'verify.cfg'
        config.write_text("iterations = 50\nchains = 2\n")
        out = str(tmp_path / 'freq.csv')
        assert main(['verify-exact', '--sampler', 'gibbs', '--config', str(config),
                     '--warmup', '0', '--out', out]) == EXIT_OK
        assert 'samples=100 ' in capsys.readouterr().out
        assert main(['verify-exact', '--sampler', 'gibbs', '--config', str(config),
                     '--iters', '30', '--warmup', '0', '--out', out]) == EXIT_OK
        assert 'samples=60 ' in capsys.readouterr().out

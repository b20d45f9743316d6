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
Command line entry point.

Sub-commands:

* ``generate``      write a planted Bernoulli mixture dataset or a planted
                    partition network,
* ``run``           run restarts of a chain ensemble and write traces and a
                    run manifest,
* ``diagnose``      summarize trace files,
* ``verify-exact``  compare the empirical distribution of a sampler with the
                    exact posterior of the four vertex network.

Settings are taken from the flags, then from the ``--config`` file, then
from the defaults of :class:`~dparm.orchestrator.RunConfig`.

Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.
"""
import argparse
import glob
import json
import logging
import os
import re
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np
import pandas as pd
import scipy

import dparm
from dparm.datagen import (FEATURE_COUNTS, downsample, generate_bmm, load_network,
                           planted_network, retained_vertices, scaled_size, write_edge_list)
from dparm.diagnostics import (QUANTITIES, accept_rate, read_trace,
                               select_indicator_observations, summarize, total_variation)
from dparm.exceptions import ConfigError, DataError, Error, ModelError, PartitionError
from dparm.models import BernoulliMixture, FeatureDataset, RelationalModel
from dparm.oracle import compare_frequencies, exact_posterior
from dparm.orchestrator import SAMPLERS, RunConfig, restart_seeds, run_chains, run_restarts
from dparm.partitions import Partition, to_string
from dparm.sampledata import fig3
from dparm.utils import read_config, set_verbose

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

MODELS = ('bmm', 'irm')

VERIFY_DEFAULTS = {'iterations': 160000, 'chains': 1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


#-----------------------------------------------------------------------------
# Run manifest

@dataclass
class RunManifest:
    """
    Everything needed to reproduce a run.

    Attributes
    ----------
    config : dict
        The resolved :class:`~dparm.orchestrator.RunConfig`.
    seeds : list of dict
        Entropy and spawn key of every restart stream.
    dataset : dict
        Model, path, SHA-256 of the data actually sampled and its size.
    versions : dict
        Versions of dparm, numpy, scipy and pandas.
    traces, timings : list of str
        Trace and timing files, one per restart.
    timing_summary : list of dict
        Total kernel and Gibbs nanoseconds and accept rate per restart.
    """
    config: Dict
    seeds: List[Dict]
    dataset: Dict
    versions: Dict = field(default_factory=lambda: versions())
    traces: List[str] = field(default_factory=list)
    timings: List[str] = field(default_factory=list)
    timing_summary: List[Dict] = field(default_factory=list)

    def to_json(self, path: str=None):
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text)
        return text

    @classmethod
    def from_json(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            return cls(**json.load(f))


def versions():
    return {'dparm': dparm.__version__, 'numpy': np.__version__, 'scipy': scipy.__version__,
            'pandas': pd.__version__}


#-----------------------------------------------------------------------------
# Helpers

def _resolve_config(args, defaults=None, **overrides):
    """Flags, then the configuration file, then ``defaults``, then the RunConfig defaults."""
    mapping = dict(defaults or {})
    if getattr(args, 'config', None):
        mapping.update(read_config(args.config))
    return RunConfig.from_mapping(mapping, **overrides)

def _load_model(kind, path, config: RunConfig):
    if not os.path.exists(path):
        raise DataError("no such file: %s" % path)
    if kind == 'bmm':
        data = FeatureDataset.from_csv(path)
        if config.scale < 1:
            logger.warning("--scale applies to networks only, ignored for bmm")
        return BernoulliMixture(data, config.params), data
    network = load_network(path)
    if config.scale < 1:
        m = scaled_size(network.n, config.scale)
        logger.info("downsampling %s vertices to %s", network.n, m)
        network = downsample(network, m)
    return RelationalModel(network, config.params), network

def _read_observations(path):
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    tokens = [token for token in re.split(r'[\s,;]+', text.split('#', 1)[0]) if token]
    try:
        observations = sorted(set(int(token) - 1 for token in tokens))
    except ValueError:
        raise DataError("%s: expected 1-based observation indices" % path)
    if any(x < 0 for x in observations):
        raise DataError("%s: observation indices start at 1" % path)
    return observations

def _timing_path(trace_path):
    head, tail = os.path.split(trace_path)
    return os.path.join(head, tail.replace('trace', 'timing', 1))


#-----------------------------------------------------------------------------
# Commands

def cmd_generate(args):
    """Write a synthetic dataset and its planted partition."""
    planted_path = os.path.splitext(args.out)[0] + '.planted.txt'
    if args.model == 'bmm':
        dataset, planted = generate_bmm(args.d, args.seed)
        dataset.to_csv(args.out)
    else:
        network, planted = planted_network(args.blocks, args.block_size, args.p_in, args.p_out,
                                           args.seed)
        write_edge_list(network, args.out)
    with open(planted_path, 'w', encoding='utf-8') as f:
        f.write(to_string(planted) + '\n')
    logger.info("wrote %s and %s", args.out, planted_path)
    return EXIT_OK

def cmd_run(args):
    """Run restarts of a chain ensemble and write traces and a manifest."""
    config = _resolve_config(
        args, sampler=args.sampler, chains=args.chains, iterations=args.iters,
        restarts=args.restarts, seed=args.seed, scale=args.scale, L=args.L,
        burn_in=args.burn_in, warmup=args.warmup, threads=args.threads,
        interlace=args.interlace, alpha=args.alpha, beta_plus=args.beta_plus,
        beta_minus=args.beta_minus)
    model, data = _load_model(args.model, args.data, config)
    os.makedirs(args.out, exist_ok=True)
    results = run_restarts(model, config, args.out)

    manifest = RunManifest(
        config=config.to_dict(),
        seeds=[{'entropy': str(seed.entropy), 'spawn_key': list(seed.spawn_key)}
               for seed in restart_seeds(config)],
        dataset={'model': args.model, 'path': os.path.abspath(args.data), 'n': model.n,
                 'sha256': data.sha256()})
    if args.model == 'irm' and config.scale < 1:
        manifest.dataset['retained'] = [v + 1 for v in retained_vertices(load_network(args.data),
                                                                          model.n)]
    for r, (trace, timing) in enumerate(results):
        rate = accept_rate(trace)
        manifest.traces.append('trace_%d.csv' % r)
        manifest.timings.append('timing_%d.csv' % r)
        manifest.timing_summary.append({'restart': r,
                                        'kernel_ns': int(timing['kernel_ns'].sum()),
                                        'gibbs_ns': int(timing['gibbs_ns'].sum()),
                                        'accept_rate_x100': None if np.isnan(rate) else rate})
        logger.info("restart %s: accept rate %.2f%%, final mean log joint %.3f", r, rate,
                    trace.loc[trace['iteration'] == trace['iteration'].max(), 'log_joint'].mean())
    manifest.to_json(os.path.join(args.out, 'manifest.json'))
    return EXIT_OK

def cmd_diagnose(args):
    """Summarize trace files into a diagnostics report."""
    paths = sorted(glob.glob(args.traces))
    if not paths:
        raise DataError("no trace file matches '%s'" % args.traces)
    traces = [read_trace(path) for path in paths]
    timings = None
    timing_paths = [_timing_path(path) for path in paths]
    if all(os.path.exists(path) and path not in paths for path in timing_paths):
        timings = [pd.read_csv(path) for path in timing_paths]

    observations = None
    if args.pairs:
        observations = _read_observations(args.pairs)
    elif args.planted:
        with open(args.planted, 'r', encoding='utf-8') as f:
            planted = Partition.from_string(f.read().strip())
        observations = select_indicator_observations(planted, rng=args.seed)

    report = summarize(traces, timings, quantity=args.quantity, observations=observations,
                       burn_in=args.burn_in)
    if args.out.endswith('.json'):
        report.to_json(args.out)
    else:
        report.to_frame().to_csv(args.out, index=False)
    logger.info("%s traces: tau %.2f, R-hat %s, accept rate %.2f%%", len(traces), report.tau,
                report.rhat, report.accept_rate)
    return EXIT_OK

def cmd_verify_exact(args):
    """
    Run a sampler without interlacing on the four vertex network and
    compare its state frequencies with the exact posterior.
    """
    config = _resolve_config(args, VERIFY_DEFAULTS, sampler=args.sampler, chains=args.chains,
                             iterations=args.iters, seed=args.seed, threads=args.threads,
                             warmup=args.warmup, interlace=False)
    model = RelationalModel(fig3, config.params)
    table = exact_posterior(model)
    trace, _ = run_chains(model, config)
    comparison = compare_frequencies(trace['partition'], table)
    comparison.to_csv(args.out, index=False)
    tv = total_variation(comparison['empirical'].values, comparison['exact'].values)
    logger.info("%s: %s samples, max deviation %.4f, total variation %.4f", config.sampler,
                len(trace), comparison['deviation'].max(), tv)
    print("sampler=%s samples=%s max_deviation=%.6f total_variation=%.6f"
          % (config.sampler, len(trace), comparison['deviation'].max(), tv))
    if tv >= args.tolerance:
        logger.warning("total variation %.4f above %.4f", tv, args.tolerance)
    return EXIT_OK


#-----------------------------------------------------------------------------
# Parser

def _positive_fraction(text):
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("expected a fraction in (0, 1]")
    return value

def build_parser():
    parser = _Parser(prog='dparm', description="Partition MCMC samplers for conjugate "
                     "Dirichlet process mixture and relational models.")
    parser.add_argument('--verbose', action='store_true', help="debug logging")
    sub = parser.add_subparsers(dest='command')

    common = _Parser(add_help=False)
    common.add_argument('--config', help="key=value configuration file")
    common.add_argument('--seed', type=int)
    common.add_argument('--threads', type=int)
    common.add_argument('--warmup', type=int)

    generate = sub.add_parser('generate', help="write a synthetic dataset")
    generate.add_argument('--model', choices=MODELS, default='bmm')
    generate.add_argument('--d', type=int, choices=FEATURE_COUNTS, default=6)
    generate.add_argument('--blocks', type=int, default=4)
    generate.add_argument('--block-size', type=int, default=15)
    generate.add_argument('--p-in', type=float, default=0.5)
    generate.add_argument('--p-out', type=float, default=0.05)
    generate.add_argument('--seed', type=int, default=0)
    generate.add_argument('--out', required=True)
    generate.set_defaults(handler=cmd_generate)

    run = sub.add_parser('run', parents=[common], help="run a chain ensemble")
    run.add_argument('--sampler', choices=SAMPLERS)
    run.add_argument('--model', choices=MODELS, required=True)
    run.add_argument('--data', required=True)
    run.add_argument('--chains', type=int)
    run.add_argument('--iters', type=int)
    run.add_argument('--restarts', type=int)
    run.add_argument('--scale', type=_positive_fraction)
    run.add_argument('--L', type=int)
    run.add_argument('--burn-in', type=float)
    run.add_argument('--alpha', type=float)
    run.add_argument('--beta-plus', type=float)
    run.add_argument('--beta-minus', type=float)
    run.add_argument('--no-interlace', dest='interlace', action='store_const', const=False)
    run.add_argument('--out', required=True)
    run.set_defaults(handler=cmd_run)

    diagnose = sub.add_parser('diagnose', help="summarize trace files")
    diagnose.add_argument('--traces', required=True, help="glob of trace CSV files")
    diagnose.add_argument('--quantity', choices=QUANTITIES, default='logjoint')
    diagnose.add_argument('--pairs', help="file of 1-based observations to track")
    diagnose.add_argument('--planted', help="file holding a reference partition")
    diagnose.add_argument('--seed', type=int)
    diagnose.add_argument('--burn-in', type=float, default=0.5)
    diagnose.add_argument('--out', required=True)
    diagnose.set_defaults(handler=cmd_diagnose)

    verify = sub.add_parser('verify-exact', parents=[common],
                            help="compare a sampler with the exact posterior")
    verify.add_argument('--sampler', choices=SAMPLERS, required=True)
    verify.add_argument('--iters', type=int, help="default: %s" % VERIFY_DEFAULTS['iterations'])
    verify.add_argument('--chains', type=int, help="default: %s" % VERIFY_DEFAULTS['chains'])
    verify.add_argument('--tolerance', type=float, default=0.02)
    verify.add_argument('--out', required=True)
    verify.set_defaults(handler=cmd_verify_exact)
    return parser

def main(argv=None):
    """
    Parse ``argv`` and run the sub-command.

    Returns
    -------
    int
        The exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, 'command', None):
            raise UsageError("a sub-command is required")
    except UsageError as err:
        parser.print_usage(sys.stderr)
        sys.stderr.write("dparm: error: %s\n" % err)
        return EXIT_USAGE

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    if args.verbose:
        set_verbose(True)
    try:
        return args.handler(args)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except (DataError, ModelError, PartitionError, OSError) as err:
        logger.error("%s", err)
        return EXIT_DATA
    except Error as err:
        logger.error("%s", err)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())

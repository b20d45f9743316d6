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
dparm: partition MCMC samplers for conjugate Dirichlet process models.
"""
try:
    from importlib.metadata import PackageNotFoundError, version
    __version__ = version('dparm')
except (ImportError, PackageNotFoundError):
    __version__ = '0.0.0+unknown'

from .partitions import Partition, coarsest_common_refinement
from .models import (BernoulliMixture, FeatureDataset, ModelParams, NetworkDataset,
                     RelationalModel, UniformModel, crp_log_density)
from .sweeps import gibbs_sweep, restricted_sweep
from .kernels import ProposalContext, forced_log_proposal, propose
from .orchestrator import RunConfig, init_ensemble, run_chains, run_restarts
from .diagnostics import autocorrelation_time, gelman_rubin, summarize


__all__ = ['sampledata', 'cli', 'datagen', 'diagnostics', 'exceptions', 'kernels', 'models',
           'oracle', 'orchestrator', 'partitions', 'sweeps', 'utils',
           'Partition', 'coarsest_common_refinement', 'BernoulliMixture', 'FeatureDataset',
           'ModelParams', 'NetworkDataset', 'RelationalModel', 'UniformModel',
           'crp_log_density', 'gibbs_sweep', 'restricted_sweep', 'ProposalContext',
           'forced_log_proposal', 'propose', 'RunConfig', 'init_ensemble', 'run_chains',
           'run_restarts', 'autocorrelation_time', 'gelman_rubin', 'summarize']

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
Configuration for pytest testing framework module
=================================================

To launch the test routine, run from the repository root: py.test

Options
-------
runslow
    Also run the long acceptance runs marked ``slow``: exact frequency
    reproduction, autocorrelation and accept rate orderings.

test-seed
    Root seed of the randomized tests.

Examples
--------
py.test
    Fast unit and property tests only.

py.test --runslow
    Full routine, including runs of several minutes.
"""
import numpy as np
import pytest

from dparm.datagen import generate_bmm, planted_network
from dparm.models import (BernoulliMixture, ModelParams, NetworkDataset, RelationalModel,
                          UniformModel)
from dparm.sampledata import fig3

def pytest_addoption(parser):
    """
    Definition of admissible options for the pytest command line
    """
    parser.addoption("--runslow", action="store_true", default=False,
        help="run the long acceptance tests")
    parser.addoption("--test-seed", type=int, default=2023,
        help="root seed of the randomized tests")

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance run, needs --runslow")

def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)

# Fixture definitions

@pytest.fixture(scope="function")
def rng(request):
    """Fresh generator seeded from the --test-seed option."""
    return np.random.default_rng(request.config.getoption("--test-seed"))

@pytest.fixture(scope="session")
def fig3_model():
    """Relational model of the four vertex network, unit hyperparameters."""
    return RelationalModel(fig3)

@pytest.fixture(scope="session")
def bmm_data():
    """Planted Bernoulli mixture with six features and its planted partition."""
    return generate_bmm(6, seed=7)

@pytest.fixture(scope="session")
def bmm_model(bmm_data):
    return BernoulliMixture(bmm_data[0])

@pytest.fixture(scope="session")
def small_bmm_model():
    """Bernoulli mixture over five observations with three features."""
    matrix = np.array([[1, 1, 0, 0, 1],
                       [1, 0, 0, 1, 1],
                       [0, 1, 1, 0, 1]])
    return BernoulliMixture(matrix, ModelParams(alpha=1.5, beta_plus=0.7, beta_minus=1.3))

@pytest.fixture(scope="session")
def small_irm_model():
    """Relational model over five vertices."""
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (2, 3)]
    return RelationalModel(NetworkDataset.from_edges(edges, 5),
                           ModelParams(alpha=0.8, beta_plus=1.0, beta_minus=2.0))

@pytest.fixture(scope="session")
def planted_irm():
    """Planted partition network of four blocks of fifteen vertices."""
    return planted_network(4, 15, 0.6, 0.05, seed=11)

@pytest.fixture(scope="session")
def uniform_model():
    return UniformModel(4)

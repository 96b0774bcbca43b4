"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest
from unittest.mock import Mock

from chordnet.chordal import random_chordal
from chordnet.dataset import sample_dataset
from chordnet.logger import ChordNetLogger
from chordnet.nodeset import all_subsets
from chordnet.scoring import PriorSpec, ScoreTable, build_score_table


@pytest.fixture
def mock_logger():
    """Create a mock logger for testing."""
    logger = Mock(spec=ChordNetLogger)
    logger.correlation_id = "test-correlation-id"
    logger.info = Mock()
    logger.debug = Mock()
    logger.warning = Mock()
    logger.error = Mock()
    logger.audit = Mock()
    return logger


@pytest.fixture
def sample_csv():
    """Three rows over two binary variables."""
    return "a,b\n0,1\n1,0\n0,0\n"


@pytest.fixture
def chain_cliques():
    """Cliques {a,b,c}, {b,c,d}, {c,d,e}."""
    return [(0, 1, 2), (1, 2, 3), (2, 3, 4)]


def make_random_table(n, seed, cap=None):
    """Arbitrary negative scores, not derived from data."""
    rng = np.random.default_rng(seed)
    entries = {s: -float(rng.uniform(0.5, 5.0)) * len(s) for s in all_subsets(n, cap)}
    return ScoreTable(n_vars=n, entries=entries, max_subset_size=n if cap is None else cap)


def make_data_table(n, seed, rows=200):
    """Score table of data sampled along a random chordal graph."""
    graph = random_chordal(n, density=0.6, seed=seed)
    dataset = sample_dataset(graph, rows, seed=seed)
    return build_score_table(dataset, PriorSpec(0.5))


@pytest.fixture
def random_table():
    return make_random_table


@pytest.fixture
def data_table():
    return make_data_table

"""
Test configuration and shared fixtures for gaittracks.
"""

import numpy as np
import pytest

from gaittracks.gait import PhaseWindowGrid, seed_gait
from gaittracks.swimmer import SwimmerParams


@pytest.fixture
def params3():
    """Default 3-link swimmer with k = 2."""
    return SwimmerParams(n_links=3)


@pytest.fixture
def params5():
    """Default 5-link swimmer with k = 2."""
    return SwimmerParams(n_links=5)


@pytest.fixture
def gait3():
    """First-order seed gait for a 3-link swimmer."""
    return seed_gait(3)


@pytest.fixture
def grid():
    """Default phase-window grid: 16 windows, width twice the spacing."""
    return PhaseWindowGrid(16)


@pytest.fixture
def rng():
    """Deterministic generator for test data."""
    return np.random.default_rng(12345)


@pytest.fixture
def tmp_results(tmp_path):
    """Empty results directory."""
    out = tmp_path / "results"
    out.mkdir()
    return out

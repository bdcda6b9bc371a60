"""Shared fixtures and multiset helpers for the test suite."""
import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from nhwind import demo, lee


def multiset_distance(a, b) -> float:
    """Largest matched |a_i - b_j| under the optimal pairing.

    Plain complex sorting scrambles pairs with equal real parts, so
    spectra are compared as multisets via assignment.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    assert a.size == b.size, "multisets must have equal cardinality"
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@pytest.fixture
def lee_default():
    return lee()


@pytest.fixture
def demo_model():
    return demo()


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)

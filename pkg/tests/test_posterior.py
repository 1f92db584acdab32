import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from voronoi_blocks import BlockStats, DomainError, block_term, log_merge_factor, log_phi, total_log_posterior
from voronoi_blocks.posterior import log_phi_array


def phi_exact(n, v):
    return Fraction(math.factorial(n) * math.factorial(v - n), math.factorial(v + 1))


@pytest.mark.parametrize("n, v, expected", [
    (0, 1, math.log(0.5)),
    (1, 2, math.log(1 / 6)),
    (0, 7, -math.log(8)),
])
def test_log_phi_values(n, v, expected):
    assert log_phi(n, v) == pytest.approx(expected, abs=1e-13)


def test_log_phi_symmetric_example():
    assert log_phi(3, 10) == pytest.approx(log_phi(7, 10), abs=1e-12)


def test_log_phi_matches_factorials():
    for v in range(0, 61):
        for n in range(0, v + 1):
            exact = phi_exact(n, v)
            assert math.exp(log_phi(n, v)) == pytest.approx(float(exact), rel=1e-10)


def test_log_phi_large_values_finite():
    assert math.isfinite(log_phi(10_000, 1e7))
    assert math.isfinite(log_phi(1, 1e12))


def test_log_phi_non_integer_volume():
    # Gamma form at v = 2.5, n = 1: Gamma(2) Gamma(2.5) / Gamma(4.5)
    expected = math.lgamma(2) + math.lgamma(2.5) - math.lgamma(4.5)
    assert log_phi(1, 2.5) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("n, v", [(2, 1.0), (3, 2.0), (-1, 5.0), (1.5, 4.0)])
def test_log_phi_domain(n, v):
    with pytest.raises(DomainError):
        log_phi(n, v)


def test_block_stats_domain():
    with pytest.raises(DomainError):
        BlockStats(5, 3.0)
    BlockStats(2, 1.0 + 1e-11)


def test_log_phi_array_bitwise_equal():
    n = np.array([0, 1, 2, 5, 17, 40])
    v = np.array([1.0, 2.0, 3.5, 11.25, 40.0, 1e4])
    arr = log_phi_array(n, v)
    assert [float(x) for x in arr] == [log_phi(int(a), float(b)) for a, b in zip(n, v)]


def test_merge_factor_examples():
    f = log_merge_factor(BlockStats(1, 2), BlockStats(1, 2))
    assert f == pytest.approx(math.log(Fraction(36, 30)), abs=1e-12)
    assert f == pytest.approx(0.182322, abs=1e-6)

    g = log_merge_factor(BlockStats(10, 10), BlockStats(0, 10))
    ratio = phi_exact(10, 20) / (phi_exact(10, 10) * phi_exact(0, 10))
    assert ratio == Fraction(math.factorial(11) ** 2, math.factorial(21))
    assert g == pytest.approx(math.log(ratio), abs=1e-10)
    assert math.exp(g) == pytest.approx(3.1187e-5, rel=1e-4)

    h = log_merge_factor(BlockStats(0, 5), BlockStats(0, 5))
    assert h == pytest.approx(math.log(Fraction(36, 11)), abs=1e-12)


def test_merge_factor_penalty_applied_once():
    a = BlockStats(1, 2, log_prior_penalty=0.7)
    b = BlockStats(1, 2, log_prior_penalty=0.7)
    base = log_merge_factor(BlockStats(1, 2), BlockStats(1, 2))
    assert log_merge_factor(a, b) == pytest.approx(base - 0.7, abs=1e-12)


def test_merge_factor_rejects_mixed_penalties():
    with pytest.raises(ValueError):
        log_merge_factor(BlockStats(1, 2, 0.1), BlockStats(1, 2, 0.2))


def test_total_log_posterior_examples():
    assert total_log_posterior([]) == 0
    assert total_log_posterior([BlockStats(1, 2)]) == log_phi(1, 2)
    assert total_log_posterior([BlockStats(1, 2), BlockStats(1, 2)]) == pytest.approx(-3.583519, abs=1e-6)
    assert total_log_posterior([BlockStats(1, 2, 0.5)]) == block_term(BlockStats(1, 2, 0.5))


def test_identical_blocks_always_merge():
    for v in range(1, 101):
        for n in range(1, v + 1):
            s = BlockStats(n, v)
            assert log_merge_factor(s, s) > 0, (n, v)


def test_symmetry_exhaustive():
    for v in range(0, 201):
        for n in range(0, v + 1):
            assert abs(log_phi(n, v) - log_phi(v - n, v)) <= 1e-10


block = st.builds(
    lambda n, extra, pen: BlockStats(n, n + extra, pen),
    st.integers(0, 500),
    st.floats(0.0, 1e4, allow_nan=False),
    st.sampled_from([0.0, -1.5, 2.0]),
)


@given(block, block)
def test_merge_factor_symmetric_bitwise(a, b):
    b = BlockStats(b.n_points, b.volume_quanta, a.log_prior_penalty)
    assert log_merge_factor(a, b) == log_merge_factor(b, a)


@given(block, block)
def test_merge_equals_total_difference(a, b):
    b = BlockStats(b.n_points, b.volume_quanta, a.log_prior_penalty)
    merged = BlockStats(a.n_points + b.n_points, a.volume_quanta + b.volume_quanta, a.log_prior_penalty)
    assert total_log_posterior([merged]) - total_log_posterior([a, b]) == log_merge_factor(a, b)

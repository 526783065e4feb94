import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from batched_bai.errors import DomainError, PreconditionError, UndefinedStatisticError
from batched_bai.exp_family import RewardFamily, kl
from batched_bai.stopping import (
    ArmStats,
    beta_threshold,
    chernoff_Z,
    min_Z,
    tas_beta_threshold,
    weighted_mean,
)

B = RewardFamily.BERNOULLI
G = RewardFamily.GAUSSIAN


def stats_from(pulls, means):
    pulls = np.asarray(pulls, dtype=np.int64)
    return ArmStats(pulls, pulls * np.asarray(means, dtype=float))


def test_weighted_mean_examples():
    s = stats_from([3, 1], [0.8, 0.4])
    assert_allclose(weighted_mean(s, 0, 1), 0.7)
    s = stats_from([5, 5], [0.2, 0.6])
    assert_allclose(weighted_mean(s, 0, 1), 0.4)
    s = stats_from([4, 0], [0.25, 0.0])
    assert_allclose(weighted_mean(s, 0, 1), 0.25)
    with pytest.raises(UndefinedStatisticError):
        weighted_mean(ArmStats.empty(2), 0, 1)


def test_arm_stats_bookkeeping():
    s = ArmStats.empty(3)
    s.record(1, np.array([1.0, 0.0, 1.0]))
    s.record(2, np.array([0.5]))
    assert s.t == 4
    assert math.isnan(s.means[0])
    assert_allclose(s.means[1:], [2 / 3, 0.5])
    with pytest.raises(UndefinedStatisticError):
        s.leader()


def test_chernoff_Z_bernoulli_reference():
    # 100 (d(0.6, 0.5) + d(0.4, 0.5)), frozen from mpmath
    s = stats_from([100, 100], [0.6, 0.4])
    assert_allclose(chernoff_Z(B, s, 0, 1), 4.027102710137775, rtol=1e-12)


@given(st.integers(1, 500), st.floats(-5, 5), st.floats(0, 3))
def test_chernoff_Z_gaussian_closed_form(n, mj, gap):
    s = stats_from([n, n], [mj + gap, mj])
    assert_allclose(chernoff_Z(G, s, 0, 1), n * gap * gap / 4, rtol=1e-9, atol=1e-12)


def test_chernoff_Z_tie_and_ordering():
    s = stats_from([10, 20], [0.5, 0.5])
    assert chernoff_Z(B, s, 0, 1) == 0.0
    s = stats_from([10, 20], [0.3, 0.5])
    with pytest.raises(PreconditionError):
        chernoff_Z(B, s, 0, 1)
    with pytest.raises(UndefinedStatisticError):
        chernoff_Z(B, stats_from([0, 3], [0.0, 0.5]), 1, 0)


def ordered_Z(s):
    """Z of a two-arm stats object with the arms ordered by their stored means."""
    i, j = (0, 1) if s.means[0] >= s.means[1] else (1, 0)
    return chernoff_Z(B, s, i, j)


counts = st.integers(1, 400)
probs = st.floats(0.0, 1.0)


@given(counts, counts, probs, probs)
def test_Z_nonnegative_and_finite_for_bernoulli(ni, nj, a, b):
    hi, lo = max(a, b), min(a, b)
    s = stats_from([ni, nj], [hi, lo])
    z = ordered_Z(s)
    assert z >= 0.0
    assert math.isfinite(z)  # the pooled mean always sits between the two
    assert (z == 0.0) == (s.means[0] == s.means[1])


@given(counts, counts, probs, probs)
def test_Z_doubles_when_counts_double(ni, nj, a, b):
    hi, lo = max(a, b), min(a, b)
    z1 = ordered_Z(stats_from([ni, nj], [hi, lo]))
    z2 = ordered_Z(stats_from([2 * ni, 2 * nj], [hi, lo]))
    assert_allclose(z2, 2 * z1, rtol=1e-9, atol=1e-12)


@given(counts, counts, probs, probs)
def test_Z_depends_only_on_the_pair(ni, nj, a, b):
    hi, lo = max(a, b), min(a, b)
    s = stats_from([ni, nj], [hi, lo])
    swapped = ArmStats(s.pulls[::-1].copy(), s.sums[::-1].copy())
    assert ordered_Z(swapped) == ordered_Z(s)


def test_min_Z_three_arms():
    s = stats_from([100, 100, 100], [0.6, 0.4, 0.5])
    istar, value = min_Z(B, s)
    assert istar == 0
    assert value == chernoff_Z(B, s, 0, 2)
    assert value < chernoff_Z(B, s, 0, 1)


def test_min_Z_two_arms_and_ties():
    s = stats_from([7, 9], [0.2, 0.7])
    assert min_Z(B, s) == (1, chernoff_Z(B, s, 1, 0))
    s = stats_from([5, 5, 5], [0.4, 0.4, 0.4])
    assert min_Z(B, s) == (0, 0.0)
    with pytest.raises(UndefinedStatisticError):
        min_Z(B, stats_from([5, 0], [0.4, 0.0]))


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6), st.floats(-10, 10))
def test_leader_invariant_under_shift(means, c):
    n = len(means)
    a = min_Z(G, stats_from([10] * n, means))[0]
    b = min_Z(G, stats_from([10] * n, [m + c for m in means]))[0]
    # a shift can only reorder means that are equal up to rounding
    assert a == b or math.isclose(means[a], means[b], abs_tol=1e-9)


def test_beta_threshold_reference_and_monotonicity():
    assert_allclose(beta_threshold(100, 0.1, 1.001), 7.746392894416081, rtol=1e-12)
    assert_allclose(
        beta_threshold(100, 0.1, 1.001, halved=True),
        math.log(2 * math.log(20) * 100**1.001 / 0.1),
    )
    assert beta_threshold(200, 0.1, 1.001) > beta_threshold(100, 0.1, 1.001)
    assert beta_threshold(100, 0.01, 1.001) > beta_threshold(100, 0.1, 1.001)


@pytest.mark.parametrize("t, delta, alpha", [(0, 0.1, 1.001), (10, 0.0, 1.001), (10, 1.0, 1.001), (10, 0.1, 1.0), (10, 0.1, 1.5)])
def test_beta_threshold_domain(t, delta, alpha):
    with pytest.raises(DomainError):
        beta_threshold(t, delta, alpha)


def test_tas_threshold():
    assert_allclose(tas_beta_threshold(1, 0.1), math.log(10), rtol=1e-12)
    assert_allclose(tas_beta_threshold(math.e, 0.5), math.log(4), rtol=1e-12)
    assert tas_beta_threshold(50, 0.1) > tas_beta_threshold(10, 0.1)
    with pytest.raises(DomainError):
        tas_beta_threshold(1, 1.5)

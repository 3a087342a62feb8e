import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagsum import BernoulliMatrix, CapacityError, DomainError, gen_constant, gen_identity, gen_random
from diagsum import stein as sn
from diagsum.matrix import make_rng


def test_point_zero_at_t_one():
    s = sn.stein_solve(1.0, sn.point_indicator(0))
    assert abs(s.g[1] - (1 - math.exp(-1))) < 1e-15


def test_trivial_sets():
    assert np.all(sn.stein_solve(2.0, sn.set_indicator([])).g == 0)
    s = sn.stein_solve(2.0, lambda k: np.ones(len(k)))
    assert np.max(np.abs(s.g)) < 1e-15


def test_domain():
    with pytest.raises(DomainError):
        sn.stein_solve(0.0, sn.point_indicator(0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 50), st.lists(st.integers(0, 25), max_size=8))
def test_residual_and_agreement(t, A):
    s = sn.stein_solve(t, sn.set_indicator(A))
    assert s.residual() <= 1e-10
    assert s.agreement() <= 1e-9
    assert s.g[0] == 0


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_g_bounds(t):
    pmfs = sn.mean_abs_delta_pmfs(gen_random(5, 2))
    r = sn.verify_g_bounds(t, exhaustive=t <= 5, pmfs=pmfs)
    assert r.holds, r.worst


def test_small_t_hits_the_unit_branch():
    # for t = 0.1 the set bound min{1, sqrt(2/(te))} equals 1
    assert math.sqrt(2 / (0.1 * math.e)) > 1
    assert sn.verify_g_bounds(0.1, amax=6).holds


@pytest.mark.parametrize("t,a", [(1, 0), (5, 5), (20, 3), (0.3, 9)])
def test_point_identity(t, a):
    assert sn.verify_point_identity(t, a) <= 1e-9


def test_expansion_identity_cases():
    rng = make_rng(0)
    r = sn.verify_prop_identity(gen_constant(4, 0.3), np.arange(7.0))
    assert r.gap <= 1e-10
    r = sn.verify_prop_identity(gen_constant(4, 1.0), rng.normal(size=7))
    assert r.d2 == 0 and abs(r.lhs - r.d1) <= 1e-10
    r = sn.verify_prop_identity(gen_identity(4), rng.normal(size=7))
    assert r.gap <= 1e-10 and r.d2 != 0
    with pytest.raises(CapacityError):
        sn.verify_prop_identity(gen_random(7, 0), np.zeros(10))


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_expansion_identity_random(n, seed):
    rng = make_rng(seed)
    M = BernoulliMatrix(rng.random((n, n)))
    assert sn.verify_prop_identity(M, rng.uniform(-3, 3, size=n + 3)).gap <= 1e-10


@pytest.mark.parametrize(
    "t,h",
    [
        (1.5, lambda k: np.full(len(k), 2.0)),
        (2.0, lambda k: 3.0 * k - 1.0),
        (1.0, sn.point_indicator(3)),
        (8.0, lambda k: np.cos(k)),
    ],
    ids=["constant", "affine", "point", "cosine"],
)
def test_second_difference_link(t, h):
    lhs, rhs = sn.verify_q2_stein_link(t, h)
    assert abs(lhs - rhs) <= 1e-8


def test_second_difference_kills_affine():
    lhs, rhs = sn.verify_q2_stein_link(2.0, lambda k: k.astype(float))
    assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12

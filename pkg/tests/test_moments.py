from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import gamma_quad, var_enum
from diagsum import BernoulliMatrix, compute_moments, gen_constant, gen_identity, gen_matching, gen_random
from diagsum.matrix import make_rng
from diagsum.moments import (
    gamma_prime_bounds,
    gamma_prime_product_bound,
    gamma_prime_transpose,
    gamma_prime_zero_one,
    monotonicity_flags,
)


def test_frozen_gamma_values():
    # rational quadruple sums for a fixed 4x4 matrix
    p = [[1 / 2, 1 / 4, 0, 1], [1 / 8, 3 / 4, 1 / 2, 0], [0, 1 / 3, 2 / 3, 1 / 6], [1, 1 / 2, 1 / 4, 1 / 8]]
    rep = compute_moments(BernoulliMatrix(p))
    assert abs(rep.gamma - (-547 / 4608)) < 1e-15
    assert abs(rep.gamma_p - 161 / 384) < 1e-15
    assert abs(rep.gamma_pp - 1385 / 4608) < 1e-15
    assert abs(rep.gamma_ppp - 113 / 1152) < 1e-15
    assert abs(rep.var - 1205 / 1152) < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_moments_match_rational_oracle(n, seed):
    rng = make_rng(seed)
    q = [[Fraction(int(x), 8) for x in row] for row in rng.integers(0, 9, size=(n, n))]
    if not any(any(r) for r in q):
        q[0][0] = Fraction(1)
    rep = compute_moments(BernoulliMatrix([[float(x) for x in r] for r in q]))
    g = gamma_quad(q)
    got = (rep.gamma, rep.gamma_p, rep.gamma_pp, rep.gamma_ppp)
    assert all(abs(a - float(b)) < 1e-13 for a, b in zip(got, g))
    assert abs(rep.var_gamma - float(var_enum(q))) < 1e-12
    assert abs(rep.var_counts - float(var_enum(q))) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6), st.sampled_from([1.0, 0.3, 0.01]))
def test_variance_sandwich_and_m(n, seed, scale):
    M = BernoulliMatrix(gen_random(n, seed).p * scale)
    rep = compute_moments(M)
    assert rep.lam * (1 - rep.m) <= rep.var + 1e-12
    assert rep.var <= rep.lam + 1e-12
    assert rep.m <= min(rep.lam, 2 * n / (n - 1)) + 1e-12
    assert rep.gamma_p >= 0 and rep.gamma_ppp >= -1e-15


def test_constant_matrix():
    rep = compute_moments(gen_constant(6, 0.3))
    assert rep.gamma == rep.gamma_p == rep.gamma_pp == rep.gamma_ppp == 0
    assert abs(rep.var - 6 * 0.3 * 0.7) < 1e-12


def test_transpose_example():
    M = BernoulliMatrix([[1.0, 0.25], [0.75, 0.5]])
    assert compute_moments(M).gamma_p == 0.0
    assert abs(gamma_prime_transpose(M) - 1 / 16) <= 1e-15


@pytest.mark.parametrize("n", [3, 5, 8])
def test_minimum_bound_examples(n):
    L, R = gamma_prime_bounds(compute_moments(gen_identity(n)))
    assert abs(L - 1) < 1e-12 and abs(R - 2 / n) < 1e-12
    L, R = gamma_prime_bounds(compute_moments(gen_constant(n, 1.0)))
    assert abs(L) < 1e-12 and abs(R - 2 * (n - 1)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_product_bound(n, seed):
    M = gen_random(n, seed)
    rep = compute_moments(M)
    prod = gamma_prime_product_bound(M)
    assert rep.gamma_p <= prod + 1e-12
    assert abs(prod - gamma_prime_product_bound(BernoulliMatrix(M.p.T))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_zero_one_forms(n, seed):
    p = (make_rng(seed).random((n, n)) < 0.5).astype(float)
    p[0, 0] = 1.0
    M = BernoulliMatrix(p)
    rep = compute_moments(M)
    assert abs(rep.gamma_p - gamma_prime_product_bound(M)) < 1e-12
    assert abs(rep.gamma_p - gamma_prime_zero_one(M)) < 1e-12


def test_matching_gamma_prime():
    # equal blocks of size d: gamma' = 2 d^2 (n - d) / (n (n - 1))
    rep = compute_moments(gen_matching([2, 2, 2], [2, 2, 2]))
    assert abs(rep.gamma_p - 2 * 4 * 4 / 30) < 1e-12


def test_decreasing_rows_kill_gamma_prime():
    p = -np.sort(-gen_random(6, 4).p, axis=1)
    M = BernoulliMatrix(p)
    assert monotonicity_flags(M)["decreasing_rows"]
    assert compute_moments(M).gamma_p == 0.0

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import binomial_pmf, fixed_points_pmf, pmf_enum_frac
from diagsum import (
    BernoulliMatrix,
    CapacityError,
    IndexSelection,
    PreconditionError,
    gen_constant,
    gen_identity,
    gen_random,
    kappa,
    pmf_exact,
    pmf_leave_out,
    real_rooted,
)
from diagsum import exact as ex
from diagsum.matrix import make_rng


def test_frozen_rational_pmf():
    # law computed with rational enumeration of all six permutations
    p = [[0.1, 0.5, 0.9], [0.3, 0.2, 0.7], [0.6, 0.4, 0.8]]
    want = [17 / 200, 257 / 600, 233 / 600, 59 / 600]
    assert np.allclose(pmf_exact(BernoulliMatrix(p)).coeffs, want, atol=1e-15, rtol=0)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 12, 16])
def test_constant_matrix_is_binomial(n):
    q = pmf_exact(gen_constant(n, 0.3)).coeffs
    assert np.max(np.abs(q - binomial_pmf(n, 0.3))) < 1e-12


@pytest.mark.parametrize("n", [2, 4, 7, 10])
def test_identity_gives_fixed_points(n):
    q = pmf_exact(gen_identity(n)).coeffs
    want = [float(x) for x in fixed_points_pmf(n)]
    assert np.max(np.abs(q - want)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_ryser_matches_rational_enumeration(n, seed):
    rng = make_rng(seed)
    p = [[Fraction(int(x), 16) for x in row] for row in rng.integers(0, 17, size=(n, n))]
    if not any(any(r) for r in p):
        p[0][0] = Fraction(1)
    M = BernoulliMatrix([[float(x) for x in row] for row in p])
    want = [float(x) for x in pmf_enum_frac(p)]
    assert np.max(np.abs(pmf_exact(M).coeffs - want)) < 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10**6), st.data())
def test_leave_out_matches_enumeration(n, seed, data):
    M = gen_random(n, seed)
    k = data.draw(st.integers(1, 2))
    rows = data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))
    a = pmf_leave_out(M, rows).coeffs
    b = ex.pmf_enumerate(M, IndexSelection.full(n, rows)).coeffs
    assert len(a) == n - k + 1
    assert np.max(np.abs(a - b)) < 1e-12


def test_pmf_is_a_distribution_at_the_cap():
    q = pmf_exact(gen_random(20, 4))
    assert abs(math.fsum(q.coeffs) - 1) < 1e-12
    assert q.coeffs.min() >= 0


def test_capacity():
    with pytest.raises(CapacityError):
        pmf_exact(gen_constant(21, 0.1))
    with pytest.raises(CapacityError):
        kappa(gen_random(8, 0))
    assert kappa(gen_random(9, 0), fallback=True).value == 1.0
    with pytest.raises(PreconditionError):
        kappa(gen_random(3, 0))


def test_kappa_small_cases():
    # at n = 4 the double-deletion sub-models contain a single summand that
    # can be removed, leaving a point mass
    assert kappa(gen_random(4, 1)).value == 1.0
    r = kappa(gen_random(6, 1))
    assert 0 < r.value <= 1 and r.exact


def test_real_rootedness():
    assert real_rooted([0.25, 0.5, 0.25])
    assert not real_rooted([0.5, 0.0, 0.5])
    assert real_rooted([0.0, 0.0, 1.0])
    q = pmf_exact(gen_random(7, 3, column_monotone=True))
    assert real_rooted(q)
    qs = ex.bernoulli_decomposition(q, 7)
    assert np.allclose(ex.bernoulli_convolution(qs), q.coeffs, atol=1e-9)


def test_sturm_counts_distinct_roots():
    # (z + 1)^2 (z + 2): two distinct real roots, square-free degree 2
    assert ex.sturm_real_root_count([2, 5, 4, 1]) == (2, 2)
    # z^2 + 1 has none
    assert ex.sturm_real_root_count([1, 0, 1])[0] == 0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagsum import (
    BernoulliMatrix,
    IndexSelection,
    PreconditionError,
    compute_moments,
    gen_constant,
    gen_identity,
    gen_matching,
    gen_random,
    pmf_exact,
    poisson_pmf,
    tv_distance,
)
from diagsum import bounds as bd
from diagsum.exact import pmf_enumerate


def scaled(n, seed, scale):
    return BernoulliMatrix(gen_random(n, seed).p * scale, {"generator": f"random:{n}:{seed}"})


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 6), st.integers(0, 10**6), st.sampled_from([1.0, 0.5, 0.1, 0.02]))
def test_every_bound_holds(n, seed, scale):
    R = bd.bound_report(scaled(n, seed, scale))
    assert R.failures() == []


@pytest.mark.parametrize(
    "M",
    [gen_identity(5), gen_constant(6, 0.3), gen_constant(4, 1.0), gen_matching([2, 2, 2], [2, 2, 2]), gen_random(7, 5, True)],
    ids=["identity", "constant", "all-ones", "matching", "monotone"],
)
def test_named_families(M):
    R = bd.bound_report(M, with_injection=True)
    assert R.failures() == []
    assert all(b.holds for b in R.bounds if b.distance_exact is not None)


def test_constant_first_order_value():
    rep = compute_moments(gen_constant(6, 0.3))
    assert abs(bd.tv_bound_poisson(rep)[0] - (1 - math.exp(-1.8)) * 0.3) < 1e-12


@pytest.mark.parametrize("d,m", [(1, 6), (2, 3), (2, 10), (3, 5)])
def test_matching_closed_form(d, m):
    rep = compute_moments(gen_matching([d] * m, [d] * m))
    assert abs(bd.tv_bound_poisson(rep)[0] - bd.tv_bound_matching(d, d * m)) < 1e-12


@pytest.mark.parametrize("d,m", [(1, 6), (2, 3), (2, 5)])
def test_matching_refined_form(d, m):
    # with all blocks of size d the refined bound collapses to a closed form
    # that can only be larger than the matrix version
    M = gen_matching([d] * m, [d] * m)
    rep = compute_moments(M)
    val = bd.tv_bound_poisson_refined(rep, bd.epsilons(M, rep))
    assert val <= bd.tv_bound_matching_refined(d, d * m) + 1e-12


def test_lambda_prime_forms_agree():
    lp = bd.lambda_primes(gen_random(6, 2), double_sums=True)
    assert lp.max_mismatch() < 1e-12
    assert np.isnan(lp.closed2[1, 1, 0, 2])


def test_epsilons_need_n_at_least_4():
    with pytest.raises(PreconditionError):
        bd.epsilons(gen_random(3, 0))


def test_trivial_flag_without_clamping():
    R = bd.bound_report(gen_constant(5, 1.0))
    e = R.entry("tv_q2")
    assert e.trivial and e.value > 1


def test_json_schema():
    obj = bd.bound_report(gen_random(5, 1), seed=11).to_json()
    assert {"bounds", "matrix_meta", "seed"} <= obj.keys()
    assert obj["seed"] == 11
    assert {"name", "value", "distance_exact", "holds", "components"} <= obj["bounds"][0].keys()


def test_empirical_ratio_edge_cases():
    # identity matrix: var = lambda, so the leading terms vanish and the
    # left-hand side is the distance itself
    R = bd.bound_report(gen_identity(6))
    e = R.entry("tv_po_first_order")
    assert abs(R.ratios["tv"].lhs - e.distance_exact) < 1e-15
    assert all(math.isfinite(r.ratio) for r in R.ratios.values())


def test_injection_full_reduces_to_first_order():
    M = gen_random(6, 8)
    rep = compute_moments(M)
    ib = bd.injection_bounds(M, IndexSelection.full(6), rep.lam)
    assert abs(ib.tv - bd.tv_bound_poisson(rep)[1]) < 1e-12
    assert abs(ib.mu - rep.lam) < 1e-12


def test_injection_minor_bound():
    # the T'_{j,r} sub-model against Po(lambda), compared with its relaxed form
    M = gen_random(6, 9)
    rep = compute_moments(M)
    n, lam = 6, rep.lam
    lp = bd.lambda_primes(M)
    h = bd.stein_factor(lam)
    for j, r in [(0, 0), (2, 5), (5, 1)]:
        ib = bd.injection_bounds(M, IndexSelection.minor(n, [j], [r]), lam)
        relaxed = abs(lam - lp.closed1[j, r]) * bd.g_factor(lam) + n * n / (n - 1) ** 2 * h * (
            rep.sum_row_sq + (n - 1) / (n - 2) * rep.gamma_pp
        )
        assert abs(ib.mu - lp.closed1[j, r]) < 1e-12
        assert ib.tv <= relaxed + 1e-12
        q = pmf_exact(M, IndexSelection.minor(n, [j], [r])).to_measure()
        assert tv_distance(q, poisson_pmf(lam)) <= ib.tv + 1e-12


def test_injection_two_by_two_against_enumeration():
    M = BernoulliMatrix([[0.2, 0.9, 0.1], [0.6, 0.3, 0.4], [0.5, 0.5, 0.7]])
    sel = IndexSelection.minor(3, [2], [0])
    for t in (0.3, 1.0, 2.0):
        ib = bd.injection_bounds(M, sel, t)
        q = pmf_enumerate(M, sel).to_measure()
        assert tv_distance(q, poisson_pmf(t)) <= ib.tv + 1e-12
    with pytest.raises(PreconditionError):
        bd.injection_bounds(M, IndexSelection.minor(3, [0, 1], [0, 1]), 1.0)


def test_anchor_bound_for_small_p():
    # the refined bound holds along the constant-p anchor
    for p in (0.01, 0.02, 0.05, 0.1):
        assert bd.bound_report(gen_constant(8, p)).entry("tv_po_second_order").holds


def test_exact_distance_small_p_behaviour():
    # for Bin(8, p) with small p the distance scales like lambda * p, so
    # d_TV / p is close to lambda rather than to a fixed constant
    p = 0.01
    d = tv_distance(pmf_exact(gen_constant(8, p)).to_measure(), poisson_pmf(8 * p))
    assert 0.06 < d / p < 0.08

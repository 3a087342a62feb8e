import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import poisson
from diagsum import DomainError, SignedPMF, diff_convolve, local_norm, poisson_pmf, q2_measure, tv_distance, tv_norm, wasserstein_norm
from diagsum.measures import dirac, norms, second_difference_norms

weights = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30)


@pytest.mark.parametrize("t", [0.01, 0.5, 3.0, 40.0, 300.0])
def test_poisson_weights_and_tail(t):
    P = poisson_pmf(t)
    k = np.arange(0, min(P.end, 150))
    want = np.exp(-t + k * math.log(t) - np.array([math.lgamma(x + 1) for x in k]))
    assert np.max(np.abs(P.weights[: len(k)] - want)) < 1e-13
    assert P.tail_bound < 1e-14
    assert abs(P.total() - 1) < 1e-13


def test_poisson_domain():
    for t in (0.0, -1.0, 701.0):
        with pytest.raises(DomainError):
            poisson_pmf(t)


def test_q2_matches_its_definition():
    lam, var = 2.3, 1.6
    Po = poisson_pmf(lam)
    built = Po - (lam - var) / 2 * diff_convolve(Po, 2)
    Q = q2_measure(lam, var)
    n = min(Q.end, built.end) - 3
    assert np.max(np.abs(Q.dense(n) - built.dense(n))) < 1e-15
    assert abs(Q.total() - 1) < 1e-13


def test_q2_mean_and_variance():
    lam, var = 3.0, 2.2
    Q = q2_measure(lam, var)
    k = np.arange(Q.end)
    m = math.fsum(Q.weights * k)
    v = math.fsum(Q.weights * k**2) - m * m
    assert abs(m - lam) < 1e-12 and abs(v - var) < 1e-12


def test_simple_distances():
    assert tv_distance(dirac(0), dirac(1)) == 1.0
    assert wasserstein_norm(dirac(3) - dirac(0)) == 3.0
    assert local_norm(dirac(2) - dirac(5)) == 1.0
    a = SignedPMF(0, [0.5, 0.5])
    b = SignedPMF(0, [0.25, 0.75])
    assert tv_distance(a, b) == 0.25
    with pytest.raises(DomainError):
        wasserstein_norm(a)


@settings(max_examples=100)
@given(weights, st.integers(0, 6))
def test_difference_turns_w_into_tv(w, off):
    Q = SignedPMF(off, w)
    assert abs(wasserstein_norm(diff_convolve(Q, 1)) - tv_norm(Q)) <= 1e-12 * max(1.0, tv_norm(Q))


@settings(max_examples=60)
@given(weights, weights)
def test_tv_is_half_l1_for_probability_vectors(u, v):
    u = np.abs(u) + 1e-3
    v = np.abs(v) + 1e-3
    P, Q = SignedPMF(0, u / u.sum()), SignedPMF(0, v / v.sum())
    d = tv_distance(P, Q)
    assert 0 <= d <= 1
    pos = np.clip(P.dense(40) - Q.dense(40), 0, None).sum()
    assert abs(d - pos) < 1e-12


def test_algebra():
    P = SignedPMF(2, [1.0, -2.0])
    Q = SignedPMF(0, [3.0])
    R = P + Q
    assert R.offset == 0 and R.dense().tolist() == [3.0, 0.0, 1.0, -2.0]
    assert (-P)[3] == 2.0 and (2 * P)[2] == 2.0
    assert SignedPMF.from_json(P.to_json()).weights.tolist() == P.weights.tolist()
    assert set(norms(SignedPMF(0, [1.0, -1.0]))) == {"tv", "loc", "w"}


@pytest.mark.parametrize("t", [0.05, 0.3, 1.0, 2.5, 7.0, 30.0, 80.0])
def test_second_difference_norm_bounds(t):
    for v in second_difference_norms(t).values():
        assert v["value"] <= v["bound"] + 1e-12


def test_second_difference_anchors():
    # at t = 1 the total variation bound 3/e is attained
    assert abs(second_difference_norms(1.0)["tv"]["value"] - 3 / math.e) < 1e-12
    for v in second_difference_norms(80.0).values():
        assert abs(v["value"] / v["leading"] - 1) < 0.05

"""Solutions of the Poisson Stein equation f(m) = t g(m+1) - m g(m) and
numerical checks of their norm bounds and of the identities built on them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from diagsum import exact as ex
from diagsum.errors import CapacityError, DomainError
from diagsum.matrix import BernoulliMatrix, make_rng
from diagsum.measures import TAIL_TOL, diff_convolve, poisson_pmf

EXTRA_RANGE = 30  # tabulate g this far past the Poisson truncation point
BACKWARD_PAD = 100  # backward recursion starts this far beyond the range


@dataclass(frozen=True)
class SteinSolution:
    """g on {0, ..., M+1} with g(0) = 0 solving the Stein equation for f on {0, ..., M}."""

    t: float
    f: np.ndarray
    g: np.ndarray
    g_forward: np.ndarray = field(repr=False)
    g_backward: np.ndarray = field(repr=False)
    tail_bound: float = 0.0

    @property
    def M(self) -> int:
        return len(self.f) - 1

    def residual(self) -> float:
        m = np.arange(self.M + 1)
        r = self.f - (self.t * self.g[1:] - m * self.g[:-1])
        return float(np.max(np.abs(r)))

    def delta(self) -> np.ndarray:
        """Delta g(m) = g(m+1) - g(m) for m = 0, ..., M."""
        return np.diff(self.g)

    def sup_g(self) -> float:
        return float(np.max(np.abs(self.g[1:])))

    def sup_delta(self) -> float:
        """sup over m >= 1 of |Delta g(m)|; Delta g(0) = g(1) depends on the
        convention g(0) = 0 and is controlled by sup_g."""
        return float(np.max(np.abs(self.delta()[1:])))

    def agreement(self) -> float:
        """Largest gap between forward and backward g where both are stable."""
        t = self.t
        w = 3.0 * math.sqrt(t) + 2.0
        m = np.arange(len(self.g))
        mask = (m >= 1) & (np.abs(m - 1 - t) <= w)
        return float(np.max(np.abs(self.g_forward[mask] - self.g_backward[mask])))


def _range(t: float, tail_tol: float) -> int:
    return len(poisson_pmf(t, tail_tol).weights) - 1 + EXTRA_RANGE


def _poisson_table(t: float, L: int) -> np.ndarray:
    k = np.arange(L + 1)
    return np.exp(-t + k * math.log(t) - np.array([math.lgamma(x + 1) for x in k]))


def stein_solve(
    t: float, h: Callable[[np.ndarray], np.ndarray] | np.ndarray, tail_tol: float = TAIL_TOL
) -> SteinSolution:
    """Solve the Stein equation for f = h - E h(Y), Y ~ Po(t).

    ``h`` is a vectorised callable on the integers or an array covering at
    least the tabulation range plus the backward padding. g(m+1) uses the
    forward sum for m < t and the backward sum for m >= t.
    """
    t = float(t)
    if not t > 0:
        raise DomainError("t must be positive")
    M = _range(t, tail_tol)
    L = M + BACKWARD_PAD
    k = np.arange(L + 1)
    hv = np.asarray(h(k) if callable(h) else h, dtype=float)
    if len(hv) < L + 1:
        raise DomainError(f"h must cover 0..{L}")
    hv = hv[: L + 1]
    po = _poisson_table(t, L)
    Eh = math.fsum(po * hv)
    f = hv - Eh
    # forward: S_m = sum_{j<=m} po(j) f(j) / po(m), g(m+1) = S_m / t
    # the forward sum amplifies rounding like prod m/t past t, so stop it
    # well beyond the region where it is used or compared
    fwd = np.full(L + 2, np.nan)
    fwd[0] = 0.0
    S = 0.0
    for m in range(min(L + 1, int(t + 3.0 * math.sqrt(t)) + 4)):
        S = S * m / t + f[m]
        fwd[m + 1] = S / t
    # backward: R_m = sum_{j>m} po(j) f(j) / po(m), g(m+1) = -R_m / t
    bwd = np.zeros(L + 2)
    R = 0.0
    for m in range(L - 1, -1, -1):
        R = t / (m + 1) * (f[m + 1] + R)
        bwd[m + 1] = -R / t
    g = np.where(np.arange(L + 2) - 1 < t, fwd, bwd)
    g[0] = 0.0
    tail = math.exp(-t + (L + 1) * math.log(t) - math.lgamma(L + 2)) * np.max(np.abs(f))
    return SteinSolution(t, f[: M + 1], g[: M + 2], fwd[: M + 2], bwd[: M + 2], float(tail))


def set_indicator(A) -> Callable[[np.ndarray], np.ndarray]:
    A = np.array(sorted(set(int(a) for a in A)), dtype=int)
    return lambda k: np.isin(k, A).astype(float)


def point_indicator(a: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda k: (k == a).astype(float)


def random_lipschitz(rng: np.random.Generator, length: int) -> np.ndarray:
    """A Lipschitz-1 function on {0, ..., length - 1}, continued with slope
    zero beyond the random part."""
    steps = rng.uniform(-1.0, 1.0, size=length - 1)
    cut = min(length - 1, 60)
    steps[cut:] = 0.0
    return np.concatenate([[0.0], np.cumsum(steps)])


# ----------------------------------------------------------------------
# norm bounds for g
# ----------------------------------------------------------------------


@dataclass
class GBoundReport:
    t: float
    worst: dict  # bound name -> largest (value - bound)
    residual: float
    agreement: float
    cases: int

    @property
    def holds(self) -> bool:
        return all(v <= 1e-10 for v in self.worst.values())


def _point_solutions(t: float, amax: int) -> list[SteinSolution]:
    return [stein_solve(t, point_indicator(a)) for a in range(amax + 1)]


def verify_g_bounds(
    t: float,
    amax: int = 12,
    exhaustive: bool | None = None,
    n_random: int = 100,
    n_lipschitz: int = 20,
    seed: int = 0,
    pmfs: Sequence[np.ndarray] = (),
) -> GBoundReport:
    """Check the sup-norm bounds for set, point and Lipschitz test functions.

    Set solutions come from point solutions by linearity; sets are all
    subsets of {0, ..., amax} when ``exhaustive`` (default t <= 5) and
    ``n_random`` random subsets otherwise. ``pmfs`` are laws of variables Z
    used for the mean-absolute-increment bound.
    """
    rng = make_rng(seed)
    h_t = -math.expm1(-t) / t
    pts = _point_solutions(t, amax)
    G = np.array([s.g for s in pts])  # (amax+1, M+2)
    res = max(s.residual() for s in pts)
    agree = max(s.agreement() for s in pts)
    if exhaustive is None:
        exhaustive = t <= 5
    if exhaustive:
        masks = np.array(list(itertools.product((0.0, 1.0), repeat=amax + 1)))
    else:
        masks = rng.integers(0, 2, size=(n_random, amax + 1)).astype(float)
    GA = masks @ G
    sup_g = np.max(np.abs(GA[:, 1:]), axis=1)
    sup_d = np.max(np.abs(np.diff(GA, axis=1)[:, 1:]), axis=1)
    worst = {
        "set_sup_g": float(sup_g.max() - min(1.0, math.sqrt(2 / (t * math.e)))),
        "set_sup_delta": float(sup_d.max() - h_t),
        "point_sup_g": max(s.sup_g() for s in pts) - 2 * h_t,
    }
    cases = len(masks) + len(pts)
    # Lipschitz test functions
    L = _range(t, TAIL_TOL) + BACKWARD_PAD + 1
    wl, wd = -np.inf, -np.inf
    for _ in range(n_lipschitz):
        s = stein_solve(t, random_lipschitz(rng, L))
        res = max(res, s.residual())
        wl = max(wl, s.sup_g() - 1.0)
        wd = max(wd, s.sup_delta() - min(1.0, 4.0 / 3.0 * math.sqrt(2 / (t * math.e))))
    worst["lipschitz_sup_g"] = wl
    worst["lipschitz_sup_delta"] = wd
    cases += n_lipschitz
    # E |Delta g_{a}(Z)| <= min{1, 2 c(Z)} (1 - e^{-t}) / t
    if pmfs:
        wz = -np.inf
        for q in pmfs:
            q = np.asarray(q, dtype=float)
            c = float(q.max())
            for s in pts:
                d = np.abs(s.delta())
                k = min(len(q), len(d))
                # mass of Z beyond the table is charged at the sup bound
                val = float(q[:k] @ d[:k]) + float(q[k:].sum()) * h_t
                wz = max(wz, val - min(1.0, 2 * c) * h_t)
        worst["point_mean_abs_delta"] = wz
        cases += len(pmfs) * len(pts)
    return GBoundReport(t, worst, res, agree, cases)


def verify_point_identity(t: float, a: int) -> float:
    """|sum_{m>=0} |Delta g_{t,{a}}(m)| - 2 Delta g_{t,{a}}(a)|.

    Past max(a, t) the increments keep one sign and g tends to 0, so the
    untabulated tail of the sum telescopes to |g(M+1)|.
    """
    s = stein_solve(t, point_indicator(a))
    d = s.delta()
    if a >= len(d):
        raise DomainError("a lies beyond the tabulated range")
    return abs(math.fsum(np.abs(d)) + abs(s.g[-1]) - 2 * d[a])


# ----------------------------------------------------------------------
# the expansion identity for W = sum_j X_{j, rho(j)}
# ----------------------------------------------------------------------


def _bernoulli_sum_pmf(ps: Sequence[float], length: int) -> np.ndarray:
    q = np.zeros(length)
    q[0] = 1.0
    for p in ps:
        q[1:] = q[1:] * (1 - p) + q[:-1] * p
        q[0] *= 1 - p
    return q


@dataclass
class PropIdentity:
    lhs: float
    d1: float
    d2: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.d1 - self.d2)


def verify_prop_identity(M: BernoulliMatrix, h: np.ndarray) -> PropIdentity:
    """Evaluate E(mu h(W+1) - W h(W)), D1 and D2 exactly by enumerating all
    permutations; ``h`` must cover {0, ..., n+2}."""
    n = M.n
    if n > 6:
        raise CapacityError("exact permutation enumeration is limited to n <= 6")
    h = np.asarray(h, dtype=float)
    if len(h) < n + 3:
        raise DomainError(f"h must cover 0..{n + 2}")
    p = np.asarray(M.p)
    rowm = p.mean(axis=1)
    mu = float(rowm.sum())
    dh = np.diff(h)  # dh[m] = h(m+1) - h(m)
    L = n + 1
    ks = np.arange(L)
    lhs_acc, d1_acc, d2_acc = [], [], []
    for perm in itertools.permutations(range(n)):
        diag = p[np.arange(n), perm]
        qW = _bernoulli_sum_pmf(diag, L)
        lhs_acc.append(math.fsum(qW * (mu * h[ks + 1] - ks * h[ks])))
        for j in range(n):
            qj = _bernoulli_sum_pmf(np.delete(diag, j), L)
            d1_acc.append(rowm[j] * diag[j] * math.fsum(qj * dh[ks + 1]))
            for k in range(n):
                if k == j:
                    continue
                coef = (p[j, perm[j]] - p[j, perm[k]]) * (p[k, perm[j]] - p[k, perm[k]])
                if coef == 0.0:
                    continue
                qjk = _bernoulli_sum_pmf(np.delete(diag, [j, k]), L)
                d2_acc.append(coef * math.fsum(qjk * dh[ks + 1]))
    nf = math.factorial(n)
    return PropIdentity(
        lhs=math.fsum(lhs_acc) / nf, d1=math.fsum(d1_acc) / nf, d2=math.fsum(d2_acc) / (2 * n * nf)
    )


# ----------------------------------------------------------------------
# second difference of Po(t) against the Stein solution
# ----------------------------------------------------------------------


def verify_q2_stein_link(t: float, h: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """Both sides of  int h d((delta_1 - delta_0)^{*2} * Po(t)) = -2 E Delta g(Y+1)."""
    s = stein_solve(t, h)
    po = poisson_pmf(t)
    D2 = diff_convolve(po, 2)
    k = np.arange(D2.offset, D2.end)
    lhs = math.fsum(D2.weights * np.asarray(h(k), dtype=float))
    d = s.delta()
    m = len(po.weights)
    rhs = -2 * math.fsum(po.weights * d[1 : m + 1])
    return lhs, rhs


def mean_abs_delta_pmfs(M: BernoulliMatrix) -> list[np.ndarray]:
    """Exact laws of S_n and its one-row deletions, used as the variables Z."""
    q = [ex.pmf_exact(M).coeffs]
    q += [x.coeffs for x in ex.pmf_batch(M, [ex.IndexSelection.full(M.n, {j}) for j in range(M.n)])]
    return [np.asarray(x) for x in q]

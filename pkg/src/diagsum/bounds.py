"""Explicit Poisson and second-order approximation bounds for S_n.

Every bound is evaluated from closed-form matrix functionals and, where the
matrix is small enough for the exact engine, paired with the exact distance
it controls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from diagsum import exact as ex
from diagsum.errors import PreconditionError
from diagsum.matrix import BernoulliMatrix, IndexSelection, select
from diagsum.measures import (
    TAIL_TOL,
    SignedPMF,
    local_norm,
    poisson_pmf,
    q2_measure,
    tv_distance,
    wasserstein_norm,
)
from diagsum.moments import (
    MomentReport,
    compute_moments,
    gamma_family,
    gamma_prime_bounds,
    gamma_prime_product_bound,
    gamma_prime_zero_one,
    monotonicity_flags,
    transpose,
)

HOLD_TOL = 1e-10
E = math.e


def stein_factor(lam: float) -> float:
    """(1 - e^{-lam}) / lam."""
    return -math.expm1(-lam) / lam


def w_factor(lam: float) -> float:
    """min{1, (4/3) sqrt(2 / (lam e))}."""
    return min(1.0, 4.0 / 3.0 * math.sqrt(2.0 / (lam * E)))


def g_factor(lam: float) -> float:
    """min{1, sqrt(2 / (lam e))}."""
    return min(1.0, math.sqrt(2.0 / (lam * E)))


# ----------------------------------------------------------------------
# first-order total variation bounds
# ----------------------------------------------------------------------


def tv_bound_poisson(rep: MomentReport) -> tuple[float, float, float]:
    """Bound on d_TV(P^{S_n}, Po(lam)) in its three algebraically equal forms:
    via gamma', via sum pbar^2 + gamma'', via (1/n) sum p^2 - gamma'''."""
    h = stein_factor(rep.lam)
    return (
        h * (rep.lam - rep.var + rep.gamma_p),
        h * (rep.sum_row_sq + rep.gamma_pp),
        h * (rep.sum_p_sq / rep.n - rep.gamma_ppp),
    )


def deficit_sandwich(rep: MomentReport) -> tuple[float, float]:
    """A = lam - Var + gamma' and the classical B = (n-2)/n (lam - Var) + 2 lam^2 / n;
    A <= B <= (3 - 2/n) A."""
    n = rep.n
    A = rep.lam - rep.var + rep.gamma_p
    B = (n - 2) / n * (rep.lam - rep.var) + 2 * rep.lam**2 / n
    return A, B


def tv_bound_classical(rep: MomentReport) -> float:
    return stein_factor(rep.lam) * deficit_sandwich(rep)[1]


def tv_bound_classical_relaxed(rep: MomentReport) -> float:
    """(3/2) (1-e^{-lam})/lam (sum pbar_j.^2 + sum pbar_.r^2 - 2/(3n^2) sum p^2)."""
    n = rep.n
    return 1.5 * stein_factor(rep.lam) * (
        rep.sum_row_sq + rep.sum_col_sq - 2.0 / (3 * n * n) * rep.sum_p_sq
    )


def tv_bound_matching(d: int, n: int) -> float:
    """Closed form of the first-order bound for the matching problem with all
    blocks of size d."""
    return -math.expm1(-d) * ((3 * d - 1) / n - (d - 1) * (2 * d - 1) / (n * (n - 1)))


# ----------------------------------------------------------------------
# second-order machinery
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaPrimes:
    closed1: np.ndarray  # lambda'_{j,r}
    closed2: np.ndarray  # lambda''_{j,k,r,s}; nan where j == k or r == s
    sum1: Optional[np.ndarray] = None
    sum2: Optional[np.ndarray] = None

    def max_mismatch(self) -> float:
        if self.sum1 is None:
            return float("nan")
        mask = ~np.isnan(self.closed2)
        d2 = np.abs(self.sum2[mask] - self.closed2[mask]).max() if mask.any() else 0.0
        return float(max(np.abs(self.sum1 - self.closed1).max(), d2))


def lambda_primes(M: BernoulliMatrix, double_sums: bool | None = None) -> LambdaPrimes:
    """Means of the injection sums T'_{j,r} and T''_{j,k,r,s}.

    Closed forms use row/column means; the defining double sums over the
    remaining minor are evaluated too when ``double_sums`` (default n <= 30).
    """
    p = np.asarray(M.p)
    n = M.n
    lam = M.lam
    row = p.mean(axis=1)
    col = p.mean(axis=0)
    closed1 = (n * (lam - row[:, None] - col[None, :]) + p) / (n - 1)
    closed2 = np.full((n, n, n, n), np.nan)
    if n >= 3:
        J, K, R, S = np.meshgrid(*(np.arange(n),) * 4, indexing="ij")
        val = (
            n * (lam - row[J] - row[K] - col[R] - col[S]) + p[J, R] + p[K, R] + p[J, S] + p[K, S]
        ) / (n - 2)
        ok = (J != K) & (R != S)
        closed2[ok] = val[ok]
    if double_sums is None:
        double_sums = n <= 30
    if not double_sums:
        return LambdaPrimes(closed1, closed2)
    keep = 1.0 - np.eye(n)  # keep[j, u] = 1 if u != j
    sum1 = np.einsum("ju,uv,rv->jr", keep, p, keep) / (n - 1)
    sum2 = np.full((n, n, n, n), np.nan)
    if n >= 3:
        keep2 = keep[:, None, :] * keep[None, :, :]  # keep2[j,k,u] = 1 if u not in {j,k}
        s2 = np.einsum("jku,uv,rsv->jkrs", keep2, p, keep2) / (n - 2)
        ok = ~np.isnan(closed2)
        sum2[ok] = s2[ok]
    return LambdaPrimes(closed1, closed2, sum1, sum2)


@dataclass(frozen=True)
class Epsilons:
    eps1: float
    eps2: float
    eps3: float
    eps: float
    eps0: float
    pmax_row: float
    pmax_col: float
    crude1: float  # bound for eps1
    crude2: float  # bound for eps2
    crude3_lhs: float  # ((1-e^-lam)/lam)^2 eps3
    crude3_rhs: float
    lp_gap_max: float  # max |lam - lambda'|
    lpp_gap_max: float  # max |lam - lambda''|

    def to_json(self) -> dict:
        return asdict(self)


def epsilons(M: BernoulliMatrix, rep: MomentReport | None = None, lp: LambdaPrimes | None = None) -> Epsilons:
    n = M.n
    if n < 4:
        raise PreconditionError("the second-order error terms need n >= 4")
    rep = rep or compute_moments(M)
    lp = lp or lambda_primes(M, double_sums=False)
    p = np.asarray(M.p)
    lam = rep.lam
    row = np.asarray(rep.row_means)
    gap1 = np.abs(lam - lp.closed1)
    eps1 = 2.0 / n * math.fsum((row[:, None] * p * gap1).ravel())
    A = np.abs(p[:, :, None] - p[:, None, :])  # A[j,r,s]
    gap2 = np.nan_to_num(np.abs(lam - lp.closed2), nan=0.0)  # zero where j==k or r==s
    W = np.einsum("jrs,krs,jkrs->jk", A, A, gap2)
    eps2 = math.fsum(W.ravel()) / (n * n * (n - 1))
    eps3 = (
        2.0 * n * n / (n - 2) ** 2
        * ((n - 2) / (n - 1) * rep.sum_row_sq + math.sqrt((n - 1) / (n - 3)) * rep.gamma_pp) ** 2
    )
    h = stein_factor(lam)
    eps = g_factor(lam) * (eps1 + eps2) + h * eps3
    eps0 = tv_bound_poisson(rep)[0]
    pmr = float(row.max())
    pmc = float(max(rep.col_means))
    return Epsilons(
        eps1=eps1,
        eps2=eps2,
        eps3=eps3,
        eps=eps,
        eps0=eps0,
        pmax_row=pmr,
        pmax_col=pmc,
        crude1=2 * (pmr + pmc) * rep.sum_row_sq,
        crude2=4 * (pmr + pmc) * rep.gamma_pp,
        crude3_lhs=h * h * eps3,
        crude3_rhs=2.0 * n * n * (n - 1) / ((n - 2) ** 2 * (n - 3)) * eps0**2,
        lp_gap_max=float(gap1.max()),
        lpp_gap_max=float(np.nanmax(np.abs(lam - lp.closed2))),
    )


def tv_bound_q2(rep: MomentReport, eps: Epsilons) -> float:
    """Bound on d_TV(P^{S_n}, Q2)."""
    return stein_factor(rep.lam) * eps.eps


def tv_bound_poisson_refined(rep: MomentReport, eps: Epsilons) -> float:
    """min{1, 3/(4 lam e)} (lam - Var) + (1-e^{-lam})/lam * eps."""
    lam = rep.lam
    return min(1.0, 3.0 / (4 * lam * E)) * rep.deficit + stein_factor(lam) * eps.eps


def tv_bound_matching_refined(d: int, n: int) -> float:
    """Second-order refinement for matching blocks of size d (n >= 4):
    3/(4e) (d-1)/(n-1) + 4 e0 (2^{3/2} sqrt(d) / (n sqrt(e)) + n^2(n-1)/(2(n-2)^2(n-3)) e0)."""
    e0 = tv_bound_matching(d, n)
    return 3.0 / (4 * E) * (d - 1) / (n - 1) + 4 * e0 * (
        2**1.5 * math.sqrt(d) / (n * math.sqrt(E)) + n * n * (n - 1) / (2 * (n - 2) ** 2 * (n - 3)) * e0
    )


# ----------------------------------------------------------------------
# Wasserstein and local bounds
# ----------------------------------------------------------------------


def w_loc_bounds_poisson(rep: MomentReport, eta1: float, eta2: float) -> tuple[float, float]:
    lam = rep.lam
    w = w_factor(lam) * (rep.sum_row_sq + rep.gamma_pp)
    loc = 2 * stein_factor(lam) * (eta1 * rep.sum_row_sq + eta2 * rep.gamma_pp)
    return w, loc


def w_loc_bounds_q2(rep: MomentReport, eps: Epsilons, kappa: float) -> tuple[float, float]:
    lam = rep.lam
    w = w_factor(lam) * eps.eps
    loc = 2 * stein_factor(lam) ** 2 * (eps.eps1 + eps.eps2 + kappa * eps.eps3)
    return w, loc


def w_loc_bounds_poisson_refined(rep: MomentReport, eps: Epsilons, kappa: float) -> tuple[float, float]:
    lam = rep.lam
    w_q2, loc_q2 = w_loc_bounds_q2(rep, eps, kappa)
    w = min(1.0, 1.0 / math.sqrt(2 * lam * E)) * rep.deficit + w_q2
    loc = min(1.0, 0.5 * (3.0 / (2 * lam * E)) ** 1.5) * rep.deficit + loc_q2
    return w, loc


@dataclass(frozen=True)
class Ratio:
    lhs: float
    bracket: float
    ratio: Optional[float]
    anomaly: bool


def _ratio(lhs: float, bracket: float) -> Ratio:
    if bracket == 0.0:
        return Ratio(lhs, bracket, None if lhs > 1e-12 else 0.0, lhs > 1e-12)
    return Ratio(lhs, bracket, lhs / bracket, False)


def empirical_ratios(
    rep: MomentReport, eps: Epsilons, kappa: float, d_tv: float, d_w: float, d_loc: float
) -> dict[str, Ratio]:
    """Implied constants C = |distance - leading term| / bracket for the
    asymptotic statements whose constant is unspecified. Reported only."""
    lam = rep.lam
    dl = rep.deficit
    tv_lead = dl / (math.sqrt(2 * math.pi * E) * lam)
    w_lead = dl / math.sqrt(2 * math.pi * lam)
    loc_lead = dl / (2 * math.sqrt(2 * math.pi) * lam**1.5)
    m1 = min(1.0, 1.0 / lam)
    return {
        "tv": _ratio(abs(d_tv - tv_lead), m1 * (dl / lam + eps.eps)),
        "w": _ratio(
            abs(d_w - w_lead), min(1.0, 1.0 / math.sqrt(lam)) * (dl / math.sqrt(lam) + eps.eps)
        ),
        "loc": _ratio(
            abs(d_loc - loc_lead),
            m1 * (dl / lam**1.5 + m1 * (eps.eps1 + eps.eps2 + kappa * eps.eps3)),
        ),
    }


# ----------------------------------------------------------------------
# bounds for a general injection sub-model
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class InjectionBounds:
    m: int
    t: float
    mu: float
    alpha: float
    beta: float
    c_single: float  # max_j c(W_j)
    c_pair: float  # max_{j != k} c(W_{j,k})
    tv: float
    w: float
    loc: float


def injection_bounds(M: BernoulliMatrix, sel: IndexSelection, t: float) -> InjectionBounds:
    """Bounds on the distance between W = sum_{j in F} X_{j, rho(j)} (rho a
    uniform bijection F -> G given by ``sel``) and Po(t)."""
    if sel.ones_rows:
        raise PreconditionError("injection model takes no dropped rows")
    m = sel.size
    if m < 2:
        raise PreconditionError("injection model needs at least two rows")
    if not t > 0:
        raise PreconditionError("t must be positive")
    sub = select(M, sel).p
    rowm = sub.mean(axis=1)
    mu = math.fsum(rowm)
    alpha = math.fsum(rowm**2)
    beta = gamma_family(sub)[2]
    rows = sorted(sel.active_rows)
    singles = [IndexSelection(sel.active_rows, sel.active_cols, {j}) for j in rows]
    pairs = [IndexSelection(sel.active_rows, sel.active_cols, jk) for jk in itertools.combinations(rows, 2)]
    cs = [ex.concentration(q) for q in ex.pmf_batch(M, singles + pairs)]
    c1 = max(cs[: len(singles)])
    c2 = max(cs[len(singles) :])
    h = stein_factor(t)
    gap = abs(t - mu)
    return InjectionBounds(
        m=m,
        t=t,
        mu=mu,
        alpha=alpha,
        beta=beta,
        c_single=c1,
        c_pair=c2,
        tv=gap * g_factor(t) + h * (alpha + beta),
        w=gap + w_factor(t) * (alpha + beta),
        loc=2 * h * (gap + c1 * alpha + c2 * beta),
    )


# ----------------------------------------------------------------------
# exact distances and the full report
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Distances:
    tv_po: float
    w_po: float
    loc_po: float
    tv_q2: float
    w_q2: float
    loc_q2: float


def exact_distances(pmf: SignedPMF, rep: MomentReport, tail_tol: float = TAIL_TOL) -> Distances:
    po = poisson_pmf(rep.lam, tail_tol)
    q2 = q2_measure(rep.lam, rep.var, tail_tol)
    return Distances(
        tv_po=tv_distance(pmf, po),
        w_po=wasserstein_norm(pmf - po),
        loc_po=local_norm(pmf - po),
        tv_q2=tv_distance(pmf, q2),
        w_q2=wasserstein_norm(pmf - q2),
        loc_q2=local_norm(pmf - q2),
    )


@dataclass
class BoundEntry:
    name: str
    value: float
    distance_exact: Optional[float] = None
    holds: Optional[bool] = None
    kind: str = "upper"  # "upper": distance <= value; "lower": value <= distance
    trivial: bool = False
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.distance_exact is not None and self.holds is None:
            if self.kind == "upper":
                self.holds = self.distance_exact <= self.value + HOLD_TOL
            else:
                self.holds = self.value <= self.distance_exact + HOLD_TOL

    @property
    def margin(self) -> Optional[float]:
        if self.distance_exact is None:
            return None
        if self.kind == "upper":
            return self.value - self.distance_exact
        return self.distance_exact - self.value


@dataclass
class Check:
    """A named inequality ``lhs <= rhs`` (or equality within ``tol``)."""

    name: str
    lhs: float
    rhs: float
    equality: bool = False
    tol: float = HOLD_TOL

    @property
    def holds(self) -> bool:
        if self.equality:
            return abs(self.lhs - self.rhs) <= self.tol
        return self.lhs <= self.rhs + self.tol


@dataclass
class BoundReport:
    bounds: list
    checks: list
    moments: MomentReport
    epsilons: Optional[Epsilons]
    kappa: Optional[ex.KappaResult]
    etas: Optional[ex.ConcentrationReport]
    ratios: dict
    matrix_meta: dict
    seed: Optional[int] = None

    def failures(self) -> list[str]:
        out = [b.name for b in self.bounds if b.holds is False]
        out += [c.name for c in self.checks if not c.holds]
        return out

    def entry(self, name: str) -> BoundEntry:
        for b in self.bounds:
            if b.name == name:
                return b
        raise KeyError(name)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "bounds": [
                {
                    "name": b.name,
                    "value": b.value,
                    "distance_exact": b.distance_exact,
                    "holds": b.holds,
                    "kind": b.kind,
                    "trivial": b.trivial,
                    "components": b.components,
                }
                for b in self.bounds
            ],
            "checks": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "equality": c.equality, "holds": c.holds}
                for c in self.checks
            ],
            "moments": self.moments.to_json(),
            "epsilons": self.epsilons.to_json() if self.epsilons else None,
            "kappa": None
            if self.kappa is None
            else {"value": self.kappa.value, "exact": self.kappa.exact, "witness": repr(self.kappa.witness)},
            "etas": None
            if self.etas is None
            else {"eta1": self.etas.eta1, "eta2": self.etas.eta2},
            "empirical_ratios": {k: asdict(v) for k, v in self.ratios.items()},
            "matrix_meta": self.matrix_meta,
            "seed": self.seed,
        }


def _is_zero_one(p: np.ndarray) -> bool:
    return bool(np.all((p == 0.0) | (p == 1.0)))


def _quantity_checks(M: BernoulliMatrix, rep: MomentReport) -> list[Check]:
    n, lam, var = rep.n, rep.lam, rep.var
    h = stein_factor(lam)
    f1, f2, f3 = tv_bound_poisson(rep)
    A, B = deficit_sandwich(rep)
    L, R = gamma_prime_bounds(rep)
    prod = gamma_prime_product_bound(M)
    checks = [
        Check("variance_routes_agree", var, rep.var_counts, equality=True, tol=1e-10),
        Check("gamma_plus_gamma_p_eq_gamma_pp", rep.gamma + rep.gamma_p, rep.gamma_pp, True, 1e-12),
        Check(
            "gamma_pp_plus_gamma_ppp",
            rep.gamma_pp + rep.gamma_ppp,
            rep.sum_p_sq / n - rep.sum_row_sq,
            True,
            1e-12,
        ),
        Check("variance_lower", lam * (1 - rep.m), var),
        Check("variance_upper", var, lam),
        Check("m_le_lambda", rep.m, lam),
        Check("m_le_2n_over_n_minus_1", rep.m, 2 * n / (n - 1)),
        Check("deficit_le_lambda_sq", lam - var, lam * lam),
        Check("first_order_forms_12", f1, f2, True, 1e-12),
        Check("first_order_forms_13", f1, f3, True, 1e-12),
        Check("first_order_le_classical", f1, h * B),
        Check("first_order_le_one_minus_exp", f1, -math.expm1(-lam)),
        Check("sandwich_A_le_B", A, B),
        Check("sandwich_B_le_kA", B, (3 - 2 / n) * A),
        Check("classical_le_relaxed", tv_bound_classical(rep), tv_bound_classical_relaxed(rep)),
        Check("gamma_p_le_L", rep.gamma_p, L),
        Check("gamma_p_le_R", rep.gamma_p, R),
        Check("gamma_p_le_product_form", rep.gamma_p, prod),
        Check("product_form_transpose_invariant", prod, gamma_prime_product_bound(transpose(M)), True, 1e-12),
        Check("gamma_pp_ge_abs_gamma", abs(rep.gamma), rep.gamma_pp),
        Check("gamma_p_nonneg", 0.0, rep.gamma_p),
        Check("gamma_ppp_nonneg", 0.0, rep.gamma_ppp),
    ]
    p = np.asarray(M.p)
    if _is_zero_one(p):
        checks.append(Check("zero_one_product_form_equality", rep.gamma_p, prod, True, 1e-12))
        checks.append(Check("zero_one_column_pair_form", rep.gamma_p, gamma_prime_zero_one(M), True, 1e-12))
    flags = monotonicity_flags(M)
    if flags["decreasing_rows"]:
        checks.append(Check("decreasing_rows_gamma_p_zero", rep.gamma_p, 0.0, True, 0.0))
        checks.append(
            Check("decreasing_rows_first_order_coincides", f1, -math.expm1(-lam) * (1 - var / lam), True, 1e-12)
        )
    return checks


def bound_report(
    M: BernoulliMatrix,
    seed: Optional[int] = None,
    exact_cap: int = ex.EXACT_CAP,
    kappa_cap: int = ex.KAPPA_CAP,
    with_injection: bool = False,
    tail_tol: float = TAIL_TOL,
) -> BoundReport:
    """Evaluate every bound for ``M`` and pair it with exact distances when
    ``M.n <= exact_cap``."""
    n = M.n
    rep = compute_moments(M)
    lam = rep.lam
    checks = _quantity_checks(M, rep)
    exact_ok = n <= exact_cap
    dist = None
    if exact_ok:
        pmf = ex.pmf_exact(M, cap=exact_cap).to_measure()
        dist = exact_distances(pmf, rep, tail_tol)

    def d(attr):
        return getattr(dist, attr) if dist else None

    f1 = tv_bound_poisson(rep)[0]
    bounds = [
        BoundEntry("tv_po_first_order", f1, d("tv_po"), trivial=f1 > 1),
        BoundEntry("tv_po_classical", tv_bound_classical(rep), d("tv_po")),
        BoundEntry("tv_po_classical_relaxed", tv_bound_classical_relaxed(rep), d("tv_po")),
    ]
    for b in bounds[1:]:
        b.trivial = b.value > 1
    flags = monotonicity_flags(M)
    monotone = any(flags.values())
    if monotone and dist:
        bounds.append(
            BoundEntry("tv_po_monotone", -math.expm1(-lam) * (1 - rep.var / lam), d("tv_po"))
        )
        bounds.append(
            BoundEntry(
                "tv_po_monotone_lower", min(1.0, 1.0 / lam) * rep.deficit / 14.0, d("tv_po"), kind="lower"
            )
        )

    et = None
    if exact_ok:
        et = ex.etas(M, cap=exact_cap)
        w1, l1 = w_loc_bounds_poisson(rep, et.eta1, et.eta2)
        bounds.append(BoundEntry("w_po_first_order", w1, d("w_po")))
        bounds.append(
            BoundEntry("loc_po_first_order", l1, d("loc_po"), components={"eta1": et.eta1, "eta2": et.eta2})
        )
        checks.append(Check("eta1_le_2eta2", et.eta1, 2 * et.eta2))
    else:
        w1, _ = w_loc_bounds_poisson(rep, 1.0, 1.0)
        bounds.append(BoundEntry("w_po_first_order", w1))

    eps = kap = None
    ratios: dict = {}
    if n >= 4:
        lp = lambda_primes(M)
        eps = epsilons(M, rep, lp)
        if lp.sum1 is not None:
            checks.append(Check("lambda_primes_dual_forms", lp.max_mismatch(), 0.0, True, 1e-12))
        checks += [
            Check("crude_eps1", eps.eps1, eps.crude1),
            Check("crude_eps2", eps.eps2, eps.crude2),
            Check("crude_eps3", eps.crude3_lhs, eps.crude3_rhs),
            Check("eps1_le_4_sum_row_sq", eps.eps1, 4 * rep.sum_row_sq),
            Check("eps2_le_8_gamma_pp", eps.eps2, 8 * rep.gamma_pp),
        ]
        kap = ex.kappa(M, cap=kappa_cap, fallback=True)
        comps = {
            "eps1": eps.eps1,
            "eps2": eps.eps2,
            "eps3": eps.eps3,
            "eps": eps.eps,
            "kappa": kap.value,
            "kappa_exact": kap.exact,
        }
        tq = tv_bound_q2(rep, eps)
        bounds.append(BoundEntry("tv_q2", tq, d("tv_q2"), trivial=tq > 1, components=comps))
        tr = tv_bound_poisson_refined(rep, eps)
        bounds.append(BoundEntry("tv_po_second_order", tr, d("tv_po"), trivial=tr > 1, components=comps))
        w2, l2 = w_loc_bounds_q2(rep, eps, kap.value)
        bounds.append(BoundEntry("w_q2", w2, d("w_q2"), components=comps))
        bounds.append(BoundEntry("loc_q2", l2, d("loc_q2"), components=comps))
        w3, l3 = w_loc_bounds_poisson_refined(rep, eps, kap.value)
        bounds.append(BoundEntry("w_po_second_order", w3, d("w_po"), components=comps))
        bounds.append(BoundEntry("loc_po_second_order", l3, d("loc_po"), components=comps))
        if dist:
            ratios = empirical_ratios(rep, eps, kap.value, dist.tv_po, dist.w_po, dist.loc_po)

    if with_injection and exact_ok:
        bounds += injection_entries(M, rep)

    return BoundReport(
        bounds=bounds,
        checks=checks,
        moments=rep,
        epsilons=eps,
        kappa=kap,
        etas=et,
        ratios=ratios,
        matrix_meta={"n": n, **M.meta},
        seed=seed,
    )


def injection_entries(M: BernoulliMatrix, rep: MomentReport, max_pairs: int = 6) -> list[BoundEntry]:
    """Injection-model bounds for the full model and its one- and two-row
    deletions, each paired with the exact distance to Po(lambda)."""
    n = M.n
    lam = rep.lam
    sels = [("full", IndexSelection.full(n))]
    sels += [(f"minor_{j}_{r}", IndexSelection.minor(n, [j], [r])) for j in range(n) for r in range(n)]
    if n >= 4:
        pairs = list(itertools.combinations(range(n), 2))
        for (j, k), (r, s) in list(itertools.product(pairs, pairs))[:max_pairs]:
            sels.append((f"minor_{j}{k}_{r}{s}", IndexSelection.minor(n, [j, k], [r, s])))
    pmfs = ex.pmf_batch(M, [s for _, s in sels])
    po = poisson_pmf(lam)
    out = []
    for (label, sel), q in zip(sels, pmfs):
        if sel.size < 2:
            continue
        ib = injection_bounds(M, sel, lam)
        P = q.to_measure()
        D = P - po
        comps = {"mu": ib.mu, "alpha": ib.alpha, "beta": ib.beta}
        out.append(BoundEntry(f"injection_tv_{label}", ib.tv, tv_distance(P, po), components=comps))
        out.append(BoundEntry(f"injection_w_{label}", ib.w, wasserstein_norm(D), components=comps))
        out.append(BoundEntry(f"injection_loc_{label}", ib.loc, local_norm(D), components=comps))
    return out

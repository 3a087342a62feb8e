"""Exact distribution of random diagonal sums.

The probability generating function of ``S_n`` is ``per(1 + p (z - 1)) / n!``.
The permanent is evaluated with Ryser's inclusion-exclusion formula on
matrices whose entries are degree-one polynomials, so every subset term is a
product of linear polynomials and the result is the full coefficient vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from diagsum.errors import CapacityError, DomainError, NumericalError, PreconditionError
from diagsum.matrix import BernoulliMatrix, IndexSelection, SelectedMatrix, select

EXACT_CAP = 20
KAPPA_CAP = 7
ENUM_CAP = 8
NEG_TOL = 1e-12

# subset columns handled by the inner Gray-code table; 2**LOW_BITS terms
LOW_BITS = 10
# target number of subset terms per vectorised chunk
CHUNK_TERMS = 1 << 15


@dataclass(frozen=True)
class PMFPolynomial:
    """Coefficients of a probability generating function: ``coeffs[k] = P(W = k)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)

    def mean(self) -> float:
        k = np.arange(len(self.coeffs))
        return math.fsum(k * self.coeffs)

    def var(self) -> float:
        k = np.arange(len(self.coeffs))
        mu = self.mean()
        return math.fsum((k - mu) ** 2 * self.coeffs)

    def to_measure(self):
        from diagsum.measures import SignedPMF

        return SignedPMF(0, self.coeffs, 0.0)


# ----------------------------------------------------------------------
# Ryser permanent of polynomial matrices
# ----------------------------------------------------------------------


class _Neumaier:
    """Compensated running sum of equally shaped arrays."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x):
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    @property
    def value(self):
        return self.s + self.c


def _gray_table(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column sums over all subsets of the last axis of ``cols``, listed in
    Gray-code order so that consecutive subsets differ by one column.

    ``cols`` has shape (..., c). Returns sums of shape (..., 2**c) and the
    subset-size parities ``(-1)**|S|`` of shape (2**c,).
    """
    c = cols.shape[-1]
    count = 1 << c
    if c == 0:
        return np.zeros(cols.shape[:-1] + (1,)), np.ones(1)
    k = np.arange(1, count)
    low = k & -k
    flip = np.log2(low).astype(np.int64)
    gray = k ^ (k >> 1)
    step_sign = np.where((gray >> flip) & 1, 1.0, -1.0)
    deltas = cols[..., flip] * step_sign
    sums = np.concatenate([np.zeros(cols.shape[:-1] + (1,)), np.cumsum(deltas, axis=-1)], axis=-1)
    parity = np.where(np.arange(count) & 1, -1.0, 1.0)
    return sums, parity


def _poly_product(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coefficients of prod_i (u_i + v_i z) along the last axis of u, v."""
    m = u.shape[-1]
    out = np.zeros(u.shape[:-1] + (m + 1,))
    out[..., 0] = 1.0
    for i in range(m):
        ui = u[..., i : i + 1]
        vi = v[..., i : i + 1]
        head = out[..., : i + 1].copy()
        out[..., : i + 1] = head * ui
        out[..., 1 : i + 2] += head * vi
    return out


def permanent_poly_batch(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Permanents of matrices with entries ``U + V z``.

    ``U`` and ``V`` have shape (B, m, m). Returns (B, m + 1) coefficient
    arrays. Uses the centred form of Ryser's formula (Nijenhuis and Wilf):

        per(A) = (-1)**(m-1) * 2 * sum_{S subset [m-1]} (-1)**|S|
                 prod_i (x_i + sum_{c in S} a_ic),
        x_i = a_{i,m} - sum_c a_ic / 2,

    which halves the subset count and keeps row sums centred. Subsets are
    split into a low Gray-code table and a high Gray-code table; each term's
    row sums are one table entry from each.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    B, m, _ = U.shape
    if m == 0:
        return np.ones((B, 1))
    A = np.stack([U, V], axis=-1)  # (B, m, m, 2): row, column, coefficient
    x = A[:, :, m - 1, :] - 0.5 * A.sum(axis=2)  # (B, m, 2)
    free = A[:, :, : m - 1, :]  # columns enumerated by subsets
    c = m - 1
    lo = min(c, LOW_BITS)
    # (B, m, 2, c) -> tables over the subset axis
    low_sums, low_par = _gray_table(np.moveaxis(free[:, :, :lo, :], 2, -1))
    high_sums, high_par = _gray_table(np.moveaxis(free[:, :, lo:, :], 2, -1))
    # low_sums: (B, m, 2, L); high_sums: (B, m, 2, H)
    L = low_sums.shape[-1]
    H = high_sums.shape[-1]
    low_sums = np.moveaxis(low_sums, -1, 1)  # (B, L, m, 2)
    high_sums = np.moveaxis(high_sums, -1, 1)  # (B, H, m, 2)

    out = np.empty((B, m + 1))
    per_item = L * H
    if per_item <= CHUNK_TERMS:
        bchunk = max(1, CHUNK_TERMS // per_item)
        hchunk = H
    else:
        bchunk = 1
        hchunk = max(1, CHUNK_TERMS // L)
    sign = (-1.0) ** (m - 1) * 2.0
    for b0 in range(0, B, bchunk):
        b1 = min(B, b0 + bchunk)
        acc = _Neumaier((b1 - b0, m + 1))
        for h0 in range(0, H, hchunk):
            h1 = min(H, h0 + hchunk)
            rows = (
                x[b0:b1, None, None, :, :]
                + high_sums[b0:b1, h0:h1, None, :, :]
                + low_sums[b0:b1, None, :, :, :]
            )  # (b, h, L, m, 2)
            terms = _poly_product(rows[..., 0], rows[..., 1])  # (b, h, L, m+1)
            par = high_par[h0:h1, None] * low_par[None, :]
            acc.add(np.einsum("bhlk,hl->bk", terms, par))
        out[b0:b1] = sign * acc.value
    return out


def _clean(coeffs: np.ndarray, degree: int, neg_tol: float) -> np.ndarray:
    c = np.array(coeffs[: degree + 1], dtype=float)
    worst = c.min()
    if worst < -neg_tol:
        raise NumericalError(f"negative probability {worst:.3e} beyond round-off tolerance")
    c[c < 0.0] = 0.0
    return c / math.fsum(c)


def _pmf_from_selected(items: Sequence[SelectedMatrix], neg_tol: float) -> list[np.ndarray]:
    if not items:
        return []
    m = items[0].size
    P = np.stack([np.where(s.ones[:, None], 0.0, s.p) for s in items]) if m else np.zeros((len(items), 0, 0))
    per = permanent_poly_batch(1.0 - P, P) / math.factorial(m)
    return [_clean(per[i], int((~s.ones).sum()), neg_tol) for i, s in enumerate(items)]


def pmf_exact(
    M: BernoulliMatrix,
    sel: IndexSelection | None = None,
    cap: int = EXACT_CAP,
    neg_tol: float = NEG_TOL,
) -> PMFPolynomial:
    """Exact PMF of the sum over ``active_rows - ones_rows`` of
    ``X[i, sigma(i)]`` with ``sigma`` a uniform bijection onto ``active_cols``."""
    sel = sel or IndexSelection.full(M.n)
    if sel.size > cap:
        raise CapacityError(
            f"exact PMF needs a {sel.size}x{sel.size} permanent (cap {cap}); "
            "use diagsum.montecarlo for larger matrices"
        )
    return PMFPolynomial(_pmf_from_selected([select(M, sel)], neg_tol)[0])


def pmf_batch(
    M: BernoulliMatrix, sels: Sequence[IndexSelection], cap: int = EXACT_CAP, neg_tol: float = NEG_TOL
) -> list[PMFPolynomial]:
    """Exact PMFs for many selections, vectorised over selections of equal size."""
    by_size: dict[int, list[int]] = {}
    for i, s in enumerate(sels):
        if s.size > cap:
            raise CapacityError(f"selection of size {s.size} exceeds cap {cap}")
        by_size.setdefault(s.size, []).append(i)
    out: list[PMFPolynomial | None] = [None] * len(sels)
    for idx in by_size.values():
        res = _pmf_from_selected([select(M, sels[i]) for i in idx], neg_tol)
        for i, c in zip(idx, res):
            out[i] = PMFPolynomial(c)
    return out  # type: ignore[return-value]


def pmf_leave_out(M: BernoulliMatrix, exclude: Iterable[int], cap: int = EXACT_CAP) -> PMFPolynomial:
    """PMF of ``S_n`` with the summands of one or two rows removed (the
    permutation still runs over all rows)."""
    exclude = frozenset(exclude)
    if len(exclude) not in (1, 2):
        raise PreconditionError("exclude must contain one or two row indices")
    return pmf_exact(M, IndexSelection.full(M.n, exclude), cap=cap)


def pmf_enumerate(M: BernoulliMatrix, sel: IndexSelection | None = None) -> PMFPolynomial:
    """Brute-force oracle: average over all bijections of the convolution of
    the selected Bernoulli laws. Independent of the permanent route."""
    sel = sel or IndexSelection.full(M.n)
    if sel.size > ENUM_CAP:
        raise CapacityError(f"enumeration limited to {ENUM_CAP} rows")
    rows = sorted(sel.active_rows)
    cols = sorted(sel.active_cols)
    m = len(rows)
    if m == 0:
        return PMFPolynomial([1.0])
    perms = np.array(list(itertools.permutations(range(m))))
    sub = np.array(M.p)[np.ix_(rows, cols)]
    probs = sub[np.arange(m), perms]  # (m!, m)
    keep = [i for i, r in enumerate(rows) if r not in sel.ones_rows]
    dist = np.zeros((len(perms), len(keep) + 1))
    dist[:, 0] = 1.0
    for d, i in enumerate(keep):
        q = probs[:, i : i + 1]
        nxt = dist * (1.0 - q)
        nxt[:, 1 : d + 2] += dist[:, : d + 1] * q
        dist = nxt
    return PMFPolynomial(np.array([math.fsum(col) for col in dist.T]) / len(perms))


# ----------------------------------------------------------------------
# one-point concentrations
# ----------------------------------------------------------------------


def concentration(pmf: PMFPolynomial) -> float:
    """c(Z) = max_m P(Z = m)."""
    return float(np.max(pmf.coeffs))


@dataclass(frozen=True)
class ConcentrationReport:
    eta1: float
    eta2: float
    eta1_at: tuple
    eta2_at: tuple


def etas(M: BernoulliMatrix, cap: int = EXACT_CAP) -> ConcentrationReport:
    """eta1 = max_j c(S_n^(j)), eta2 = max_{j != k} c(S_n^(j,k))."""
    n = M.n
    singles = [(j,) for j in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    sels = [IndexSelection.full(n, e) for e in singles + pairs]
    cs = [concentration(p) for p in pmf_batch(M, sels, cap=cap)]
    c1, c2 = cs[:n], cs[n:]
    i1 = int(np.argmax(c1))
    if pairs:
        i2 = int(np.argmax(c2))
        eta2, at2 = c2[i2], pairs[i2]
    else:
        eta2, at2 = 1.0, ()
    return ConcentrationReport(c1[i1], eta2, singles[i1], at2)


@dataclass(frozen=True)
class KappaResult:
    value: float
    exact: bool
    witness: tuple = ()


def kappa_selections(n: int) -> list[tuple[tuple, IndexSelection]]:
    """All injection sub-models entering kappa, keyed by a readable label.

    (T'_{j,r})^B deletes row j and column r and drops the rows in B;
    (T''_{j,k,r,s})^B deletes rows {j,k}, columns {r,s} and drops B.
    The law of the latter only depends on the sets {j,k} and {r,s}.
    """
    out = []
    for j, r in itertools.product(range(n), repeat=2):
        rest = [i for i in range(n) if i != j]
        for size in (1, 2):
            for Bset in itertools.combinations(rest, size):
                out.append((("T1", j, r, Bset), IndexSelection.minor(n, [j], [r], Bset)))
    for jk in itertools.combinations(range(n), 2):
        rest = [i for i in range(n) if i not in jk]
        for rs in itertools.combinations(range(n), 2):
            for size in (1, 2):
                for Bset in itertools.combinations(rest, size):
                    out.append((("T2", jk, rs, Bset), IndexSelection.minor(n, jk, rs, Bset)))
    return out


def kappa(M: BernoulliMatrix, cap: int = KAPPA_CAP, fallback: bool = False) -> KappaResult:
    """Largest one-point concentration over every injection sub-model.

    The maximum runs over all index tuples (j, r), (j, k, r, s) as well as
    over B, which is the larger of the two possible readings.
    """
    n = M.n
    if n < 4:
        raise PreconditionError("kappa is defined for n >= 4")
    if n > cap:
        if fallback:
            return KappaResult(1.0, False)
        raise CapacityError(f"exact kappa limited to n <= {cap}; pass fallback=True for kappa = 1")
    labelled = kappa_selections(n)
    pmfs = pmf_batch(M, [s for _, s in labelled])
    cs = [concentration(p) for p in pmfs]
    i = int(np.argmax(cs))
    return KappaResult(cs[i], True, labelled[i][0])


# ----------------------------------------------------------------------
# real-rootedness
# ----------------------------------------------------------------------


def _trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    """Remainder of a / b; polynomials stored low-to-high."""
    a = list(a)
    db = len(b) - 1
    lead = b[-1]
    while len(a) - 1 >= db and a:
        q = a[-1] / lead
        shift = len(a) - 1 - db
        for i, bi in enumerate(b):
            a[shift + i] -= q * bi
        a.pop()
        _trim(a)
    return a


def sturm_real_root_count(coeffs: Sequence[float]) -> tuple[int, int]:
    """Exact Sturm-sequence count on the given (rational) coefficients.

    Returns (number of distinct real roots, degree of the square-free part).
    The polynomial has only real roots iff the two agree.
    """
    p = _trim([Fraction(float(c)) for c in coeffs])
    if not p:
        raise DomainError("zero polynomial")
    d = len(p) - 1
    if d == 0:
        return 0, 0
    dp = _trim([i * p[i] for i in range(1, len(p))])
    seq = [p, dp]
    while True:
        r = _rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-x for x in r])
    gcd_deg = len(seq[-1]) - 1

    def changes(signs):
        s = [x for x in signs if x != 0]
        return sum(1 for a, b in zip(s, s[1:]) if a != b)

    at_pos = [1 if q[-1] > 0 else -1 for q in seq]
    at_neg = [(1 if q[-1] > 0 else -1) * (-1) ** (len(q) - 1) for q in seq]
    return changes(at_neg) - changes(at_pos), d - gcd_deg


def _clustered_real_roots(coeffs: np.ndarray, tol: float) -> np.ndarray | None:
    """Real roots (with multiplicity) of a polynomial known only to double
    precision, or None if it is not numerically real-rooted.

    Multiple roots split into clusters under round-off; a cluster is replaced
    by its centroid, which is well conditioned. The result is accepted when
    every centroid is real and the rebuilt polynomial reproduces the
    coefficients to relative accuracy ``tol``.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    d = len(c) - 1
    if d <= 0:
        return np.zeros(0)
    roots = np.roots(c[::-1])
    scale = max(1.0, float(np.max(np.abs(roots))))
    for radius in (0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1):
        groups = list(range(d))
        for i in range(d):
            for j in range(i + 1, d):
                if abs(roots[i] - roots[j]) <= radius * scale:
                    gi, gj = groups[i], groups[j]
                    groups = [gi if g == gj else g for g in groups]
        real = []
        ok = True
        for g in set(groups):
            members = roots[[i for i in range(d) if groups[i] == g]]
            cen = members.mean()
            if abs(cen.imag) > 1e-9 * scale:
                ok = False
                break
            real.extend([cen.real] * len(members))
        if not ok:
            continue
        rebuilt = c[-1] * np.poly(np.array(real))[::-1]
        if np.max(np.abs(rebuilt - c)) <= tol * np.max(np.abs(c)):
            return np.sort(np.array(real))
    return None


def real_rooted(pmf: PMFPolynomial | Sequence[float], tol: float = 1e-9) -> bool:
    """True iff the generating polynomial sum_k coeffs[k] z**k has only real roots.

    Decided exactly by a Sturm sequence on the stored coefficients; when that
    rejects (round-off splits multiple roots into complex pairs) a clustered
    numerical root check with relative tolerance ``tol`` is consulted.
    """
    c = np.asarray(getattr(pmf, "coeffs", pmf), dtype=float)
    if not np.any(c != 0.0):
        raise DomainError("degenerate zero polynomial")
    distinct, sqf = sturm_real_root_count(c)
    if distinct == sqf:
        return True
    return _clustered_real_roots(c, tol) is not None


def bernoulli_decomposition(pmf: PMFPolynomial, n: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Success probabilities of independent Bernoulli summands whose sum has
    law ``pmf`` (requires a real-rooted generating function with roots <= 0).

    A root ``z <= 0`` corresponds to the factor ``1 - q + q z`` with
    ``q = 1 / (1 - z)``; ``n`` pads with zero-probability summands.
    """
    c = np.trim_zeros(np.asarray(pmf.coeffs, dtype=float), "b")
    roots = _clustered_real_roots(c, tol)
    if roots is None:
        raise DomainError("generating function is not real-rooted")
    if np.any(roots > 1e-9):
        raise DomainError("positive root: not a Bernoulli convolution")
    q = 1.0 / (1.0 - np.minimum(roots, 0.0))
    if n is not None:
        if n < len(q):
            raise DomainError("more roots than summands")
        q = np.concatenate([q, np.zeros(n - len(q))])
    return np.sort(q)[::-1]


def bernoulli_convolution(q: Sequence[float]) -> np.ndarray:
    dist = np.array([1.0])
    for qi in q:
        dist = np.convolve(dist, [1.0 - qi, qi])
    return dist

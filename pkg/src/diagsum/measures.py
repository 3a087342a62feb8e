"""Finitely supported signed measures on the non-negative integers.

Infinite-support measures (Poisson laws and their corrections) are truncated
at a point chosen so that the discarded mass is certifiably below a
tolerance; that bound travels with the measure as ``tail_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from diagsum.errors import DomainError

TAIL_TOL = 1e-14
MAX_POISSON_MEAN = 700.0


@dataclass(frozen=True)
class SignedPMF:
    """Signed counting density ``weights[i]`` at the point ``offset + i``.

    ``tail_bound`` bounds the total variation of whatever was cut off.
    """

    offset: int
    weights: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.offset < 0:
            raise DomainError("offset must be non-negative")
        w = np.array(self.weights, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @property
    def end(self) -> int:
        """One past the last stored point."""
        return self.offset + len(self.weights)

    def total(self) -> float:
        return math.fsum(self.weights)

    def dense(self, length: int | None = None) -> np.ndarray:
        """Weights on ``0, ..., length - 1`` (zero-padded)."""
        length = self.end if length is None else length
        out = np.zeros(max(length, self.end))
        out[self.offset : self.end] = self.weights
        return out[:length]

    def __getitem__(self, k: int) -> float:
        i = k - self.offset
        return float(self.weights[i]) if 0 <= i < len(self.weights) else 0.0

    def _combine(self, other: "SignedPMF", sign: float) -> "SignedPMF":
        lo = min(self.offset, other.offset)
        hi = max(self.end, other.end)
        w = np.zeros(hi - lo)
        w[self.offset - lo : self.end - lo] += self.weights
        w[other.offset - lo : other.end - lo] += sign * other.weights
        return SignedPMF(lo, w, self.tail_bound + other.tail_bound)

    def __add__(self, other: "SignedPMF") -> "SignedPMF":
        return self._combine(other, 1.0)

    def __sub__(self, other: "SignedPMF") -> "SignedPMF":
        return self._combine(other, -1.0)

    def __mul__(self, c: float) -> "SignedPMF":
        return SignedPMF(self.offset, c * self.weights, abs(c) * self.tail_bound)

    __rmul__ = __mul__

    def __neg__(self) -> "SignedPMF":
        return self * -1.0

    def to_json(self) -> dict:
        return {"offset": self.offset, "weights": self.weights.tolist(), "tail_bound": self.tail_bound}

    @classmethod
    def from_json(cls, obj: dict) -> "SignedPMF":
        return cls(obj["offset"], obj["weights"], obj.get("tail_bound", 0.0))


def dirac(k: int) -> SignedPMF:
    return SignedPMF(k, [1.0])


@dataclass(frozen=True)
class PoissonParams:
    t: float
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("Poisson mean must be positive")


def _truncation_point(
    first: Callable[[int], float], ratio: Callable[[int], float], start: int, tol: float
) -> tuple[int, float]:
    """Smallest M >= start with a certified geometric tail bound below tol.

    ``first(M)`` is the absolute term at M + 1 and ``ratio(M)`` bounds every
    successive term ratio beyond M + 1 (it must be non-increasing in M).
    """
    M = start
    while True:
        r = ratio(M)
        if r < 1.0:
            bound = first(M) / (1.0 - r)
            if bound < tol:
                return M, bound
        M += 1


def _poisson_weights(t: float, M: int) -> np.ndarray:
    w = np.empty(M + 1)
    w[0] = math.exp(-t)
    for k in range(1, M + 1):
        w[k] = w[k - 1] * t / k
    return w


def poisson_pmf(t, tail_tol: float = TAIL_TOL) -> SignedPMF:
    """Po(t) truncated where the upper tail is certifiably below ``tail_tol``."""
    if isinstance(t, PoissonParams):
        t, tail_tol = t.t, t.tail_tol
    t = float(t)
    if not t > 0:
        raise DomainError("Poisson mean must be positive")
    if t > MAX_POISSON_MEAN:
        raise DomainError(f"Poisson mean above {MAX_POISSON_MEAN} underflows e^-t")
    logpo = lambda k: -t + k * math.log(t) - math.lgamma(k + 1)
    M, bound = _truncation_point(
        lambda M: math.exp(logpo(M + 1)), lambda M: t / (M + 2), int(math.floor(t)), tail_tol
    )
    return SignedPMF(0, _poisson_weights(t, M), bound)


def q2_measure(lam: float, var: float, tail_tol: float = TAIL_TOL) -> SignedPMF:
    """Second-order signed measure

    Q2 = Po(lam) - (lam - var)/2 * (delta_1 - delta_0)^{*2} * Po(lam),

    evaluated pointwise as po(k) * (1 - (lam - var)(lam^2 - 2 k lam + k(k-1)) / (2 lam^2)).
    """
    lam = float(lam)
    if not lam > 0:
        raise DomainError("lambda must be positive")
    d = lam - float(var)
    ad = abs(d)
    logpo = lambda k: -lam + k * math.log(lam) - math.lgamma(k + 1)
    # |weight_k| <= po(k) (1 + |d| (lam + k)^2 / (2 lam^2)); ratio bound below
    term = lambda k: math.exp(logpo(k)) * (1.0 + ad * (lam + k) ** 2 / (2 * lam * lam))
    ratio = lambda M: lam / (M + 2) * ((lam + M + 2) / (lam + M + 1)) ** 2
    M, bound = _truncation_point(lambda M: term(M + 1), ratio, int(math.floor(lam)), tail_tol)
    k = np.arange(M + 1)
    po = _poisson_weights(lam, M)
    w = po * (1.0 - d * (lam * lam - 2 * k * lam + k * (k - 1)) / (2 * lam * lam))
    return SignedPMF(0, w, bound)


def diff_convolve(Q: SignedPMF, order: int = 1) -> SignedPMF:
    """Convolve ``order`` times with delta_1 - delta_0."""
    if order < 0:
        raise DomainError("order must be non-negative")
    w = np.asarray(Q.weights)
    for _ in range(order):
        nxt = np.zeros(len(w) + 1)
        nxt[1:] += w
        nxt[:-1] -= w
        w = nxt
    return SignedPMF(Q.offset, w, Q.tail_bound * 2**order)


def tv_norm(Q: SignedPMF) -> float:
    """||Q||_TV = sum_m |Q({m})|."""
    return math.fsum(np.abs(Q.weights))


def tv_distance(Q1: SignedPMF, Q2: SignedPMF) -> float:
    """sup_A |Q1(A) - Q2(A)|."""
    D = Q1 - Q2
    if abs(Q1.total() - Q2.total()) <= 1e-12 + D.tail_bound:
        return 0.5 * tv_norm(D)
    pos = math.fsum(D.weights[D.weights > 0])
    neg = -math.fsum(D.weights[D.weights < 0])
    return max(pos, neg)


def wasserstein_norm(Q: SignedPMF, mass_tol: float = 1e-10) -> float:
    """||Q||_W = sum_m |Q({0, ..., m})| for Q of total mass zero."""
    total = Q.total()
    if abs(total) > mass_tol:
        raise DomainError(f"Wasserstein norm needs total mass 0, got {total:.3e}")
    return math.fsum(np.abs(np.cumsum(Q.weights)))


def local_norm(Q: SignedPMF) -> float:
    """||Q||_loc = max_m |Q({m})|."""
    return float(np.max(np.abs(Q.weights))) if len(Q.weights) else 0.0


def norms(Q: SignedPMF) -> dict:
    """All three norms with certified truncation errors."""
    out = {
        "tv": (tv_norm(Q), Q.tail_bound),
        "loc": (local_norm(Q), Q.tail_bound),
    }
    try:
        out["w"] = (wasserstein_norm(Q), Q.tail_bound * (len(Q.weights) + 1))
    except DomainError:
        pass
    return out


def second_difference_norms(t: float, tail_tol: float = TAIL_TOL) -> dict:
    """Norms of (delta_1 - delta_0)^{*2} * Po(t) with their explicit upper
    bounds and large-t leading terms, keyed by "tv", "w" and "loc"."""
    D = diff_convolve(poisson_pmf(t, tail_tol), 2)
    e = math.e
    return {
        "tv": {
            "value": tv_norm(D),
            "bound": min(4.0, 3.0 / (t * e)),
            "leading": 4.0 / (t * math.sqrt(2 * math.pi * e)),
        },
        "w": {
            "value": wasserstein_norm(D),
            "bound": min(2.0, math.sqrt(2.0 / (t * e))),
            "leading": math.sqrt(2.0 / (math.pi * t)),
        },
        "loc": {
            "value": local_norm(D),
            "bound": min(2.0, (3.0 / (2 * t * e)) ** 1.5),
            "leading": 1.0 / (math.sqrt(2 * math.pi) * t**1.5),
        },
    }

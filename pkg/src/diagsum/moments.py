"""Closed-form moment quantities of S_n and the gamma family of
interaction functionals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from diagsum.matrix import BernoulliMatrix, transpose


@dataclass(frozen=True)
class MomentReport:
    n: int
    lam: float
    row_means: tuple
    col_means: tuple
    p_bar: float
    var_gamma: float
    var_counts: float
    gamma: float
    gamma_p: float
    gamma_pp: float
    gamma_ppp: float
    m: float
    sum_row_sq: float  # sum_j pbar_{j.}^2
    sum_col_sq: float  # sum_r pbar_{.r}^2
    sum_p_sq: float  # sum_{j,r} p_{jr}^2

    @property
    def var(self) -> float:
        return self.var_gamma

    @property
    def deficit(self) -> float:
        """lambda - Var S_n."""
        return self.lam - self.var_gamma

    def to_json(self) -> dict:
        d = asdict(self)
        d["row_means"] = list(self.row_means)
        d["col_means"] = list(self.col_means)
        return d


def _differences(p: np.ndarray) -> np.ndarray:
    """D[j, r, s] = p[j, r] - p[j, s]; zero whenever r == s."""
    return p[:, :, None] - p[:, None, :]


def _pair_sum(X: np.ndarray, Y: np.ndarray) -> float:
    """sum over (j, k) with j != k and (r, s) with r != s of X[j,r,s] Y[k,r,s].

    Terms with r == s vanish for difference tensors, so only j != k needs
    masking.
    """
    G = np.einsum("jrs,krs->jk", X, Y)
    return math.fsum(G.ravel()) - math.fsum(np.diag(G))


def gamma_family(p: np.ndarray) -> tuple[float, float, float, float]:
    """(gamma, gamma', gamma'', gamma''') by direct quadruple sums."""
    n = p.shape[0]
    D = _differences(p)
    A = np.abs(D)
    Dp = np.maximum(D, 0.0)
    Dm = np.maximum(-D, 0.0)
    c = n * n * (n - 1)
    g = _pair_sum(D, D) / (2 * c)
    gp = 2 * _pair_sum(Dp, Dm) / c
    gpp = _pair_sum(A, A) / (2 * c)
    acc = []
    for j in range(n):
        for k in range(n):
            if j != k:
                acc.append(math.fsum(((A[j] - A[k]) ** 2).ravel()))
    gppp = math.fsum(acc) / (4 * c)
    return g, gp, gpp, gppp


def compute_moments(M: BernoulliMatrix) -> MomentReport:
    p = np.asarray(M.p)
    n = M.n
    row = p.mean(axis=1)
    col = p.mean(axis=0)
    lam = math.fsum(p.ravel()) / n
    pbar = lam / n
    srow = math.fsum(row**2)
    scol = math.fsum(col**2)
    spsq = math.fsum((p**2).ravel())
    g, gp, gpp, gppp = gamma_family(p)
    var_gamma = lam - srow - g
    var_counts = lam - n / (n - 1) * (srow + scol - spsq / n**2 - lam**2 / n)
    inner = row[:, None] + col[None, :] - p / n - pbar
    m = n / (n - 1) * float(inner.max())
    return MomentReport(
        n=n,
        lam=lam,
        row_means=tuple(row.tolist()),
        col_means=tuple(col.tolist()),
        p_bar=pbar,
        var_gamma=var_gamma,
        var_counts=var_counts,
        gamma=g,
        gamma_p=gp,
        gamma_pp=gpp,
        gamma_ppp=gppp,
        m=m,
        sum_row_sq=srow,
        sum_col_sq=scol,
        sum_p_sq=spsq,
    )


def gamma_prime_transpose(M: BernoulliMatrix) -> float:
    """gamma' of the transposed matrix, i.e.

    2/(n^2(n-1)) sum_{j!=k} sum_{r!=s} (p_jr - p_kr)_+ (p_ks - p_js)_+.
    """
    return gamma_family(np.asarray(transpose(M).p))[1]


def monotonicity_flags(M: BernoulliMatrix) -> dict:
    p = np.asarray(M.p)
    dr = np.diff(p, axis=1)
    dc = np.diff(p, axis=0)
    return {
        "decreasing_rows": bool(np.all(dr <= 0)),
        "increasing_rows": bool(np.all(dr >= 0)),
        "decreasing_cols": bool(np.all(dc <= 0)),
        "increasing_cols": bool(np.all(dc >= 0)),
    }


def gamma_prime_product_bound(M: BernoulliMatrix) -> float:
    """Upper bound for gamma' with (a - b)_+ replaced by a (1 - b):

    2/(n^2(n-1)) sum_{j!=k} sum_{r!=s} p_jr (1 - p_js) p_ks (1 - p_kr).
    """
    p = np.asarray(M.p)
    n = M.n
    X = p[:, :, None] * (1.0 - p[:, None, :])  # X[j,r,s] = p_jr (1 - p_js)
    Y = np.swapaxes(X, 1, 2)  # Y[k,r,s] = p_ks (1 - p_kr)
    G = np.einsum("jrs,krs->jk", X, Y)
    # r == s terms: p(1-p) p(1-p) do not vanish here, remove them explicitly
    diag_rs = np.einsum("jr,kr->jk", np.diagonal(X, axis1=1, axis2=2), np.diagonal(Y, axis1=1, axis2=2))
    G = G - diag_rs
    total = math.fsum(G.ravel()) - math.fsum(np.diag(G))
    return 2 * total / (n * n * (n - 1))


def gamma_prime_bounds(rep: MomentReport) -> tuple[float, float]:
    """The two entries (L, R) of the minimum bounding gamma':
    L = Var - (1/n) sum p(1-p), R = (2/n)(Var - lam + lam^2)."""
    n = rep.n
    L = rep.var - (rep.lam * n - rep.sum_p_sq) / n
    R = 2.0 / n * (rep.var - rep.lam + rep.lam**2)
    return L, R


def gamma_prime_zero_one(M: BernoulliMatrix) -> float:
    """Column-pair form of gamma', valid for 0/1 matrices:

    2/(n-1) sum_{r!=s} (pbar_.r - c_rs)(pbar_.s - c_rs), c_rs = (1/n) sum_j p_jr p_js.
    """
    p = np.asarray(M.p)
    n = M.n
    col = p.mean(axis=0)
    C = p.T @ p / n
    T = (col[:, None] - C) * (col[None, :] - C)
    total = math.fsum(T.ravel()) - math.fsum(np.diag(T))
    return 2 * total / (n - 1)

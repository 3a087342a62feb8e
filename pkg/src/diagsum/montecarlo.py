"""Monte Carlo estimates of the law of S_n and of its distances to Po(lambda)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from diagsum import exact as ex
from diagsum.errors import DomainError
from diagsum.matrix import BernoulliMatrix
from diagsum.measures import SignedPMF, local_norm, poisson_pmf, tv_distance, wasserstein_norm

MIN_SAMPLES = 10_000
GROUPS = 50
CHUNK = 100_000


def sample_sn(M: BernoulliMatrix, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent draws of S_n."""
    n = M.n
    p = np.asarray(M.p)
    out = np.empty(size, dtype=np.int64)
    rows = np.arange(n)
    done = 0
    while done < size:
        b = min(CHUNK, size - done)
        perms = rng.permuted(np.tile(rows, (b, 1)), axis=1)
        probs = p[rows, perms]
        out[done : done + b] = (rng.random((b, n)) < probs).sum(axis=1)
        done += b
    return out


@dataclass(frozen=True)
class MCEstimate:
    n: int
    samples: int
    seed: int
    lam: float
    mean: float
    var: float
    pmf: tuple
    tv: float
    tv_se: float
    w: float
    w_se: float
    loc: float
    loc_se: float
    bias_bound: float  # bound on E(plug-in TV) - TV
    tv_exact: Optional[float] = None

    def z_score(self) -> Optional[float]:
        if self.tv_exact is None or self.tv_se == 0:
            return None
        return (self.tv - self.tv_exact) / self.tv_se

    def to_json(self) -> dict:
        d = asdict(self)
        d["pmf"] = list(self.pmf)
        return d


def _distances(counts: np.ndarray, po: SignedPMF) -> tuple[float, float, float]:
    emp = SignedPMF(0, counts / counts.sum())
    D = emp - po
    return tv_distance(emp, po), wasserstein_norm(D, mass_tol=1e-8), local_norm(D)


def estimate(
    M: BernoulliMatrix,
    samples: int = 1_000_000,
    seed: int = 0,
    groups: int = GROUPS,
    exact_cap: int = ex.EXACT_CAP,
) -> MCEstimate:
    """Plug-in estimates of d_TV, the Wasserstein and the local distance
    between P^{S_n} and Po(lambda) with grouped-jackknife standard errors.

    Each group draws from its own Philox substream spawned from ``seed``,
    so results do not depend on chunking.
    """
    if samples < MIN_SAMPLES:
        raise DomainError(f"at least {MIN_SAMPLES} samples are required")
    n = M.n
    lam = M.lam
    sizes = np.full(groups, samples // groups)
    sizes[: samples % groups] += 1
    streams = np.random.SeedSequence(seed).spawn(groups)
    counts = np.zeros((groups, n + 1))
    for g, (ss, size) in enumerate(zip(streams, sizes)):
        rng = np.random.Generator(np.random.Philox(ss))
        counts[g] = np.bincount(sample_sn(M, int(size), rng), minlength=n + 1)
    po = poisson_pmf(lam)
    total = counts.sum(axis=0)
    tv, w, loc = _distances(total, po)
    loo = np.array([_distances(total - c, po) for c in counts])
    se = np.sqrt((groups - 1) / groups * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    freq = total / samples
    ks = np.arange(n + 1)
    mean = float(freq @ ks)
    var = float(freq @ ks**2 - mean**2)
    # E|p_hat - p| <= sqrt(p(1-p)/N) for each point, hence the bias bound
    bias = 0.5 * math.fsum(np.sqrt(freq * (1 - freq) / samples))
    tv_exact = None
    if n <= exact_cap:
        tv_exact = tv_distance(ex.pmf_exact(M, cap=exact_cap).to_measure(), po)
    return MCEstimate(
        n=n,
        samples=samples,
        seed=seed,
        lam=lam,
        mean=mean,
        var=var,
        pmf=tuple(freq.tolist()),
        tv=tv,
        tv_se=float(se[0]),
        w=w,
        w_se=float(se[1]),
        loc=loc,
        loc_se=float(se[2]),
        bias_bound=bias,
        tv_exact=tv_exact,
    )

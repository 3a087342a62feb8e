"""Exact distributions and Poisson-approximation bounds for random diagonal
sums of Bernoulli matrices."""

from diagsum.errors import (
    CapacityError,
    DomainError,
    NumericalError,
    PreconditionError,
    ShapeError,
)
from diagsum.matrix import (
    BernoulliMatrix,
    IndexSelection,
    gen_constant,
    gen_identity,
    gen_matching,
    gen_random,
    load_matrix,
    save_matrix,
    select,
    transpose,
)
from diagsum.exact import (
    concentration,
    etas,
    kappa,
    pmf_exact,
    pmf_leave_out,
    real_rooted,
)
from diagsum.measures import (
    SignedPMF,
    diff_convolve,
    local_norm,
    poisson_pmf,
    q2_measure,
    tv_distance,
    tv_norm,
    wasserstein_norm,
)
from diagsum.moments import MomentReport, compute_moments

__all__ = [
    "BernoulliMatrix",
    "CapacityError",
    "DomainError",
    "IndexSelection",
    "MomentReport",
    "NumericalError",
    "PreconditionError",
    "ShapeError",
    "SignedPMF",
    "compute_moments",
    "concentration",
    "diff_convolve",
    "etas",
    "gen_constant",
    "gen_identity",
    "gen_matching",
    "gen_random",
    "kappa",
    "load_matrix",
    "local_norm",
    "pmf_exact",
    "pmf_leave_out",
    "poisson_pmf",
    "q2_measure",
    "real_rooted",
    "save_matrix",
    "select",
    "transpose",
    "tv_distance",
    "tv_norm",
    "wasserstein_norm",
]

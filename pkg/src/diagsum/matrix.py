"""Bernoulli probability matrices: validation, file I/O, generators and
index-set surgery used by the exact-distribution engine."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from diagsum.errors import DomainError, ShapeError


@dataclass(frozen=True)
class BernoulliMatrix:
    """Square matrix of success probabilities ``p[j, r]``.

    The random diagonal sum is ``S_n = sum_j X[j, pi(j)]`` with independent
    ``X[j, r] ~ Be(p[j, r])`` and a uniform random permutation ``pi``.
    """

    p: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ShapeError(f"matrix must be square, got shape {p.shape}")
        if p.shape[0] < 2:
            raise DomainError("n must be at least 2")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise DomainError("entries must lie in [0, 1]")
        if not np.any(p > 0.0):
            raise DomainError("all-zero matrix: lambda = E S_n must be > 0")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def lam(self) -> float:
        return float(self.p.sum() / self.n)

    def __eq__(self, other):
        if not isinstance(other, BernoulliMatrix):
            return NotImplemented
        return np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())

    def to_json(self) -> dict:
        return {"p": self.p.tolist()}


@dataclass(frozen=True)
class IndexSelection:
    """Rows/columns kept by a sub-model, plus rows whose summands are dropped.

    Rows in ``ones_rows`` still take part in the random matching but
    contribute nothing to the sum.
    """

    active_rows: frozenset
    active_cols: frozenset
    ones_rows: frozenset = frozenset()

    def __post_init__(self):
        for name in ("active_rows", "active_cols", "ones_rows"):
            object.__setattr__(self, name, frozenset(int(i) for i in getattr(self, name)))
        if len(self.active_rows) != len(self.active_cols):
            raise ShapeError(
                f"{len(self.active_rows)} active rows vs {len(self.active_cols)} active columns"
            )
        if not self.ones_rows <= self.active_rows:
            raise ShapeError("ones_rows must be a subset of active_rows")

    @classmethod
    def full(cls, n: int, ones_rows: Iterable[int] = ()) -> "IndexSelection":
        return cls(frozenset(range(n)), frozenset(range(n)), frozenset(ones_rows))

    @classmethod
    def minor(
        cls, n: int, rows: Iterable[int], cols: Iterable[int], ones_rows: Iterable[int] = ()
    ) -> "IndexSelection":
        """Delete ``rows`` and ``cols``; mark ``ones_rows`` among the rest."""
        return cls(
            frozenset(range(n)) - frozenset(rows),
            frozenset(range(n)) - frozenset(cols),
            frozenset(ones_rows),
        )

    @property
    def size(self) -> int:
        return len(self.active_rows)

    @property
    def summands(self) -> int:
        return len(self.active_rows) - len(self.ones_rows)


@dataclass(frozen=True)
class SelectedMatrix:
    """Effective sub-model: probabilities on the kept block and a mask of
    rows that behave like the constant generating factor 1."""

    p: np.ndarray
    ones: np.ndarray

    @property
    def size(self) -> int:
        return self.p.shape[0]


def select(M: BernoulliMatrix, sel: IndexSelection) -> SelectedMatrix:
    rows = sorted(sel.active_rows)
    cols = sorted(sel.active_cols)
    if rows and (rows[0] < 0 or rows[-1] >= M.n):
        raise ShapeError("row index out of range")
    if cols and (cols[0] < 0 or cols[-1] >= M.n):
        raise ShapeError("column index out of range")
    sub = M.p[np.ix_(rows, cols)] if rows else np.zeros((0, 0))
    ones = np.array([r in sel.ones_rows for r in rows], dtype=bool)
    return SelectedMatrix(sub, ones)


def transpose(M: BernoulliMatrix) -> BernoulliMatrix:
    return BernoulliMatrix(M.p.T.copy(), dict(M.meta))


# ----------------------------------------------------------------------
# file formats
# ----------------------------------------------------------------------


def _parse_csv(text: str) -> list[list[float]]:
    rows = []
    for rec in csv.reader(io.StringIO(text)):
        if not rec or all(not c.strip() for c in rec):
            continue
        try:
            rows.append([float(c) for c in rec])
        except ValueError as exc:
            raise DomainError(f"non-numeric entry: {exc}") from None
    return rows


def _as_square(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or any(
        not isinstance(r, list) or len(r) != len(rows) for r in rows
    ):
        raise ShapeError("matrix must be a non-empty square array")
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise DomainError("non-numeric entry") from None


def load_matrix(path, format: str | None = None) -> BernoulliMatrix:
    """Read a matrix from CSV (one row per line, no header) or JSON
    (``{"p": [[...], ...]}``). The format defaults to the file suffix."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    text = path.read_text()
    if fmt == "csv":
        rows = _parse_csv(text)
    elif fmt == "json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"invalid JSON: {exc}") from None
        if not isinstance(obj, dict) or "p" not in obj:
            raise ShapeError('JSON matrix must be an object with key "p"')
        rows = obj["p"]
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    return BernoulliMatrix(_as_square(rows), {"source": str(path)})


def save_matrix(M: BernoulliMatrix, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        # repr() gives the shortest string that round-trips the double
        lines = [",".join(repr(float(x)) for x in row) for row in M.p]
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path.write_text(json.dumps(M.to_json()) + "\n")
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


# ----------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------


def gen_constant(n: int, p: float) -> BernoulliMatrix:
    """All entries equal to ``p``; then S_n ~ Bin(n, p)."""
    if not 0.0 < p <= 1.0:
        raise DomainError("p must lie in (0, 1]")
    return BernoulliMatrix(np.full((n, n), float(p)), {"generator": f"constant:{n}:{p!r}"})


def gen_identity(n: int) -> BernoulliMatrix:
    return BernoulliMatrix(np.eye(n), {"generator": f"identity:{n}"})


def gen_matching(a: Sequence[int], b: Sequence[int]) -> BernoulliMatrix:
    """Block 0/1 matrix of the general matching problem.

    Rows ``(A_{l-1}, A_l]`` and columns ``(B_{l-1}, B_l]`` form block ``l``,
    where ``A_l`` and ``B_l`` are the partial sums of ``a`` and ``b``.
    """
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    if len(a) != len(b):
        raise ShapeError("a and b must have the same number of blocks")
    if any(x < 0 for x in a + b):
        raise DomainError("block sizes must be non-negative")
    n = sum(a)
    if sum(b) != n:
        raise ShapeError(f"sum(a)={n} differs from sum(b)={sum(b)}")
    p = np.zeros((n, n))
    A = np.concatenate([[0], np.cumsum(a)]).astype(int)
    B = np.concatenate([[0], np.cumsum(b)]).astype(int)
    for l in range(len(a)):
        p[A[l] : A[l + 1], B[l] : B[l + 1]] = 1.0
    return BernoulliMatrix(p, {"generator": f"matching:a={a},b={b}"})


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; portable across platforms for a fixed
    numpy bit-generator version."""
    return np.random.Generator(np.random.Philox(int(seed)))


def gen_random(n: int, seed: int, column_monotone: bool = False) -> BernoulliMatrix:
    """i.i.d. uniform entries; optionally each column sorted so that
    ``p[j, r] >= p[j + 1, r]``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    rng = make_rng(seed)
    while True:
        p = rng.random((n, n))
        if np.any(p > 0.0):
            break
    if column_monotone:
        p = -np.sort(-p, axis=0)
    return BernoulliMatrix(
        p, {"generator": f"random:{n}:{seed}" + (":monotone-cols" if column_monotone else ""),
            "seed": int(seed)}
    )

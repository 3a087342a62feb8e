import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from diagsum import (
    BernoulliMatrix,
    DomainError,
    IndexSelection,
    ShapeError,
    gen_constant,
    gen_identity,
    gen_matching,
    gen_random,
    load_matrix,
    save_matrix,
    select,
    transpose,
)


def square(min_n=2, max_n=6):
    return st.integers(min_n, max_n).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 1, allow_nan=False))
    ).filter(lambda a: a.any())


def test_rejects_bad_input():
    with pytest.raises(ShapeError):
        BernoulliMatrix(np.zeros((2, 3)) + 0.5)
    with pytest.raises(DomainError):
        BernoulliMatrix([[0.5]])
    with pytest.raises(DomainError):
        BernoulliMatrix([[0.5, 1.2], [0.1, 0.1]])
    with pytest.raises(DomainError):
        BernoulliMatrix(np.zeros((3, 3)))
    with pytest.raises(DomainError):
        BernoulliMatrix([[np.nan, 0.1], [0.1, 0.1]])


def test_immutable():
    M = gen_random(4, 0)
    with pytest.raises(ValueError):
        M.p[0, 0] = 0.3


@settings(max_examples=30, deadline=None)
@given(square())
def test_csv_roundtrip_is_bit_exact(tmp_path_factory, p):
    path = tmp_path_factory.mktemp("m") / "m.csv"
    M = BernoulliMatrix(p)
    save_matrix(M, path)
    assert np.array_equal(load_matrix(path).p, M.p)


def test_json_roundtrip(tmp_path):
    M = gen_random(5, 3)
    save_matrix(M, tmp_path / "m.json")
    assert load_matrix(tmp_path / "m.json") == M
    assert json.loads((tmp_path / "m.json").read_text()).keys() == {"p"}


def test_load_errors(tmp_path):
    (tmp_path / "a.csv").write_text("0.1,0.2\n0.3\n")
    with pytest.raises(ShapeError):
        load_matrix(tmp_path / "a.csv")
    (tmp_path / "b.csv").write_text("0.1,x\n0.3,0.4\n")
    with pytest.raises(DomainError):
        load_matrix(tmp_path / "b.csv")
    (tmp_path / "c.json").write_text('{"q": [[1]]}')
    with pytest.raises(ShapeError):
        load_matrix(tmp_path / "c.json")


def test_generators():
    assert np.all(gen_constant(3, 0.25).p == 0.25)
    assert np.array_equal(gen_identity(4).p, np.eye(4))
    M = gen_matching([1, 2], [2, 1])
    assert M.p.tolist() == [[1, 1, 0], [0, 0, 1], [0, 0, 1]]
    with pytest.raises(ShapeError):
        gen_matching([1, 2], [2, 2])
    with pytest.raises(DomainError):
        gen_constant(3, 0.0)
    assert gen_random(5, 9) == gen_random(5, 9)
    C = gen_random(6, 2, column_monotone=True).p
    assert np.all(np.diff(C, axis=0) <= 0)


def test_selection_and_transpose():
    M = BernoulliMatrix(np.arange(16).reshape(4, 4) / 16 + 0.01)
    sel = IndexSelection.minor(4, [1], [2], ones_rows=[3])
    sub = select(M, sel)
    assert sub.p.shape == (3, 3)
    assert sub.ones.tolist() == [False, False, True]
    assert sel.summands == 2
    with pytest.raises(ShapeError):
        IndexSelection({0, 1}, {0})
    with pytest.raises(ShapeError):
        IndexSelection({0, 1}, {0, 1}, {2})
    assert np.array_equal(transpose(M).p, M.p.T)

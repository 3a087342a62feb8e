import json
import math

import pytest

from diagsum.cli import main, parse_gen


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_bounds_constant(capsys):
    code, out = run(capsys, "bounds", "--gen", "constant:6:0.3")
    assert code == 0
    obj = json.loads(out.out)
    first = next(b for b in obj["bounds"] if b["name"] == "tv_po_first_order")
    assert abs(first["value"] - (1 - math.exp(-1.8)) * 0.3) < 1e-12
    assert first["holds"] is True


def test_bounds_matching(capsys):
    code, out = run(capsys, "bounds", "--gen", "matching:d=2,m=3")
    first = json.loads(out.out)["bounds"][0]
    d, n = 2, 6
    want = (1 - math.exp(-d)) * ((3 * d - 1) / n - (d - 1) * (2 * d - 1) / (n * (n - 1)))
    assert abs(first["value"] - want) < 1e-12


def test_byte_identical(capsys):
    a = run(capsys, "bounds", "--gen", "random:5:3", "--seed", "2")[1].out
    b = run(capsys, "bounds", "--gen", "random:5:3", "--seed", "2")[1].out
    assert a == b
    a = run(capsys, "mc", "--gen", "random:5:3", "--samples", "10000", "--seed", "2")[1].out
    b = run(capsys, "mc", "--gen", "random:5:3", "--samples", "10000", "--seed", "2")[1].out
    assert a == b


def test_table_output(capsys):
    code, out = run(capsys, "moments", "--gen", "identity:4", "--out", "table")
    assert code == 0 and "gamma_p" in out.out and "0.5" in out.out
    code, out = run(capsys, "pmf", "--gen", "constant:3:0.5", "--out", "table")
    assert "0.375" in out.out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "pmf")[0] == 1
    assert run(capsys, "pmf", "--gen", "nope:1")[0] == 1
    assert run(capsys, "pmf", "--gen", "constant:4:0.3", "--input", "x.csv")[0] == 1
    assert run(capsys, "pmf", "--gen", "constant:4:1.5")[0] == 2
    assert run(capsys, "pmf", "--input", str(tmp_path / "missing.csv"))[0] == 2
    (tmp_path / "bad.csv").write_text("0.1,0.2\n0.3\n")
    assert run(capsys, "pmf", "--input", str(tmp_path / "bad.csv"))[0] == 2
    assert run(capsys, "pmf", "--gen", "constant:21:0.1")[0] == 3


def test_input_file(capsys, tmp_path):
    (tmp_path / "m.csv").write_text("0.1,0.9\n0.4,0.6\n")
    code, out = run(capsys, "moments", "--input", str(tmp_path / "m.csv"))
    assert code == 0 and abs(json.loads(out.out)["lam"] - 1.0) < 1e-15


def test_stein_command(capsys):
    code, out = run(capsys, "stein", "--t", "1", "--kind", "point", "--point", "0")
    obj = json.loads(out.out)
    assert code == 0 and abs(obj["g"][1] - (1 - math.exp(-1))) < 1e-15


@pytest.mark.parametrize(
    "spec,n",
    [
        ("constant:5:0.2", 5),
        ("identity:3", 3),
        ("random:4:1", 4),
        ("random:4:1:monotone-cols", 4),
        ("matching:a=1,2,b=2,1", 3),
        ("matching:d=3,m=2", 6),
    ],
)
def test_generator_grammar(spec, n):
    assert parse_gen(spec).n == n


def test_verify_quick(capsys):
    code, out = run(capsys, "verify", "--suite", "quick", "--seed", "7", "--out", "table")
    assert code == 0
    assert out.out.count("[PASS]") >= 9

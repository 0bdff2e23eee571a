from __future__ import annotations

import json
import subprocess
import sys

import pytest

from weylcalc.cli import main
from weylcalc.gaussian import GaussianRational
from weylcalc.matsym import MatrixSymbol
from weylcalc.symbol import PolySymbol

X = PolySymbol.x(0, 1).to_json()
XI = PolySymbol.xi(0, 1).to_json()
H = PolySymbol.harmonic(1).to_json()
CREATION = json.dumps({"dim": 1, "n": 1, "entries": [[[{"x": [1], "xi": [0], "re": "1"},
                                                      {"x": [0], "xi": [1], "im": "-1"}]]]})


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_star(capsys):
    code, out = run(capsys, "star", X, XI)
    assert code == 0
    got = PolySymbol.from_dict(json.loads(out))
    assert got == PolySymbol.x(0, 1) * PolySymbol.xi(0, 1) + PolySymbol.constant(1, GaussianRational(0, "1/2"))


def test_power_both_methods(capsys):
    code, out = run(capsys, "power", H, "--n", "3", "--method", "both")
    assert code == 0 and json.loads(out)["dim"] == 1


def test_quantize_csv_and_json(capsys, tmp_path):
    target = tmp_path / "q.csv"
    code, _ = run(capsys, "quantize", H, "--hermite-n", "4", "--emit", "csv", "--out", str(target))
    assert code == 0 and target.read_text().startswith("1,4,6,grlex")
    code, out = run(capsys, "quantize", H, "--hermite-n", "4", "--interior")
    doc = json.loads(out)
    assert [doc["re"][k][k] for k in range(3)] == pytest.approx([1, 3, 5])


def test_spectrum(capsys):
    code, out = run(capsys, "spectrum", H, "--hermite-n", "12")
    doc = json.loads(out)
    assert doc["eigenvalues"][:3] == pytest.approx([1, 3, 5])
    # the reference at N - 4 has 7 interior levels, all of which agree
    assert doc["trusted_count"] == 7


def test_series_op(capsys):
    code, out = run(capsys, "series-op", H, "--hermite-n", "12", "--kind", "factorial_power", "--s", "2")
    assert code == 0
    # P(1) = I_0(2) for M_p = p!^2
    assert json.loads(out)["eigenvalues"][0] == pytest.approx(2.2795853023360673, rel=1e-10)


def test_weyl_const(capsys):
    code, out = run(capsys, "weyl-const", "--dim", "2")
    assert json.loads(out)["c"] == pytest.approx(0.125, rel=1e-10)


def test_parametrix_scalar_and_matrix(capsys):
    a = (PolySymbol.constant(1) + PolySymbol.harmonic(1)).to_json()
    code, out = run(capsys, "parametrix", a, "--terms", "3")
    assert code == 0 and json.loads(out)["denominator_powers"] == [1, 0, 4, 0]
    m = json.dumps(MatrixSymbol.scalar(PolySymbol.constant(1) + PolySymbol.harmonic(1)).to_dict())
    code, out = run(capsys, "parametrix", m, "--terms", "2", "--variant", "right")
    assert code == 0 and json.loads(out)["max_residual"] < 1e-10


def test_index_both(capsys, tmp_path):
    path = tmp_path / "a.json"
    path.write_text(CREATION)
    code, out = run(capsys, "index", "--symbol", str(path), "--radius", "1", "--method", "both",
                    "--hermite-n", "12")
    doc = json.loads(out)
    assert code == 0
    assert doc["oracle"] == -1 and doc["rounded"] == -1 and doc["agree"] is True


def test_check_weights(capsys):
    code, out = run(capsys, "check-weights", "--kind", "factorial_power", "--s", "2")
    doc = json.loads(out)
    assert code == 0 and doc["M1"] and doc["M2"] and doc["M3'"] and doc["M4"] and doc["stk"]


def test_counting_sweep(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d": 1, "weights": {"kind": "self_power"}, "log10_lambda": [3, 6],
                               "j_grid": [1, 2]}))
    code, out = run(capsys, "counting", "--config", str(cfg))
    assert code == 0 and out.startswith("# weylcalc counting sweep v1")
    code, out = run(capsys, "counting", "--config", str(cfg), "--sweep", "eigen")
    assert out.startswith("# weylcalc eigenvalue sweep v1")


@pytest.mark.parametrize("argv", [
    ["star", X],                                   # missing operand
    ["star", X, XI, "--bogus"],                    # unknown flag
    ["index", "--symbol", json.dumps({"dim": 1, "n": 1, "entries": [[[{"x": [0], "xi": [0], "re": "0"}]]]})],
    ["star", X, PolySymbol.x(0, 2).to_json()],     # dimension mismatch
    ["quantize", "/nonexistent.json"],
])
def test_failures_are_structured(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 1
    doc = json.loads(out)
    assert set(doc) == {"error", "message"}


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "weylcalc.cli", "weyl-const", "--dim", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["c"] == pytest.approx(0.5, rel=1e-10)

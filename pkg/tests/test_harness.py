import json
import random
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from bethedual import fermion as fb
from bethedual import harness
from bethedual.cli import main
from bethedual.harness import (
    Degenerate,
    IncompleteTable,
    NotCommuting,
    SuiteConfig,
    common_eigenbasis,
    eigen_to_diffop,
)


def test_eigenbasis_of_diagonal_pair():
    out = common_eigenbasis([np.diag([1.0, 2.0]), np.diag([3.0, 5.0])])
    assert [pytest.approx(list(map(float, vals))) for _, vals in out] == [[1, 3], [2, 5]]
    for v, _ in out:
        assert np.isclose(np.linalg.norm(v), 1)


def test_eigenbasis_of_swap_and_scalar():
    out = common_eigenbasis([np.array([[0.0, 1.0], [1.0, 0.0]]), 2 * np.eye(2)])
    assert [round(float(vals[0])) for _, vals in out] == [-1, 1]
    assert all(np.isclose(float(vals[1]), 2) for _, vals in out)


def test_eigenbasis_rejects_degenerate_and_noncommuting():
    with pytest.raises(Degenerate):
        common_eigenbasis([np.eye(2), 2 * np.eye(2)])
    with pytest.raises(NotCommuting):
        common_eigenbasis([np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [1.0, 0.0]])])


def test_eigenbasis_exact_for_one_dimension():
    (v, vals), = common_eigenbasis([np.array([[F(2, 3)]], dtype=object)])
    assert vals == [F(2, 3)]


def test_small_gap_warns():
    with warnings.catch_warnings(record=True) as got:
        warnings.simplefilter("always")
        common_eigenbasis([np.diag([1.0, 1.0 + 1e-6])], tol=1e-8, rng=random.Random(0))
    assert any(issubclass(w.category, harness.GapWarning) for w in got)


def test_eigen_to_diffop():
    vals = {("const", 1): F(-2), (1, 1, 1): F(-1)}
    d = eigen_to_diffop(vals, 1, [F(3)])
    assert d.order == 1
    b = d.coefficient(0)
    assert b.poly[0] == -2 and b.poles[F(3)][0] == -1
    with pytest.raises(IncompleteTable):
        eigen_to_diffop({("const", 1): 1}, 1, [F(3)])


def test_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(alphas=[1, 1])
    with pytest.raises(ValueError):
        SuiteConfig(mode="float", tol=0)
    assert sum(b.dim for b in SuiteConfig(k=2, n=2).blocks()) == 16


def test_reports_are_deterministic():
    cfg = SuiteConfig(seed=4, instances=3)
    a = harness.verify_theorem1(cfg).dumps()
    b = harness.verify_theorem1(cfg).dumps()
    assert a == b and "timing" not in json.loads(a)
    assert "timing" in harness.verify_theorem1(cfg).to_json(timing=True)


def test_main2_detects_a_wrong_dual_table(monkeypatch):
    real = fb.bethe_generators

    def skewed(n, alphas, zs, block, side="n"):
        t = real(n, alphas, zs, block, side)
        if side == "k":
            t.const[1] = t.const[1] + fb.identity(block.dim) * F(1, 10**5)
        return t

    monkeypatch.setattr(fb, "bethe_generators", skewed)
    cfg = SuiteConfig(seed=12, block=((1, 1), (1, 1)), mode="float", draws=1)
    rep = harness.verify_theorem_main2(cfg)
    assert not rep.ok and all("differs" in f["reason"] for f in rep.failures)


def test_main2_resamples_degenerate_draws(monkeypatch):
    real = harness.common_eigenbasis
    calls = []

    def flaky(ops, tol, rng):
        calls.append(1)
        if len(calls) == 1:
            raise Degenerate("forced")
        return real(ops, tol, rng)

    monkeypatch.setattr(harness, "common_eigenbasis", flaky)
    rep = harness.verify_theorem_main2(SuiteConfig(seed=1, block=((1, 1), (1, 1)), mode="float"))
    assert rep.ok and any("resampled" in n for n in rep.notes)


# -- command line --------------------------------------------------------------


def test_cli_verify(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "duality", "--k", "1", "--n", "2", "--alphas", "1,3", "--zs", "2",
                 "--json-out", str(out)]) == 0
    assert "duality: PASS" in capsys.readouterr().out
    rep = json.loads(out.read_text())
    assert rep["ok"] and rep["config"]["k"] == 1


def test_cli_transform(tmp_path, capsys):
    opf, dataf = tmp_path / "op.json", tmp_path / "data.json"
    opf.write_text(json.dumps({"order": 1, "coeffs": [
        {"num": ["1"], "den": ["1"]},
        {"num": ["5", "-2"], "den": ["-3", "1"]},
    ]}))
    dataf.write_text(json.dumps({"mu": [[1]], "lambda": [[1]], "alphas": ["2"], "zs": ["3"]}))
    assert main(["transform", "--in", str(opf), "--data", str(dataf)]) == 0
    got = json.loads(capsys.readouterr().out)["D_tilde_aug"]
    assert got["order"] == 1
    # d/dx - 3 - 1/(x + 2) = d/dx + (-3x - 7)/(x + 2)
    assert got["coeffs"][1] == {"num": ["-7/1", "-3/1"], "den": ["2/1", "1/1"]}


def test_cli_spectrum(capsys):
    assert main(["spectrum", "--k", "2", "--n", "2", "--l", "2,0", "--m", "1,1",
                 "--alphas", "1,3", "--zs", "2,5"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got["block"]["l"] == [2, 0] and len(got["eigenvectors"]) == 1

from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from fracneumann import extension
from fracneumann.checks import CheckContext, run_checks
from fracneumann.cli import main
from fracneumann.config import ConfigError, build_config, parse_eps_text


def _csv_rows(path):
    lines = path.read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = list(csv.reader(ln for ln in lines if not ln.startswith("#")))
    return header, body


def test_build_config_precedence(monkeypatch):
    monkeypatch.delenv("FRACNEUMANN_THREADS", raising=False)
    cfg = build_config({"K": 32, "s": 0.25, "preset": "small-eps"}, {"K": 16})
    assert cfg.K == 16 and cfg.s == 0.25 and cfg.eps_count == 8
    assert cfg.eps_values()[0] == pytest.approx(1e-5)
    cfg = build_config({"eps_list": [0.3, 0.1]}, None, "large-eps")
    assert cfg.eps_values() == [0.1, 0.3] and cfg.n_random == 3
    monkeypatch.setenv("FRACNEUMANN_THREADS", "3")
    assert build_config({}, {}).threads == 3
    assert build_config({}, {"threads": 2}).threads == 2


@pytest.mark.parametrize("bad", [{"colour": 1}, {"s": 1.5}, {"p": 1.0}, {"K": "many"}, {"preset": "tiny"},
                                 {"domain": "disk:1"}, {"K": 8, "grid": 10}, {"eta": [-1.0]}])
def test_build_config_rejects(bad):
    with pytest.raises(ConfigError):
        build_config(bad)


def test_parse_eps_text():
    assert parse_eps_text("1e-3") == {"eps": 1e-3}
    assert parse_eps_text("0.1,0.2")["eps_list"] == (0.1, 0.2)
    assert parse_eps_text("1e-5:1e-3:4")["eps_count"] == 4
    with pytest.raises(ConfigError):
        parse_eps_text("abc")
    with pytest.raises(ConfigError):
        build_config({}, parse_eps_text("1e-3:1e-2:0")).eps_values()


def test_solve_constant_regime(tmp_path, capsys):
    out = tmp_path / "solve"
    assert main(["solve", "--eps", "100", "--K", "32", "--out", str(out), "--quiet"]) == 0
    report = json.loads((out / "solution.json").read_text())
    assert report["header"]["version"] and report["header"]["config"]["eps"] == 100.0
    assert report["report"]["classification"] == "constant"
    header, body = _csv_rows(out / "solution.csv")
    assert header[0].startswith("# fracneumann") and any(h.startswith("# eps = 100.0") for h in header)
    assert body[0] == ["x", "u"]
    assert np.allclose([float(r[1]) for r in body[1:]], 1.0, atol=1e-10)


def test_solve_spike_regime(tmp_path):
    out = tmp_path / "solve"
    assert main(["solve", "--eps", "1e-4", "--K", "128", "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "solution.json").read_text())["report"]
    assert rep["classification"] == "nonconstant" and rep["positive"] and rep["converged"]


def test_solve_on_rectangle_writes_two_coordinates(tmp_path):
    out = tmp_path / "rect"
    assert main(["solve", "--eps", "10", "--domain", "rectangle:1,0.5", "--K", "6", "--out", str(out), "--quiet"]) == 0
    _, body = _csv_rows(out / "solution.csv")
    assert body[0] == ["x", "y", "u"] and len(body) == 1 + 12 * 12


def test_malformed_config_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "never"
    for i, text in enumerate(["s = [oops", "colour = 3", "s = 2.0", "[table]\nK = 3"]):
        cfg = tmp_path / f"bad{i}.toml"
        cfg.write_text(text)
        code = main(["solve", "--config", str(cfg), "--eps", "1", "--out", str(out)])
        assert code != 0
        err = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert err["error"] == "config"
        assert not out.exists()


def test_missing_config_prints_usage(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "nope.toml")]) != 0
    assert "usage:" in capsys.readouterr().err


def test_solve_needs_single_eps(tmp_path, capsys):
    assert main(["solve", "--out", str(tmp_path / "x")]) == 2
    assert main(["sweep", "--eps", "1e-3:1e-2:0", "--out", str(tmp_path / "y")]) == 2
    assert not (tmp_path / "x").exists() and not (tmp_path / "y").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('domain = "interval:1"\ns = 0.5\np = 2.0\neps = 50.0\nK = 16\nout = "ignored"\n')
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--K", "24", "--out", str(out), "--quiet"]) == 0
    echo = json.loads((out / "solution.json").read_text())["header"]["config"]
    assert echo["K"] == 24 and echo["eps"] == 50.0 and echo["out"] == str(out)


def test_sweep_large_preset_reports_all_constant(tmp_path):
    out = tmp_path / "large"
    assert main(["sweep", "--preset", "large-eps", "--K", "32", "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert summary["all_constant"] and summary["checks"]["all_constant"]
    assert summary["schema_version"] == 1 and summary["n_rows"] == 3


def test_sweep_small_range_slopes_and_determinism(tmp_path):
    out = tmp_path / "small"
    args = ["sweep", "--eps", "1e-4:1e-2:5", "--K", "128", "--out", str(out), "--eta", "0.5,1.0", "--quiet"]
    assert main(args) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    summary = json.loads(first["sweep_summary.json"])
    assert summary["slopes"]["energy"] == pytest.approx(0.5, abs=0.1)
    assert summary["checks"]["slope_energy"] and summary["checks"]["all_nonconstant_positive"]
    assert set(summary["cube_counts_by_eta"]) == {"0.5", "1.0"}
    header, body = _csv_rows(out / "sweep_rows.csv")
    assert body[0][:4] == ["eps", "s", "p", "classification"] and len(body) == 6
    assert main(args) == 0
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_extend_constant_and_mode(tmp_path):
    out = tmp_path / "ext"
    assert main(["extend", "--eps", "0.1", "--K", "8", "--trace", "const:2", "--y-nodes", "50",
                 "--out", str(out), "--quiet"]) == 0
    _, body = _csv_rows(out / "extension.csv")
    assert body[0] == ["x", "height", "U"]
    assert np.allclose([float(r[2]) for r in body[1:]], 2.0, atol=1e-13)
    assert main(["extend", "--eps", "0.1", "--s", "0.3", "--K", "8", "--trace", "mode:1",
                 "--out", str(out), "--quiet"]) == 0
    info = json.loads((out / "extension.json").read_text())
    assert info["identity_passed"] and info["identity_rel_error"] < 1e-4
    _, body = _csv_rows(out / "extension.csv")
    x0 = body[1][0]
    heights = np.array([float(r[1]) for r in body[1:] if r[0] == x0])
    prof = np.array([float(r[2]) for r in body[1:] if r[0] == x0])
    rate = np.sqrt(0.1) * np.pi
    assert np.allclose(prof, prof[0] * extension.rho_eval(rate * heights, 0.3), atol=1e-13)


def test_extend_bad_trace(tmp_path, capsys):
    assert main(["extend", "--eps", "0.1", "--K", "8", "--trace", "wave:3", "--out", str(tmp_path / "e")]) == 2


def test_check_subset_passes(capsys):
    assert main(["check", "--only", "1,3,5,13", "--quiet"]) == 0
    assert capsys.readouterr().out.count("[PASS]") == 4


def test_tampered_profile_is_detected(monkeypatch, capsys):
    original = extension.rho_eval
    monkeypatch.setattr(extension, "rho_eval", lambda t, s: 1.01 * original(t, s))
    results = run_checks([2, 4], CheckContext())
    assert not any(r.passed for r in results)
    assert main(["check", "--only", "2", "--quiet"]) == 1

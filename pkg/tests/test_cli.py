"""End-to-end checks of the command-line driver and its artifact formats."""
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from rcbound import cli
from rcbound.quadrature import AccuracyError

WB_G2 = 1.0290855136357462
G0_G2 = 0.4472135954999579


def write_config(tmp_path, name="run.json", **kwargs):
    cfg = {
        "spectral": {"kind": "rubin", "gamma": 2.0},
        "system": {"omega": 0.5},
        "task": "exact",
        "out": str(tmp_path / "run"),
    }
    cfg.update(kwargs)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path, cfg


def read_artifact_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# config sha256:")
    digest = lines[0].split(":", 1)[1]
    header = lines[1].split(",")
    rows = [ln.split(",") for ln in lines[2:]]
    return digest, header, rows


def test_map_task_single_cell(tmp_path, capsys):
    path, _ = write_config(tmp_path, task="map",
                           spectral={"kind": "rubin", "gamma": 1.0})
    assert cli.main(["--config", str(path)]) == 0
    out = tmp_path / "run_map.csv"
    assert str(out) in capsys.readouterr().out
    digest, header, rows = read_artifact_csv(out)
    assert len(digest) == 64
    assert header == ["i", "lo", "hi", "omega_i", "lambda_i"]
    assert len(rows) == 1
    assert rows[0][:3] == ["1", "0", "1"]
    assert float(rows[0][3]) == pytest.approx(0.5, rel=1e-10)
    assert float(rows[0][4]) == pytest.approx(0.25, rel=1e-10)


def test_map_residual_samples(tmp_path):
    path, _ = write_config(tmp_path, task="map",
                           params={"n": 2, "residual_samples": 3})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    _, header, rows = read_artifact_csv(tmp_path / "run_residual.csv")
    assert header == ["i", "omega", "gamma_i", "bound"]
    assert len(rows) == 6
    split = 2.0**-0.5
    assert float(rows[0][3]) == pytest.approx(2.0 * split / math.pi, rel=1e-12)
    assert all(float(r[2]) <= float(r[3]) * (1.0 + 1e-9) for r in rows)


def test_exact_task_payload(tmp_path):
    path, _ = write_config(tmp_path, params={"with_commutator": True})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    payload = json.loads((tmp_path / "run_exact.json").read_text())
    assert payload["bs_exists"] is True
    assert payload["omega_b"] == pytest.approx(WB_G2, rel=1e-10)
    assert payload["residue"] == pytest.approx(G0_G2, rel=1e-8)
    assert payload["critical_gamma"] == pytest.approx(1.5, rel=1e-12)
    assert payload["multiple_roots"] is False
    assert payload["commutator"] == pytest.approx(2.0, abs=1e-5)
    assert payload["occupation"] == pytest.approx(
        (payload["x2"] + payload["p2"]) / 4.0 - 0.5, rel=1e-12)
    assert len(payload["config_sha256"]) == 64


def test_critical_task(tmp_path):
    path, _ = write_config(tmp_path, task="critical")
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    payload = json.loads((tmp_path / "run_critical.json").read_text())
    assert payload["critical_gamma"] == pytest.approx(1.5, rel=1e-12)
    assert payload["omega"] == 0.5
    assert payload["gamma"] == 2.0


def test_eigs_task(tmp_path):
    path, _ = write_config(tmp_path, task="eigs",
                           spectral={"kind": "rubin", "gamma": 3.0})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    _, header, rows = read_artifact_csv(tmp_path / "run_eigs.csv")
    assert header == ["q", "eps_sq", "system_weight", "u", "v"]
    assert len(rows) == 2
    payload = json.loads((tmp_path / "run_eigs.json").read_text())
    assert payload["trace"] == pytest.approx(1.25, rel=1e-12)
    assert payload["continuum_loose_lower"] == pytest.approx(1.0, rel=1e-12)
    assert payload["continuum_tight_lower"] == pytest.approx(1.25, rel=1e-12)
    assert payload["continuum_upper"] == pytest.approx(1.4330127018922192,
                                                       rel=1e-9)
    assert payload["loose_lower"] <= payload["tight_lower"] <= payload["upper"]
    eps = sorted(float(r[1]) for r in rows)
    assert eps[-1] <= payload["upper"] + 1e-12


def test_sweep_task_and_determinism(tmp_path, monkeypatch):
    path, _ = write_config(
        tmp_path, task="sweep",
        params={"n": 4, "grid": {"start": 1.0, "stop": 2.0, "points": 5}})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    out = tmp_path / "run_sweep.csv"
    first = out.read_bytes()
    _, header, rows = read_artifact_csv(out)
    assert header[:2] == ["gamma", "eps_sq_1"]
    assert header[-6:] == ["loose_lower", "tight_lower", "upper",
                           "omega_b_sq_exact", "bs_exists", "gap_counts"]
    assert len(rows) == 5
    assert [r[0] for r in rows] == ["1", "1.25", "1.5", "1.75", "2"]
    assert {r[-2] for r in rows} <= {"0", "1"}
    assert all(r[-1].isdigit() for r in rows)
    # reruns are byte-identical, also under threaded evaluation
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    assert out.read_bytes() == first
    monkeypatch.setenv("RC_THREADS", "3")
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    assert out.read_bytes() == first


def test_lifetime_task(tmp_path):
    path, _ = write_config(
        tmp_path, task="lifetime",
        spectral={"kind": "rubin", "gamma": 4.0},
        params={"u": 1e-3, "n_max": 3, "t_final": 5.0, "record_every": 10})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    _, header, rows = read_artifact_csv(tmp_path / "run_lifetime.csv")
    assert header == ["t", "bs_population", "band_population", "trace_defect"]
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-12)
    assert all(float(r[3]) < 1e-8 for r in rows)
    payload = json.loads((tmp_path / "run_lifetime.json").read_text())
    assert set(payload) == {"config_sha256", "gamma", "U", "T", "tau_b",
                            "fit_residual"}
    assert payload["gamma"] == 4.0
    assert payload["U"] == 1e-3
    assert payload["T"] == 0.0
    assert payload["tau_b"] > 0.0


def test_tabulated_spectral_roundtrip(tmp_path):
    table = tmp_path / "band.csv"
    w = np.linspace(0.0, 1.0, 201)
    vals = 2.0 * w * np.sqrt(np.clip(1.0 - w * w, 0.0, None))
    table.write_text("omega,gamma\n" + "\n".join(
        f"{x:.17g},{y:.17g}" for x, y in zip(w, vals)) + "\n")
    path, _ = write_config(tmp_path, task="critical",
                           spectral={"kind": "tabulated", "path": str(table)})
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    payload = json.loads((tmp_path / "run_critical.json").read_text())
    # the table holds twice the unit band shape, so the critical amplitude
    # multiplier is 1.5/2; the linear interpolant clips the sqrt band edge,
    # which costs a few percent
    assert payload["critical_gamma"] == pytest.approx(0.75, rel=5e-2)


def test_digest_matches_canonical_json(tmp_path):
    path, raw = write_config(tmp_path)
    cfg = cli.load_config(str(path))
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    assert cfg.digest == hashlib.sha256(canonical.encode()).hexdigest()
    # whitespace does not matter, parameter values do
    path2 = tmp_path / "spaced.json"
    path2.write_text(json.dumps(raw, indent=4))
    assert cli.load_config(str(path2)).digest == cfg.digest
    path3, _ = write_config(tmp_path, name="other.json",
                            system={"omega": 0.6})
    assert cli.load_config(str(path3)).digest != cfg.digest


def test_task_and_out_overrides(tmp_path):
    path, _ = write_config(tmp_path, task="exact")
    dest = tmp_path / "alt" / "result"
    assert cli.main(["--config", str(path), "--task", "critical",
                     "--out", str(dest), "--quiet"]) == 0
    assert (tmp_path / "alt" / "result_critical.json").exists()
    assert not (tmp_path / "run_exact.json").exists()


def test_config_errors_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert cli.main(["--config", str(missing)]) == 2
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert cli.main(["--config", str(bad_json)]) == 2

    cases = [
        {"spectral": {"kind": "rubin", "gamma": 1.0}, "system": {"omega": 0.5},
         "task": "exact", "extra": 1},
        {"spectral": {"kind": "lorentzian", "gamma": 1.0},
         "system": {"omega": 0.5}, "task": "exact"},
        {"spectral": {"kind": "rubin", "gamma": 1.0}, "system": {},
         "task": "exact"},
        {"spectral": {"kind": "rubin", "gamma": 1.0},
         "system": {"omega": 0.5}, "task": "solve"},
        {"spectral": {"kind": "rubin", "gamma": 1.0},
         "system": {"omega": 0.5}},
    ]
    for i, raw in enumerate(cases):
        p = tmp_path / f"case{i}.json"
        p.write_text(json.dumps(raw))
        assert cli.main(["--config", str(p)]) == 2, raw
        assert "config error" in capsys.readouterr().err


def test_runtime_param_errors_exit_2(tmp_path, capsys):
    # secular generator refuses an in-band upper mode; surfaced as config error
    path, _ = write_config(
        tmp_path, task="lifetime",
        spectral={"kind": "rubin", "gamma": 1.0},
        params={"t_final": 1.0, "n_max": 2})
    assert cli.main(["--config", str(path)]) == 2
    assert "config error" in capsys.readouterr().err
    path2, _ = write_config(tmp_path, name="grid.json", task="sweep",
                            params={"grid": {"start": 1.0, "stop": 2.0,
                                             "points": 1}})
    assert cli.main(["--config", str(path2)]) == 2


def test_numerical_errors_exit_3(tmp_path, monkeypatch, capsys):
    path, _ = write_config(tmp_path, task="critical")

    def blow_up(cfg):
        raise AccuracyError("did not converge", estimate=1.0)

    monkeypatch.setitem(cli._RUNNERS, "critical", blow_up)
    assert cli.main(["--config", str(path)]) == 3
    assert "numerical error" in capsys.readouterr().err

    def diverge(cfg):
        raise RuntimeError("trace drift")

    monkeypatch.setitem(cli._RUNNERS, "critical", diverge)
    assert cli.main(["--config", str(path)]) == 3


def test_quiet_flag(tmp_path, capsys):
    path, _ = write_config(tmp_path, task="critical")
    assert cli.main(["--config", str(path), "--quiet"]) == 0
    assert capsys.readouterr().out == ""

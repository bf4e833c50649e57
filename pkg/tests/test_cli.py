import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from kposim import cli

from conftest import REF_G3, REF_G4


def run(args):
    return cli.main([str(a) for a in args])


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def digest_dir(outdir: Path) -> dict:
    out = {}
    for path in sorted(outdir.glob("*.csv")):
        out[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


SMALL_SPECTRUM = {
    "model": {"g3": REF_G3, "g4": REF_G4},
    "gamma_grid": [2.0],
    "dim": 60,
    "steps": 512,
}


def test_params_command(tmp_path, capsys):
    cfg = write_config(tmp_path, {"g3": REF_G3, "g4": REF_G4, "Gamma": 20.0})
    assert run(["params", "--config", cfg, "--out", tmp_path / "out"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["derived"]["Gamma"] == pytest.approx(20.0)
    assert payload["derived"]["K"] == pytest.approx(8.32725e-4, rel=1e-5)


def test_params_rejects_unknown_key(tmp_path):
    cfg = write_config(tmp_path, {"g3": 0.01, "g4": 1e-4, "Gamma": 5.0, "oops": 1})
    assert run(["params", "--config", cfg]) == 2


def test_spectrum_smoke_and_determinism(tmp_path):
    cfg = write_config(tmp_path, SMALL_SPECTRUM)
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    assert run(["spectrum", "--config", cfg, "--out", out1, "--threads", 1]) == 0
    assert run(["spectrum", "--config", cfg, "--out", out2, "--threads", 1]) == 0
    files = sorted(p.name for p in out1.glob("*.csv"))
    assert "kissing.csv" in files
    assert any(name.startswith("spectrum_gamma") for name in files)
    assert digest_dir(out1) == digest_dir(out2)
    spectrum_file = next(out1.glob("spectrum_gamma*.csv"))
    rows = spectrum_file.read_text().splitlines()
    header = rows[0].split(",")
    assert header == ["index", "quasienergy", "raw_phase", "scaled", "occupation",
                      "parity", "overlap_origin"]
    assert len(rows) == 61


def test_spectrum_empty_grid_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, {**SMALL_SPECTRUM, "gamma_grid": []})
    assert run(["spectrum", "--config", cfg, "--out", tmp_path / "o"]) == 2


def test_spectrum_unknown_config_key(tmp_path):
    cfg = write_config(tmp_path, {**SMALL_SPECTRUM, "bogus": True})
    out = tmp_path / "o"
    assert run(["spectrum", "--config", cfg, "--out", out]) == 2
    record = json.loads((out / "error.json").read_text())
    assert "bogus" in record["message"]


def test_spectrum_husimi_export(tmp_path):
    cfg = write_config(
        tmp_path,
        {**SMALL_SPECTRUM, "husimi_states": ["fmin"], "husimi_grid_points": 61},
    )
    out = tmp_path / "o"
    assert run(["spectrum", "--config", cfg, "--out", out]) == 0
    field_file = next(out.glob("husimi_fmin_gamma*.csv"))
    from kposim import phasespace

    field = phasespace.load_field(field_file)
    assert field.values.shape == (61, 61)
    assert field.values.min() >= 0


def test_ipr_scan(tmp_path):
    cfg = write_config(
        tmp_path,
        {"model": {"g3": REF_G3, "g4": REF_G4}, "gamma_grid": [2.0], "dim": 60,
         "steps": 512},
    )
    out = tmp_path / "o"
    assert run(["ipr-scan", "--config", cfg, "--out", out]) == 0
    rows = (out / "ipr_scan.csv").read_text().splitlines()
    header = rows[0].split(",")
    assert header[:4] == ["gamma", "kappa", "I_G", "esqpt_overlap"]
    values = rows[1].split(",")
    assert float(values[2]) > 0.3  # regular-regime point is strongly localized
    assert float(values[6]) == pytest.approx(0.03347 / float(values[1]), rel=1e-10)


def test_ipr_scan_kappa_grid(tmp_path):
    cfg = write_config(
        tmp_path, {"kappa_grid": [0.0009], "gamma_grid": [2.0], "dim": 50, "steps": 512}
    )
    out = tmp_path / "o"
    assert run(["ipr-scan", "--config", cfg, "--out", out]) == 0
    rows = (out / "ipr_scan.csv").read_text().splitlines()
    assert float(rows[1].split(",")[1]) == pytest.approx(0.0009, rel=1e-9)


def test_classical_command(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "poincare": [{"kappa": 1 / 1500, "gamma": 25.0, "n_seeds": 6,
                          "n_periods": 50}],
            "areas": [{"kappa": 1 / 1500, "gamma": 25.0}],
            "scan": {"n_seeds": 60, "n_periods": 200, "grid_size": 128},
        },
    )
    out = tmp_path / "o"
    assert run(["classical", "--config", cfg, "--out", out]) == 0
    assert (out / "poincare.csv").exists()
    area_rows = (out / "area_map.csv").read_text().splitlines()
    assert float(area_rows[1].split(",")[2]) > 0
    poincare = (out / "poincare.csv").read_text().splitlines()
    assert poincare[0].split(",")[:5] == ["kappa", "gamma", "traj_id", "q0", "n"]


def test_trace_command(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "model": {"g3": REF_G3, "g4": REF_G4},
            "gamma_grid": {"start": 2.0, "stop": 3.0, "num": 3},
            "anchors": [0],
            "dim": 60,
            "steps": 512,
            "husimi_grid_points": 81,
        },
    )
    out = tmp_path / "o"
    assert run(["trace", "--config", cfg, "--out", out]) == 0
    rows = (out / "trace.csv").read_text().splitlines()
    assert len(rows) == 4
    assert all(row.endswith("ok") for row in rows[1:])
    assert (out / "spectrum_points.csv").exists()
    sidecar = json.loads((out / "resolved_config.json").read_text())
    assert sidecar["command"] == "trace"


def test_trace_rejects_bad_anchor(tmp_path):
    cfg = write_config(
        tmp_path,
        {"model": {"g3": REF_G3, "g4": REF_G4}, "gamma_grid": [2.0],
         "anchors": [999], "dim": 60},
    )
    assert run(["trace", "--config", cfg, "--out", tmp_path / "o"]) == 2


def test_missing_out_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, SMALL_SPECTRUM)
    assert run(["spectrum", "--config", cfg]) == 2


def test_malformed_json_is_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(["spectrum", "--config", path, "--out", tmp_path / "o"]) == 2


def test_config_roundtrip_reproduces_run(tmp_path):
    cfg = write_config(tmp_path, SMALL_SPECTRUM)
    out1 = tmp_path / "first"
    assert run(["spectrum", "--config", cfg, "--out", out1, "--threads", 1]) == 0
    out2 = tmp_path / "second"
    assert run(["spectrum", "--config", out1 / "resolved_config.json",
                "--out", out2, "--threads", 1]) == 0
    assert digest_dir(out1) == digest_dir(out2)


def test_config_roundtrip_rejects_wrong_command(tmp_path):
    cfg = write_config(tmp_path, SMALL_SPECTRUM)
    out1 = tmp_path / "first"
    assert run(["spectrum", "--config", cfg, "--out", out1, "--threads", 1]) == 0
    assert run(["trace", "--config", out1 / "resolved_config.json",
                "--out", tmp_path / "x"]) == 2

"""End-to-end render check against real simulator outputs.

Drives the `kposim` CLI (as an external command, consuming only its file
interfaces) on small configurations, then renders every figure recipe and
checks pixel determinism.  Skips when the simulator CLI is not installed.
"""

import hashlib
import json
import shutil
import subprocess

import pytest

from kpoplots.cli import main

KPOSIM = shutil.which("kposim")

pytestmark = pytest.mark.skipif(KPOSIM is None, reason="kposim CLI not installed")


def run_kposim(command, config, outdir, tmp_path):
    cfg = tmp_path / f"{command}_{outdir.name}.json"
    cfg.write_text(json.dumps(config))
    proc = subprocess.run(
        [KPOSIM, command, "--config", str(cfg), "--out", str(outdir), "--threads", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return outdir


@pytest.fixture(scope="module")
def products(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("products")
    data = tmp_path / "data"
    data.mkdir()
    model = {"g3": 0.01695, "g4": 8.33e-5}
    run_kposim(
        "spectrum",
        {"model": model, "gamma_grid": [2.0, 4.0], "dim": 60, "steps": 512,
         "husimi_states": ["fmin"], "husimi_grid_points": 81},
        data, tmp_path,
    )
    run_kposim(
        "ipr-scan",
        {"model": model, "gamma_grid": [2.0, 4.0], "dim": 60, "steps": 512},
        data, tmp_path,
    )
    run_kposim(
        "trace",
        {"model": model, "gamma_grid": {"start": 2.0, "stop": 4.0, "num": 4},
         "anchors": [0, 2], "dim": 60, "steps": 512, "husimi_grid_points": 81},
        data, tmp_path,
    )
    run_kposim(
        "classical",
        {
            "poincare": [{"kappa": 1 / 1500, "gamma": 25.0, "n_seeds": 8,
                          "n_periods": 60}],
            "island_vanishing": {"kappas": [0.01]},
            "scan": {"n_seeds": 48, "n_periods": 200, "grid_size": 96},
        },
        data, tmp_path,
    )
    return data


@pytest.mark.parametrize("figure", ["fig1", "fig2", "fig3", "fig4", "sm"])
def test_figures_render_from_real_products(products, tmp_path, figure):
    out = tmp_path / f"{figure}.png"
    assert main(["render", "--figure", figure, "--in", str(products),
                 "--out", str(out)]) == 0
    assert out.stat().st_size > 2000


def test_real_render_determinism(products, tmp_path):
    digests = []
    for name in ("r1.png", "r2.png"):
        out = tmp_path / name
        assert main(["render", "--figure", "fig1", "--in", str(products),
                     "--out", str(out)]) == 0
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]

"""Batch command-line front end.

Subcommands consume a JSON config, write CSV files plus a resolved-config
sidecar into the output directory, and are fully deterministic: identical
inputs produce byte-identical outputs.  Exit codes: 0 success, 1 computation
error, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, classical, floquet, model, phasespace, tracking
from .errors import KposimError, ParamFileError
from .hamiltonians import HamiltonianSpec

USAGE_ERROR = 2
COMPUTE_ERROR = 1


def _fmt(value) -> str:
    """Shortest round-trip decimal representation for CSV cells."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_sidecar(outdir: Path, command: str, config: dict, extra: dict | None = None) -> None:
    """Record the effective configuration; re-feeding it reproduces the run.

    The sidecar carries the config block (with any command-line overrides
    folded in) under "config"; `--config resolved_config.json` unwraps it.
    """
    effective = dict(config)
    if extra:
        effective.update(extra)
    resolved = {
        "command": command,
        "config": effective,
        "version": __version__,
    }
    with open(outdir / "resolved_config.json", "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _error_record(outdir: Path | None, exc: Exception, code: int) -> None:
    if outdir is not None and outdir.is_dir():
        with open(outdir / "error.json", "w") as fh:
            json.dump(
                {"error": type(exc).__name__, "message": str(exc), "exit_code": code},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


def _require_keys(config: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(config) - allowed
    if unknown:
        raise ParamFileError(f"unknown {where} keys: {sorted(unknown)}")
    missing = required - set(config)
    if missing:
        raise ParamFileError(f"missing {where} keys: {sorted(missing)}")


def _resolve_model(block: dict) -> tuple[float, float, float, float | str]:
    """(g3, g4, omega0, omega_d) from explicit couplings or a target kappa.

    omega_d is "auto" (period-doubling resonance, the default) or a number;
    the chaos-boundary constant is calibrated at omega_d = 2 omega0.
    """
    _require_keys(block, {"g3", "g4", "kappa", "omega0", "omega_d"}, set(), "model")
    omega0 = float(block.get("omega0", 1.0))
    omega_d = block.get("omega_d", "auto")
    if omega_d != "auto":
        omega_d = float(omega_d)
    if "kappa" in block:
        if "g3" in block or "g4" in block:
            raise ParamFileError("model block takes either kappa or (g3, g4), not both")
        g3, g4 = model.nonlinearities_for_kappa(float(block["kappa"]), omega0)
    else:
        if "g3" not in block or "g4" not in block:
            raise ParamFileError("model block needs g3 and g4 (or kappa)")
        g3, g4 = float(block["g3"]), float(block["g4"])
    return g3, g4, omega0, omega_d


def _gamma_grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        _require_keys(spec, {"start", "stop", "num"}, {"start", "stop", "num"}, "grid")
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    grid = np.asarray([float(x) for x in spec], dtype=float)
    if grid.size == 0:
        raise ParamFileError("empty gamma grid")
    return grid


def _spec_for(g3, g4, gamma, dim, omega0=1.0, omega_d="auto", margin=20) -> HamiltonianSpec:
    params, derived = model.build_params(
        g3, g4, gamma=gamma, omega_d=omega_d, omega0=omega0
    )
    return HamiltonianSpec(model=params, derived=derived, dim=dim, margin=margin)


def _pool_map(fn, items, threads: int):
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------- commands


def cmd_params(config: dict, outdir: Path, args) -> None:
    params, derived = model.load_params(config)
    payload = {
        "model": {
            "omega0": params.omega0,
            "g3": params.g3,
            "g4": params.g4,
            "Omega_d": params.Omega_d,
            "omega_d": params.omega_d,
        },
        "derived": {
            "K": derived.K,
            "epsilon2": derived.epsilon2,
            "Pi": derived.Pi,
            "Pi_resonant_approx": model.displacement_amplitude_resonant_approx(
                params.Omega_d, params.omega_d
            ),
            "Gamma": derived.Gamma,
            "omega_a": derived.omega_a,
            "delta": derived.delta,
            "kappa": derived.kappa,
            "chaos_boundary_gamma": model.chaos_boundary_gamma(derived.kappa),
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if outdir is not None:
        with open(outdir / "params.json", "w") as fh:
            fh.write(text)
        _write_sidecar(outdir, "params", config)


_SPECTRUM_KEYS = {
    "model", "gamma_grid", "dim", "steps", "occupation_cap", "pair_tol",
    "husimi_states", "husimi_grid_points", "us_order",
}


def _spectrum_point(task):
    (g3, g4, omega0, omega_d, gamma, dim, steps, cap, pair_tol, husimi_states,
     grid_points, us_order) = task
    spec = _spec_for(g3, g4, gamma, dim, omega0, omega_d)
    spectrum = floquet.compute_spectrum(spec, n_steps=steps, occupation_cap=cap)
    packet = phasespace.origin_packet(spec, us_order)
    overlaps = np.abs(spectrum.modes.conj().T @ packet) ** 2
    report = tracking.detect_kissing(spectrum, gamma, pair_tol, packet)
    fields = {}
    if husimi_states:
        q_grid, p_grid = phasespace.default_grid(gamma, grid_points)
        for name in husimi_states:
            if name == "fmin":
                state = spectrum.modes[:, spectrum.eps0_index]
            elif name == "esqpt":
                state = spectrum.modes[:, report.esqpt_mode_index]
            else:
                raise ParamFileError(f"unknown husimi state {name!r}")
            fields[name] = phasespace.husimi(state, q_grid, p_grid, min_capture=0.0)
    return gamma, spectrum, overlaps, report, fields


def cmd_spectrum(config: dict, outdir: Path, args) -> None:
    _require_keys(config, _SPECTRUM_KEYS, {"model", "gamma_grid"}, "spectrum config")
    g3, g4, omega0, omega_d = _resolve_model(config["model"])
    grid = _gamma_grid(config["gamma_grid"])
    dim = int(args.dim or config.get("dim", 200))
    steps = int(args.steps or config.get("steps", 4096))
    cap = float(config.get("occupation_cap", 30.0))
    pair_tol = float(config.get("pair_tol", 1e-2))
    husimi_states = config.get("husimi_states", [])
    grid_points = int(config.get("husimi_grid_points", 201))
    us_order = int(config.get("us_order", 0))

    tasks = [
        (g3, g4, omega0, omega_d, float(g), dim, steps, cap, pair_tol,
         tuple(husimi_states), grid_points, us_order)
        for g in grid
    ]
    results = _pool_map(_spectrum_point, tasks, args.threads)

    kissing_rows = []
    for gamma, spectrum, overlaps, report, fields in results:
        rows = [
            (
                rec["index"], rec["quasienergy"], rec["raw_phase"], rec["scaled"],
                rec["occupation"], rec["parity"], float(overlaps[rec["index"]]),
            )
            for rec in floquet.spectrum_records(spectrum)
        ]
        write_csv(
            outdir / f"spectrum_gamma{_fmt(gamma)}.csv",
            ["index", "quasienergy", "raw_phase", "scaled", "occupation", "parity",
             "overlap_origin"],
            rows,
        )
        kissing_rows.append(
            (
                gamma, report.pair_count, report.below_esqpt_count,
                report.cat_state_count, report.esqpt_mode_index,
                report.esqpt_scaled_energy, report.esqpt_overlap,
                int(report.extrapolated), int(report.degenerate_by_construction),
            )
        )
        for name, field in fields.items():
            phasespace.save_field(field, outdir / f"husimi_{name}_gamma{_fmt(gamma)}.csv")
    write_csv(
        outdir / "kissing.csv",
        ["gamma", "pair_count", "below_esqpt_count", "cat_state_count",
         "esqpt_mode_index", "esqpt_scaled_energy", "esqpt_overlap", "extrapolated",
         "degenerate_by_construction"],
        kissing_rows,
    )
    _write_sidecar(outdir, "spectrum", config, {"dim": dim, "steps": steps})


_IPR_KEYS = {"model", "gamma_grid", "kappa_grid", "dim", "steps", "occupation_cap", "us_order", "omega_d"}


def _ipr_point(task):
    g3, g4, omega0, omega_d, gamma, dim, steps, cap, us_order = task
    spec = _spec_for(g3, g4, gamma, dim, omega0, omega_d)
    # no scaled-quasienergy reference here: deep in the chaotic regime every
    # mode can exceed the occupation cap, and I_G needs only the mode basis
    u = floquet.propagator(spec, n_steps=steps)
    spectrum = floquet.floquet_spectrum(u, spec.model.omega_d, steps_used=steps)
    packet = phasespace.origin_packet(spec, us_order)
    ig = phasespace.floquet_basis_ipr(packet, spectrum)
    esqpt = tracking.find_esqpt_state(spectrum, packet)
    return gamma, spec.derived.kappa, ig, esqpt.overlap, esqpt.index, esqpt.found


def cmd_ipr_scan(config: dict, outdir: Path, args) -> None:
    _require_keys(config, _IPR_KEYS, {"gamma_grid"}, "ipr-scan config")
    grid = _gamma_grid(config["gamma_grid"])
    dim = int(args.dim or config.get("dim", 250))
    steps = int(args.steps or config.get("steps", 4096))
    cap = float(config.get("occupation_cap", 30.0))
    us_order = int(config.get("us_order", 0))
    omega_d = config.get("omega_d", "auto")
    if omega_d != "auto":
        omega_d = float(omega_d)
    if "kappa_grid" in config:
        kappas = [float(k) for k in config["kappa_grid"]]
        couplings = [model.nonlinearities_for_kappa(k) + (1.0, omega_d) for k in kappas]
    elif "model" in config:
        couplings = [_resolve_model(config["model"])]
    else:
        raise ParamFileError("ipr-scan needs a model block or kappa_grid")

    tasks = [
        (g3, g4, omega0, wd, float(g), dim, steps, cap, us_order)
        for (g3, g4, omega0, wd) in couplings
        for g in grid
    ]
    results = _pool_map(_ipr_point, tasks, args.threads)
    rows = [
        (
            gamma, kappa, ig, ovl, idx, int(found),
            model.chaos_boundary_gamma(kappa), model.CHAOS_BOUNDARY_CONSTANT,
        )
        for gamma, kappa, ig, ovl, idx, found in results
    ]
    write_csv(
        outdir / "ipr_scan.csv",
        ["gamma", "kappa", "I_G", "esqpt_overlap", "esqpt_index", "esqpt_found",
         "gamma_star", "gamma_star_kappa"],
        rows,
    )
    _write_sidecar(outdir, "ipr-scan", config, {"dim": dim, "steps": steps})


_CLASSICAL_KEYS = {"omega_d_ratio", "poincare", "areas", "eta_audit", "island_vanishing", "scan"}
_SCAN_KEYS = {"n_seeds", "span_factor", "n_periods", "steps_per_period", "grid_size",
              "pad_fraction", "escape_radius"}


def _scan_config(block: dict | None) -> classical.AreaScanConfig:
    if not block:
        return classical.AreaScanConfig()
    _require_keys(block, _SCAN_KEYS, set(), "scan")
    return classical.AreaScanConfig(**{k: v for k, v in block.items()})


def cmd_classical(config: dict, outdir: Path, args) -> None:
    _require_keys(config, _CLASSICAL_KEYS, set(), "classical config")
    ratio = float(config.get("omega_d_ratio", 2.0))
    cfg = _scan_config(config.get("scan"))

    poincare_rows = []
    for block in config.get("poincare", []):
        params = classical.ClassicalParams(
            kappa=float(block["kappa"]), gamma=float(block["gamma"]), omega_d_ratio=ratio
        )
        n_seeds = int(block.get("n_seeds", 40))
        n_periods = int(block.get("n_periods", 400))
        wells = classical.locate_wells(params)
        span = cfg.span_factor * wells.separation
        seeds = np.linspace(
            wells.midpoint - 0.5 * span, wells.midpoint + 0.5 * span, n_seeds
        )
        for tid, q0 in enumerate(seeds):
            res = classical.trajectory((float(q0), 0.0), params, n_periods,
                                       cfg.steps_per_period)
            for n, (q, p) in enumerate(res.strobe_points):
                poincare_rows.append(
                    (block["kappa"], block["gamma"], tid, float(q0), n, q, p,
                     res.lyapunov, res.classified)
                )
    if poincare_rows:
        write_csv(
            outdir / "poincare.csv",
            ["kappa", "gamma", "traj_id", "q0", "n", "q", "p", "lyapunov", "classified"],
            poincare_rows,
        )

    area_rows = []
    for block in config.get("areas", []):
        params = classical.ClassicalParams(
            kappa=float(block["kappa"]), gamma=float(block["gamma"]), omega_d_ratio=ratio
        )
        est = classical.doublewell_area(params, cfg)
        area_rows.append(
            (params.kappa, params.gamma, est.area, est.n_regular_cells, est.grid_cell,
             est.n_regular, est.n_chaotic, int(est.all_chaotic),
             int(classical.connected_double_well(est)))
        )
    if area_rows:
        write_csv(
            outdir / "area_map.csv",
            ["kappa", "gamma", "area", "n_regular_cells", "grid_cell", "n_regular",
             "n_chaotic", "all_chaotic", "connected_double_well"],
            area_rows,
        )

    audit = config.get("eta_audit")
    if audit:
        base = classical.ClassicalParams(
            kappa=float(audit["kappa"]), gamma=float(audit["gamma"]), omega_d_ratio=ratio
        )
        base_est = classical.doublewell_area(base, cfg)
        audit_rows = []
        for eta2 in audit.get("eta2", [0.5, 2.0]):
            est = classical.doublewell_area(classical.rescaled(base, float(eta2)), cfg)
            expected = float(eta2) * base_est.area
            deviation = abs(est.area - expected) / expected if expected else np.inf
            audit_rows.append(
                (base.kappa, base.gamma, eta2, base_est.area, est.area, expected,
                 deviation, "ok" if deviation < 0.05 else "violated")
            )
        write_csv(
            outdir / "eta_audit.csv",
            ["kappa", "gamma", "eta2", "area_base", "area_scaled", "expected",
             "relative_deviation", "verdict"],
            audit_rows,
        )

    vanishing = config.get("island_vanishing")
    if vanishing:
        rows = []
        for kappa in vanishing["kappas"]:
            result = classical.island_vanishing_gamma(
                float(kappa), omega_d_ratio=ratio,
                config=_scan_config(config.get("scan")) if config.get("scan") else None,
            )
            rows.append(
                (result.kappa, result.gamma_vanish, result.gamma_star,
                 result.area_floor, result.quadrature_scale)
            )
        write_csv(
            outdir / "island_vanishing.csv",
            ["kappa", "gamma_vanish", "gamma_star", "area_floor", "quadrature_scale"],
            rows,
        )
    _write_sidecar(outdir, "classical", config)


_TRACE_KEYS = {
    "model", "gamma_grid", "anchors", "dim", "steps", "occupation_cap",
    "energy_halfwidth", "scheme", "reanchor_every", "husimi_grid_points",
    "dump_spectrum", "us_order",
}


def cmd_trace(config: dict, outdir: Path, args) -> None:
    _require_keys(config, _TRACE_KEYS, {"model", "gamma_grid", "anchors"}, "trace config")
    g3, g4, omega0, omega_d = _resolve_model(config["model"])
    grid = _gamma_grid(config["gamma_grid"])
    anchors = [int(a) for a in config["anchors"]]
    if not anchors:
        raise ParamFileError("no anchors given")
    dim = int(args.dim or config.get("dim", 200))
    if any(a < 0 or a >= dim for a in anchors):
        raise ParamFileError(f"anchor indices must lie in [0, {dim})")
    steps = int(args.steps or config.get("steps", 4096))
    cap = float(config.get("occupation_cap", 30.0))
    constraints = tracking.TraceConstraints(
        energy_halfwidth=float(config.get("energy_halfwidth", 5.0)),
        occupation_cap=cap,
    )
    scheme = config.get("scheme", "combined")
    reanchor = int(config.get("reanchor_every", 10))
    grid_points = int(config.get("husimi_grid_points", 201))
    us_order = int(config.get("us_order", 0))
    dump_spectrum = bool(config.get("dump_spectrum", True))

    provider = tracking.GammaSweepProvider(
        g3, g4, dim=dim, n_steps=steps, occupation_cap=cap, omega_d=omega_d,
        omega0=omega0,
    )

    sweep_rows = []
    spectrum_rows = []
    esqpt_by_gamma: dict[float, tuple[float, float]] = {}
    ipr_cache: dict[tuple[float, int], float] = {}

    def on_point(point, selections):
        gamma = point.gamma
        q_grid, p_grid = phasespace.default_grid(gamma, grid_points)
        packet = phasespace.origin_packet(point.spec, us_order)
        esqpt = tracking.find_esqpt_state(point.spectrum, packet)
        esqpt_state = point.spectrum.modes[:, esqpt.index]
        i_esqpt = phasespace.husimi(esqpt_state, q_grid, p_grid, min_capture=0.0).ipr()
        esqpt_by_gamma[gamma] = (i_esqpt, esqpt.overlap)
        for idx in set(selections.values()):
            state = point.spectrum.modes[:, idx]
            ipr_cache[(gamma, idx)] = phasespace.husimi(
                state, q_grid, p_grid, min_capture=0.0
            ).ipr()
        if dump_spectrum:
            packet_overlap = np.abs(point.spectrum.modes.conj().T @ packet) ** 2
            for rec in floquet.spectrum_records(point.spectrum):
                spectrum_rows.append(
                    (gamma, rec["index"], rec["scaled"], rec["occupation"],
                     rec["parity"], float(packet_overlap[rec["index"]]))
                )

    lines = tracking.trace_lines(
        provider, anchors, grid, constraints, scheme=scheme,
        reanchor_every=reanchor, on_point=on_point,
    )

    for anchor, line in zip(anchors, lines):
        for i, gamma in enumerate(line.gamma_values):
            idx = line.mode_indices[i]
            ipr = ipr_cache.get((gamma, idx), np.nan)
            i_esqpt, esqpt_ovl = esqpt_by_gamma.get(gamma, (np.nan, np.nan))
            sweep_rows.append(
                (
                    anchor, gamma, idx, line.scaled_energies[i], line.occupations[i],
                    line.overlaps[i], ipr,
                    ipr / i_esqpt if (i_esqpt and np.isfinite(i_esqpt)) else np.nan,
                    i_esqpt, esqpt_ovl, line.status[i],
                )
            )
    write_csv(
        outdir / "trace.csv",
        ["anchor", "gamma", "mode_index", "scaled_energy", "occupation",
         "overlap_prev", "husimi_ipr", "husimi_ipr_normalized", "i_esqpt",
         "esqpt_overlap", "status"],
        sweep_rows,
    )
    if dump_spectrum:
        write_csv(
            outdir / "spectrum_points.csv",
            ["gamma", "mode_index", "scaled", "occupation", "parity", "overlap_origin"],
            spectrum_rows,
        )
    _write_sidecar(outdir, "trace", config, {"dim": dim, "steps": steps})


COMMANDS = {
    "params": (cmd_params, False),
    "spectrum": (cmd_spectrum, True),
    "ipr-scan": (cmd_ipr_scan, True),
    "classical": (cmd_classical, True),
    "trace": (cmd_trace, True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kposim",
        description="Floquet and classical-chaos diagnostics for the squeeze-driven "
        "Kerr parametric oscillator",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, required=True, help="JSON config file")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--dim", type=int, help="override Fock truncation")
    parser.add_argument("--steps", type=int, help="override integrator step count")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    handler, needs_out = COMMANDS[args.command]

    outdir = args.out
    if needs_out and outdir is None:
        sys.stderr.write("error: --out is required for this command\n")
        return USAGE_ERROR
    try:
        with open(args.config) as fh:
            config = json.load(fh)
        if not isinstance(config, dict):
            raise ParamFileError("config must be a JSON object")
        if set(config) >= {"command", "config"}:
            # resolved-config sidecar from a previous run
            if config["command"] != args.command:
                raise ParamFileError(
                    f"resolved config is for command {config['command']!r}"
                )
            config = config["config"]
    except (OSError, json.JSONDecodeError, ParamFileError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return USAGE_ERROR

    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    try:
        handler(config, outdir, args)
    except ParamFileError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        _error_record(outdir, exc, USAGE_ERROR)
        return USAGE_ERROR
    except KposimError as exc:
        sys.stderr.write(f"computation error: {exc}\n")
        _error_record(outdir, exc, COMPUTE_ERROR)
        return COMPUTE_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())

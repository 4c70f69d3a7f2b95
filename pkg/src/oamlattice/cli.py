"""Command-line front end: validated configs in, CSV/SVG artifacts out.

Every run writes a manifest that is itself a valid config file with all
"auto" values pinned to what the run actually used, so re-running a
manifest reproduces the artifacts byte for byte.  Sweeps fan the base
config out over a Cartesian product of axis values; each point runs in
isolation and failures land in an `error` column instead of aborting the
sweep.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 sweep
finished with failed points.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from . import config as cfg
from .dynamics import integrate, population_to_csv, trajectory_to_csv
from .errors import ConfigurationError, NumericalError, OamLatticeError
from .filters import (
    cascade_response,
    design_filter,
    filter_metrics,
    metrics_record,
    refined_metrics,
)
from .lattice import LatticeConfig
from .memory import report_record, report_to_text, run_memory
from .physical import format_angular, pulse_duration_estimate
from .spectrum import (
    band_points,
    default_frequency_grid,
    response_to_csv,
)
from .svgplot import heatmap, line_plot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SWEEP_PARTIAL = 4

_RUN_COMMANDS = ("simulate", "memory", "bands", "filter", "design", "params")


def _load_preset(name: str) -> dict:
    root = resources.files("oamlattice").joinpath("presets")
    candidate = root.joinpath(f"{name}.toml")
    if not candidate.is_file():
        available = sorted(
            p.name[: -len(".toml")]
            for p in root.iterdir()
            if p.name.endswith(".toml")
        )
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(available)}"
        )
    with candidate.open("rb") as fh:
        return cfg.tomllib.load(fh)


def _gather_raw(args) -> dict:
    if args.config and args.preset:
        raise ConfigurationError("--config and --preset are mutually exclusive")
    if args.preset:
        raw = _load_preset(args.preset)
    elif args.config:
        raw = cfg.load_toml(args.config)
    else:
        raw = {}
    for assignment in args.set or []:
        cfg.apply_override(raw, assignment)
    for axis in args.sweep or []:
        cfg.apply_sweep_axis(raw, axis)
    return raw


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value).replace(",", ";").replace("\n", " ")


def _write_rows(path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(_format_cell(row[k]) if k in row else "" for k in header)
                + "\n"
            )


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _record_text(record: dict) -> str:
    lines = []
    for key, value in record.items():
        lines.append(f"{key} = {_format_cell(value)}")
    return "\n".join(lines) + "\n"


def _downsample(x, y, limit: int = 2000):
    if len(x) <= limit:
        return x, y
    stride = -(-len(x) // limit)
    return x[::stride], y[::stride]


# ---------------------------------------------------------------------------
# Command implementations.  Each takes the resolved config, runs the
# physics, optionally writes artifacts, and returns one flat metrics row.


def _cmd_memory(resolved: dict, outdir=None, svg: bool = True) -> dict:
    plan = cfg.build_plan(resolved)
    lattice = cfg.build_memory_lattice(resolved, plan)
    losses = cfg.build_losses(resolved)
    pulse = cfg.build_pulse(resolved, default_center=0.5 * plan.write_time)
    dt = cfg.resolve_dt(resolved, lattice.kappa)
    report = run_memory(
        plan,
        lattice,
        losses,
        pulse,
        dt=dt,
        rotating_frame=resolved["run"]["rotating_frame"],
    )
    resolved["plan"]["readout_time"] = (
        report.read_end - report.read_start - 0.5 * plan.ramp
    )
    if outdir is not None:
        traj = report.trajectory
        _write_text(os.path.join(outdir, "report.txt"), report_to_text(report))
        trajectory_to_csv(traj, os.path.join(outdir, "trace.csv"))
        population_to_csv(traj, os.path.join(outdir, "populations.csv"))
        if svg:
            peak = float(np.max(np.abs(traj.e_in) ** 2)) or 1.0
            t_in, p_in = _downsample(traj.times, np.abs(traj.e_in) ** 2 / peak)
            t_out, p_out = _downsample(traj.times, np.abs(traj.e_out) ** 2 / peak)
            line_plot(
                os.path.join(outdir, "power_trace.svg"),
                [(t_in, p_in, "input"), (t_out, p_out, "output")],
                xlabel="time",
                ylabel="power (input peak = 1)",
                title=f"{plan.variant}: write {plan.write_time:g}, "
                f"hold {plan.hold_time:g}",
            )
            heatmap(
                os.path.join(outdir, "oam_heatmap.svg"),
                traj.snapshot_times,
                traj.sites,
                traj.populations.T,
                xlabel="time",
                ylabel="site index",
                title="site population |a_j|^2",
            )
    return report_record(report)


def _cmd_simulate(resolved: dict, outdir=None, svg: bool = True) -> dict:
    scenario = cfg.build_scenario(resolved)
    traj = integrate(scenario)
    row = {
        "input_energy": float(traj.cum_input[-1]),
        "output_energy": float(traj.cum_output[-1]),
        "dissipated_energy": float(traj.cum_loss[-1]),
        "final_stored": float(traj.stored[-1]),
        "peak_stored": float(traj.stored.max(initial=0.0)),
        "ledger_residual": traj.ledger_residual(),
        "boundary_peak_fraction": traj.boundary_peak_fraction,
        "boundary_contaminated": traj.boundary_contaminated,
    }
    if outdir is not None:
        _write_text(os.path.join(outdir, "summary.txt"), _record_text(row))
        trajectory_to_csv(traj, os.path.join(outdir, "trace.csv"))
        population_to_csv(traj, os.path.join(outdir, "populations.csv"))
        if svg:
            peak = float(np.max(np.abs(traj.e_in) ** 2)) or 1.0
            t_in, p_in = _downsample(traj.times, np.abs(traj.e_in) ** 2 / peak)
            t_out, p_out = _downsample(traj.times, np.abs(traj.e_out) ** 2 / peak)
            line_plot(
                os.path.join(outdir, "power_trace.svg"),
                [(t_in, p_in, "input"), (t_out, p_out, "output")],
                xlabel="time",
                ylabel="power (input peak = 1)",
            )
            heatmap(
                os.path.join(outdir, "oam_heatmap.svg"),
                traj.snapshot_times,
                traj.sites,
                traj.populations.T,
                xlabel="time",
                ylabel="site index",
                title="site population |a_j|^2",
            )
    return row


def _cmd_filter(resolved: dict, outdir=None, svg: bool = True) -> dict:
    sec = resolved["filter"]
    stages = cfg.build_filter_stages(resolved)
    if sec["refine"]:
        metrics, curve = refined_metrics(
            stages, span=sec["span"], points=sec["points"]
        )
    else:
        grid = default_frequency_grid(
            sec["kappa"], sec["omega0"], sec["points"], sec["span"]
        )
        curve = cascade_response(stages, grid)
        metrics = filter_metrics(curve)
    row: dict = {"stages": len(stages)}
    for i, stage in enumerate(stages, start=1):
        row[f"stage{i}_port_rate"] = stage.port_rate
    row.update(metrics_record(metrics))
    if outdir is not None:
        _write_text(os.path.join(outdir, "metrics.txt"), _record_text(row))
        response_to_csv(curve, os.path.join(outdir, "response.csv"))
        if svg:
            series = [(curve.frequencies, curve.db(), "combined")]
            if len(stages) > 1:
                for i, stage in enumerate(stages, start=1):
                    single = cascade_response([stage], curve.frequencies)
                    series.append(
                        (single.frequencies, single.db(), f"stage {i}")
                    )
            line_plot(
                os.path.join(outdir, "response_db.svg"),
                series,
                xlabel="frequency",
                ylabel="transmission (dB)",
                title="stopband response",
            )
    return row


def _cmd_design(resolved: dict, outdir=None, svg: bool = True) -> dict:
    sec = resolved["design"]
    losses = cfg.build_losses(resolved, require_no_port=True)
    result = design_filter(
        kappa=sec["kappa"],
        center=sec["center"],
        width_3db=sec["width_3db"],
        rejection_db=sec["rejection_db"],
        losses=losses,
        stages=sec["stages"],
    )
    row: dict = {"stages": len(result.stages)}
    for i, stage in enumerate(result.stages, start=1):
        row[f"stage{i}_port_rate"] = stage.port_rate
    row.update(metrics_record(result.metrics))
    row["meets_width"] = result.meets_width
    row["meets_rejection"] = result.meets_rejection
    if outdir is not None:
        _write_text(os.path.join(outdir, "design.txt"), _record_text(row))
        response_to_csv(result.curve, os.path.join(outdir, "response.csv"))
        if svg:
            line_plot(
                os.path.join(outdir, "response_db.svg"),
                [(result.curve.frequencies, result.curve.db(), "designed")],
                xlabel="frequency",
                ylabel="transmission (dB)",
                title="designed stopband",
            )
    return row


def _cmd_bands(resolved: dict, outdir=None, svg: bool = True) -> dict:
    sec = resolved["bands"]
    lattice = LatticeConfig(
        kappa=sec["kappa"],
        j_min=-1,
        j_max=1,
        omega0=sec["omega0"],
        num_aux=sec["num_aux"],
    )
    rows = []
    series = []
    for phi in sec["phi"]:
        points = band_points(lattice, phi, sec["points"])
        for p in points:
            rows.append(
                {"phi": phi, "K": p.K, "omega": p.omega, "v_g": p.v_g}
            )
        series.append(
            (
                [p.K for p in points],
                [p.omega for p in points],
                f"phi = {phi:.4g}",
            )
        )
    if outdir is not None:
        _write_rows(
            os.path.join(outdir, "bands.csv"),
            ["phi", "K", "omega", "v_g"],
            rows,
        )
        if svg:
            line_plot(
                os.path.join(outdir, "bands.svg"),
                series,
                xlabel="Bloch wave number K",
                ylabel="frequency",
                title="dispersion",
            )
    return {"phases": len(sec["phi"]), "points": sec["points"]}


def _cmd_params(resolved: dict, outdir=None, svg: bool = True) -> dict:
    spec = cfg.build_cavity(resolved)
    kappa = spec.kappa
    row = {
        "length_m": spec.length,
        "bs_reflectivity": spec.bs_reflectivity,
        "alpha": spec.alpha,
        "fsr_rad_s": spec.fsr,
        "kappa_rad_s": kappa,
        "bandwidth_rad_s": spec.bandwidth,
        "pulse_estimate_s": pulse_duration_estimate(kappa),
    }
    if outdir is not None:
        text = _record_text(row) + (
            f"# fsr = {format_angular(spec.fsr)}\n"
            f"# bandwidth (4 kappa) = {format_angular(spec.bandwidth)}\n"
            f"# pulse estimate = {pulse_duration_estimate(kappa) * 1e9:.4g} ns\n"
        )
        _write_text(os.path.join(outdir, "params.txt"), text)
    return row


_IMPLEMENTATIONS = {
    "memory": _cmd_memory,
    "simulate": _cmd_simulate,
    "filter": _cmd_filter,
    "design": _cmd_design,
    "bands": _cmd_bands,
    "params": _cmd_params,
}


# ---------------------------------------------------------------------------
# Sweeps


def _sweep_worker(task):
    command, point_resolved = task
    try:
        return _IMPLEMENTATIONS[command](point_resolved, outdir=None)
    except Exception as exc:  # isolate every per-point failure
        return {"error": f"{type(exc).__name__}: {exc}"}


def _run_sweep(command: str, resolved: dict, outdir: str) -> int:
    points = cfg.sweep_points(resolved)
    axes = list(resolved["sweep"])
    tasks = [
        (command, cfg.point_config(resolved, point)) for point in points
    ]
    jobs = max(1, resolved["run"]["jobs"])
    if jobs == 1 or len(tasks) <= 1:
        results = [_sweep_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, tasks))

    metric_keys: list[str] = []
    for row in results:
        for key in row:
            if key != "error" and key not in metric_keys:
                metric_keys.append(key)
    header = axes + metric_keys + ["error"]
    rows = []
    failures = 0
    for point, row in zip(points, results):
        merged = {axis: point[axis] for axis in axes}
        merged.update(row)
        if "error" in row:
            failures += 1
        else:
            merged["error"] = ""
        rows.append(merged)
    _write_rows(os.path.join(outdir, "sweep.csv"), header, rows)
    _write_text(
        os.path.join(outdir, "manifest.toml"),
        cfg.manifest_text(resolved, command),
    )
    print(
        f"sweep: {len(rows)} points, {failures} failed; "
        f"artifacts in {outdir}"
    )
    return EXIT_SWEEP_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# Entry point


def _execute(command: str, args) -> int:
    raw = _gather_raw(args)
    if command == "sweep":
        run_sec = raw.get("run", {})
        command = run_sec.get("command")
        if command not in _RUN_COMMANDS:
            raise ConfigurationError(
                "sweep needs run.command in the config to know what to run"
            )
        if not raw.get("sweep"):
            raise ConfigurationError(
                "sweep needs at least one axis: --sweep section.key=v1,v2,..."
            )
    resolved = cfg.resolve_config(raw, command)
    if args.jobs is not None:
        resolved["run"]["jobs"] = args.jobs
    if args.no_svg:
        resolved["run"]["svg"] = False

    outdir = args.out
    os.makedirs(outdir, exist_ok=True)

    if resolved["sweep"]:
        return _run_sweep(command, resolved, outdir)

    row = _IMPLEMENTATIONS[command](
        resolved, outdir=outdir, svg=resolved["run"]["svg"]
    )
    _write_text(
        os.path.join(outdir, "manifest.toml"),
        cfg.manifest_text(resolved, command),
    )
    sys.stdout.write(_record_text(row))
    print(f"artifacts in {outdir}")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (TOML with units)")
    parser.add_argument("--preset", help="named built-in config")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable), e.g. plan.hold_time=5us",
    )
    parser.add_argument(
        "--sweep",
        action="append",
        metavar="KEY=V1,V2,...",
        help="sweep one config key over values (repeatable)",
    )
    parser.add_argument("--jobs", type=int, help="parallel sweep workers")
    parser.add_argument(
        "--no-svg", action="store_true", help="skip SVG artifacts"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamlattice",
        description="Simulate and design synthetic OAM-lattice devices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate a custom scenario"),
        ("memory", "run a write/store/read protocol"),
        ("bands", "tabulate the dispersion relation"),
        ("filter", "evaluate a stopband filter"),
        ("design", "choose filter stages for a target stopband"),
        ("params", "map cavity geometry to model rates"),
        ("sweep", "run the config's command over sweep axes"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "bands":
            p.add_argument(
                "--phi", help="comma-separated phases in rad, e.g. 0,1.5708"
            )
            p.add_argument("--num-aux", type=int, choices=(1, 2))
            p.add_argument("--points", type=int)
            p.add_argument("--kappa", help='tunneling rate, e.g. "1.0/us"')
    return parser


def _apply_bands_flags(args) -> None:
    if args.command != "bands":
        return
    sec_overrides = []
    if args.phi:
        phis = [float(v) for v in args.phi.split(",") if v.strip()]
        sec_overrides.append(("phi", [f"{v!r} rad" for v in phis]))
    if args.num_aux is not None:
        sec_overrides.append(("num_aux", args.num_aux))
    if args.points is not None:
        sec_overrides.append(("points", args.points))
    if args.kappa is not None:
        value = cfg._coerce_cli_value(args.kappa)
        if isinstance(value, (int, float)):
            value = f"{float(value)!r} /us"
        sec_overrides.append(("kappa", value))
    args._bands_overrides = sec_overrides


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bands":
            _apply_bands_flags(args)
        return _run_with_flags(args)
    except ConfigurationError as exc:
        _emit_error(exc, EXIT_CONFIG)
        return EXIT_CONFIG
    except NumericalError as exc:
        _emit_error(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL


def _run_with_flags(args) -> int:
    if getattr(args, "_bands_overrides", None):
        # bands flags go straight into the raw mapping, not through --set,
        # because list values have no --set syntax
        raw = _gather_raw(args)
        for key, value in args._bands_overrides:
            raw.setdefault("bands", {})[key] = value
        resolved = cfg.resolve_config(raw, "bands")
        if args.no_svg:
            resolved["run"]["svg"] = False
        outdir = args.out
        os.makedirs(outdir, exist_ok=True)
        row = _cmd_bands(resolved, outdir=outdir, svg=resolved["run"]["svg"])
        _write_text(
            os.path.join(outdir, "manifest.toml"),
            cfg.manifest_text(resolved, "bands"),
        )
        sys.stdout.write(_record_text(row))
        print(f"artifacts in {outdir}")
        return EXIT_OK
    return _execute(args.command, args)


def _emit_error(exc: OamLatticeError, code: int) -> None:
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "details": getattr(exc, "details", []) or [],
        "exit_code": code,
    }
    json.dump(record, sys.stderr)
    sys.stderr.write("\n")


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

"""End-to-end command-line runs: artifacts, manifests, sweeps, exit codes.

Everything goes through `main(argv)` in process, so coverage tools see the
command implementations and failures carry real tracebacks.
"""

import json

import numpy as np
import pytest

from oamlattice.cli import main

MEMORY_ARGS = (
    "--set", "plan.write_time=16us",
    "--set", "plan.hold_time=4us",
    "--set", "losses.port_rate=4/us",
    "--set", "run.dt=0.008us",
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def record_from(stdout: str) -> dict:
    out = {}
    for line in stdout.splitlines():
        key, sep, value = line.partition(" = ")
        if sep:
            out[key] = value
    return out


def test_params_prints_rates_and_annotations(tmp_path, capsys):
    out_dir = tmp_path / "params"
    code, out, _ = run_cli(capsys, "params", "--out", str(out_dir))
    assert code == 0
    rec = record_from(out)
    assert float(rec["length_m"]) == 0.3
    assert float(rec["alpha"]) == pytest.approx(1.0 / 7.0, rel=1e-15)
    assert float(rec["kappa_rad_s"]) == pytest.approx(163152358.09523809, rel=1e-15)
    text = (out_dir / "params.txt").read_text()
    assert "# fsr = 2 pi x" in text
    assert "# bandwidth (4 kappa) = 2 pi x" in text
    assert "ns" in text
    assert (out_dir / "manifest.toml").exists()


def test_bands_flags_tabulate_the_dispersion(tmp_path, capsys):
    out_dir = tmp_path / "bands"
    code, out, _ = run_cli(
        capsys,
        "bands", "--phi", "0.5", "--points", "8", "--no-svg",
        "--out", str(out_dir),
    )
    assert code == 0
    data = np.loadtxt(out_dir / "bands.csv", delimiter=",", skiprows=1)
    assert data.shape == (8, 4)
    phi, K, omega, v_g = data.T
    assert np.all(phi == 0.5)
    assert np.allclose(omega, -2.0 * np.cos(K - 0.5), atol=1e-12)
    assert np.allclose(v_g, 2.0 * np.sin(K - 0.5), atol=1e-12)
    assert not (out_dir / "bands.svg").exists()
    assert '"0.5 rad"' in (out_dir / "manifest.toml").read_text()


def test_bands_draws_one_series_per_phase(tmp_path, capsys):
    out_dir = tmp_path / "bands2"
    code, out, _ = run_cli(
        capsys, "bands", "--phi", "0,0.5", "--points", "16", "--out", str(out_dir)
    )
    assert code == 0
    assert record_from(out)["phases"] == "2"
    assert (out_dir / "bands.svg").read_text().count("<polyline ") == 2


def test_memory_run_writes_the_full_artifact_set(tmp_path, capsys):
    out_dir = tmp_path / "mem"
    code, out, _ = run_cli(capsys, "memory", "--out", str(out_dir), *MEMORY_ARGS)
    assert code == 0
    for name in (
        "report.txt",
        "trace.csv",
        "populations.csv",
        "power_trace.svg",
        "oam_heatmap.svg",
        "manifest.toml",
    ):
        assert (out_dir / name).exists(), name
    rec = record_from(out)
    assert float(rec["efficiency"]) > 0.99
    assert float(rec["fidelity"]) > 0.99
    assert rec["readout_complete"] == "true"
    assert "artifacts in" in out


def test_memory_manifest_reproduces_the_run_byte_for_byte(tmp_path, capsys):
    first, second = tmp_path / "m1", tmp_path / "m2"
    code, _, _ = run_cli(capsys, "memory", "--out", str(first), *MEMORY_ARGS)
    assert code == 0
    manifest = first / "manifest.toml"
    # the manifest pins every auto (extent, dt, pulse, adaptive readout)
    text = manifest.read_text()
    assert '"auto"' not in text
    code, _, _ = run_cli(
        capsys, "memory", "--config", str(manifest), "--out", str(second)
    )
    assert code == 0
    assert (second / "trace.csv").read_bytes() == (first / "trace.csv").read_bytes()
    assert (second / "manifest.toml").read_bytes() == manifest.read_bytes()


def test_sweep_worker_count_does_not_change_results(tmp_path, capsys):
    d1, d2 = tmp_path / "s1", tmp_path / "s2"
    base = (
        "sweep",
        "--set", "run.command=memory",
        *MEMORY_ARGS,
        "--sweep", "plan.hold_time=3us,4us",
    )
    code1, out1, _ = run_cli(capsys, *base, "--jobs", "1", "--out", str(d1))
    code2, _, _ = run_cli(capsys, *base, "--jobs", "2", "--out", str(d2))
    assert code1 == code2 == 0
    assert "2 points, 0 failed" in out1
    assert (d1 / "sweep.csv").read_bytes() == (d2 / "sweep.csv").read_bytes()
    lines = (d1 / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("plan.hold_time,variant,")
    assert lines[0].endswith(",error")


def test_sweep_isolates_failing_points(tmp_path, capsys):
    out_dir = tmp_path / "sweep_fail"
    code, out, _ = run_cli(
        capsys,
        "memory",
        "--set", "plan.hold_time=4us",
        "--set", "losses.port_rate=4/us",
        "--set", "run.dt=0.008us",
        # the second write window is too short for the default pulse
        "--sweep", "plan.write_time=16us,6us",
        "--out", str(out_dir),
    )
    assert code == 4
    assert "1 failed" in out
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    good = lines[1].split(",")
    bad = lines[2].split(",")
    assert good[0] == "16" and good[-1] == ""
    assert bad[0] == "6" and bad[-1].startswith("ConfigurationError:")


def test_sweep_subcommand_needs_a_command_and_axes(tmp_path, capsys):
    code, _, err = run_cli(capsys, "sweep", "--out", str(tmp_path / "a"))
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "ConfigurationError"
    assert "run.command" in payload["message"]
    code, _, err = run_cli(
        capsys, "sweep", "--set", "run.command=memory", "--out", str(tmp_path / "b")
    )
    assert code == 2
    assert "at least one axis" in json.loads(err)["message"]


def test_filter_preset_reports_the_single_stage_hump(tmp_path, capsys):
    out_dir = tmp_path / "filt"
    code, out, _ = run_cli(
        capsys,
        "filter", "--preset", "fig6b",
        "--set", "filter.refine=false",
        "--set", "filter.points=301",
        "--out", str(out_dir),
    )
    assert code == 0
    rec = record_from(out)
    assert rec["stages"] == "1"
    assert float(rec["rejection_db"]) < -20.0
    assert -25.0 < float(rec["hump_db"]) < -3.0
    for name in ("metrics.txt", "response.csv", "response_db.svg", "manifest.toml"):
        assert (out_dir / name).exists(), name
    assert (out_dir / "response.csv").read_text().splitlines()[0] == "omega,f,f_db"


def test_filter_without_intrinsic_loss_has_no_stopband(tmp_path, capsys):
    # the port alone cannot absorb: the response stays all-pass
    cfg = tmp_path / "lossless.toml"
    cfg.write_text('[filter]\ntargets = ["-1.8 /us"]\npoints = 301\nrefine = false\n')
    code, _, err = run_cli(
        capsys, "filter", "--config", str(cfg), "--out", str(tmp_path / "nf")
    )
    assert code == 3
    payload = json.loads(err)
    assert payload["error"] == "NoStopbandError"
    assert payload["exit_code"] == 3


def test_design_rejects_widths_outside_the_band(tmp_path, capsys):
    code, _, err = run_cli(
        capsys,
        "design", "--set", "design.width_3db=4.4/us", "--out", str(tmp_path / "d"),
    )
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "BandRangeError"
    assert payload["exit_code"] == 2


def test_design_writes_stage_rates_and_curves(tmp_path, capsys):
    out_dir = tmp_path / "design"
    code, out, _ = run_cli(
        capsys,
        "design",
        "--set", "design.width_3db=3.6/us",
        "--set", "losses.uniform=0.1/us",
        "--set", "losses.exp_amplitude=0.1/us",
        "--out", str(out_dir),
    )
    assert code == 0
    rec = record_from(out)
    assert rec["stages"] == "2"
    # stage 1 takes the band-edge targets (smaller rate), stage 2 fills in
    assert 0 < float(rec["stage1_port_rate"]) < float(rec["stage2_port_rate"])
    assert rec["meets_width"] == "true"
    assert (out_dir / "design.txt").exists()
    assert (out_dir / "response.csv").exists()


def test_simulate_requires_an_end_time(tmp_path, capsys):
    code, _, err = run_cli(capsys, "simulate", "--out", str(tmp_path / "s"))
    assert code == 2
    payload = json.loads(err)
    assert "simulate.t_end is required for simulate runs" in payload["details"]


def test_simulate_runs_a_config_file(tmp_path, capsys):
    cfg = tmp_path / "scenario.toml"
    cfg.write_text(
        "\n".join(
            [
                "[run]",
                'dt = "0.004 us"',
                "[losses]",
                'port_rate = "2.0 /us"',
                "[simulate]",
                't_end = "4 us"',
                "[pulse]",
                'width = "0.5 us"',
                'center = "1 us"',
                "[schedule]",
                'segments = [ { start = "0 us", phase = "0 rad" } ]',
                "",
            ]
        )
    )
    out_dir = tmp_path / "sim"
    code, out, _ = run_cli(
        capsys, "simulate", "--config", str(cfg), "--no-svg", "--out", str(out_dir)
    )
    assert code == 0
    rec = record_from(out)
    assert float(rec["input_energy"]) > 0.0
    assert float(rec["ledger_residual"]) < 1e-8
    assert rec["boundary_contaminated"] == "false"
    for name in ("summary.txt", "trace.csv", "populations.csv", "manifest.toml"):
        assert (out_dir / name).exists(), name
    assert not (out_dir / "power_trace.svg").exists()


def test_flag_misuse_reports_configuration_errors(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "memory", "--preset", "nope", "--out", str(tmp_path / "x")
    )
    assert code == 2
    message = json.loads(err)["message"]
    assert "unknown preset" in message
    for name in ("fig4a", "fig4c", "fig5", "fig6b", "fig6d"):
        assert name in message
    code, _, err = run_cli(
        capsys,
        "memory", "--preset", "fig4a", "--config", "x.toml",
        "--out", str(tmp_path / "y"),
    )
    assert "mutually exclusive" in json.loads(err)["message"]
    assert code == 2
    code, _, err = run_cli(
        capsys, "memory", "--set", "nonsense", "--out", str(tmp_path / "z")
    )
    assert code == 2
    assert "--set needs" in json.loads(err)["message"]

"""Write/store/read light-storage protocols and their scoring.

Two protocol variants are supported, differing in how the stored packet is
held and released.

* "preset_echo" (single auxiliary cavity): phase plateaus 0, +pi/2, -pi/2,
  -pi.  The two opposite-sign holds cancel each other's accumulated
  dispersion, and the -pi plateau reverses the write so the packet exits
  after a fixed total delay write_time + 2 * hold_time.
* "on_demand" (two auxiliary cavities): plateaus 0, pi/2, pi.  At pi/2 the
  effective coupling kappa*cos(phi) vanishes, freezing the packet for as
  long as desired; pi negates the coupling and releases it, giving delay
  write_time + hold_time.

`run_memory` integrates a plan and reduces the trajectory to efficiency,
conditional fidelity, measured delay, and design flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import correlate, correlation_lags

from .dynamics import Scenario, Trajectory, auto_extent, integrate
from .errors import ConfigurationError
from .lattice import (
    InputPulse,
    LatticeConfig,
    LossModel,
    PhaseSchedule,
    PhaseSegment,
)

__all__ = [
    "PRESET_ECHO",
    "ON_DEMAND",
    "MemoryPlan",
    "MemoryReport",
    "DesignCheck",
    "build_schedule",
    "run_memory",
    "check_design",
    "gaussian_input",
    "suggest_lattice",
    "effective_width",
    "report_record",
    "report_to_text",
]

PRESET_ECHO = "preset_echo"
ON_DEMAND = "on_demand"

# Population threshold (relative to the run's peak) below which a site does
# not count toward the peak OAM excursion.
_OAM_FLOOR = 1e-6

# Stored energy left at t_end, relative to the run's peak, above which the
# read-out window is considered too short.
_RESIDUAL_LIMIT = 1e-4

# Relative change of collected read-out energy between window extensions
# below which the window counts as converged even if lossy remnants keep
# the stored residual above _RESIDUAL_LIMIT.
_WINDOW_CONVERGED = 1e-6


@dataclass(frozen=True)
class MemoryPlan:
    """Timing of one write/store/read cycle.

    hold_time is the duration of each of the two opposite-phase holds for
    "preset_echo", and the single freeze duration for "on_demand".  The
    read plateau lasts readout_time (defaults to write_time, the minimum
    for full re-emission).  Ramps of length `ramp` smooth every plateau
    transition; `ramp = 0` switches instantaneously.
    """

    variant: str
    write_time: float
    hold_time: float
    # Each transition ramp is centered on its nominal switch time: plateau
    # n ends ramp/2 before the boundary, plateau n+1 begins ramp/2 after.
    # Centering keeps the nominal boundary at the phase midpoint, which is
    # what preserves the storage-time accounting when ramps are slow: the
    # distance lost decelerating into a hold is regained accelerating out.
    ramp: float = 0.0
    readout_time: float | None = None
    interpolation: str = "raised_cosine"

    def __post_init__(self):
        if self.variant not in (PRESET_ECHO, ON_DEMAND):
            raise ConfigurationError(
                f"unknown memory variant {self.variant!r}; "
                f"expected {PRESET_ECHO!r} or {ON_DEMAND!r}"
            )
        if not self.write_time > 0:
            raise ConfigurationError("write_time must be > 0")
        if not self.hold_time > 0:
            raise ConfigurationError("hold_time must be > 0")
        if self.ramp < 0:
            raise ConfigurationError("ramp must be >= 0")
        if self.readout_time is not None and not self.readout_time > 0:
            raise ConfigurationError("readout_time must be > 0")
        shortest = min(self.write_time, self.hold_time, self.readout)
        if self.ramp >= shortest:
            raise ConfigurationError(
                f"ramp {self.ramp:g} overlaps a plateau: every plateau "
                f"must outlast the ramp (shortest is {shortest:g})"
            )

    @property
    def readout(self) -> float:
        return self.write_time if self.readout_time is None else self.readout_time

    @property
    def storage_time(self) -> float:
        """Nominal delay between input and recovered pulse centers."""
        if self.variant == PRESET_ECHO:
            return self.write_time + 2.0 * self.hold_time
        return self.write_time + self.hold_time

    @property
    def read_start(self) -> float:
        """Nominal read-out time; the release ramp is centered here."""
        if self.variant == PRESET_ECHO:
            return self.write_time + 2.0 * self.hold_time
        return self.write_time + self.hold_time

    def required_num_aux(self) -> int:
        return 1 if self.variant == PRESET_ECHO else 2


def build_schedule(plan: MemoryPlan) -> PhaseSchedule:
    """Phase schedule realizing the plan.

    preset_echo: 0 during write, then +pi/2 and -pi/2 for hold_time each,
    then -pi for read-out.  on_demand: 0, pi/2 (freeze), pi (release).
    """
    half = 0.5 * plan.ramp
    t1 = plan.write_time
    if plan.variant == PRESET_ECHO:
        segments = (
            PhaseSegment(0.0, 0.0, 0.0),
            PhaseSegment(t1 - half, math.pi / 2, plan.ramp),
            PhaseSegment(t1 + plan.hold_time - half, -math.pi / 2, plan.ramp),
            PhaseSegment(t1 + 2.0 * plan.hold_time - half, -math.pi, plan.ramp),
        )
    else:
        segments = (
            PhaseSegment(0.0, 0.0, 0.0),
            PhaseSegment(t1 - half, math.pi / 2, plan.ramp),
            PhaseSegment(t1 + plan.hold_time - half, math.pi, plan.ramp),
        )
    return PhaseSchedule(segments, interpolation=plan.interpolation)


def gaussian_input(
    kappa: float,
    write_time: float,
    width: float | None = None,
    scale: complex = 1.0,
    carrier: float = 0.0,
) -> InputPulse:
    """Gaussian pulse centered in the write window.

    The default width 2.5 / kappa fills the usable bandwidth while leaving
    more than six widths of margin inside a 20 / kappa write window.
    """
    if width is None:
        width = 2.5 / kappa
    return InputPulse(
        kind="gaussian",
        scale=scale,
        width=width,
        carrier=carrier,
        center=0.5 * write_time,
    )


def effective_width(pulse: InputPulse) -> float:
    """Gaussian-equivalent width t_p of a pulse.

    For sampled envelopes this is sqrt(2) times the intensity-weighted RMS
    spread, which reproduces `width` exactly for a Gaussian.
    """
    if pulse.kind == "gaussian":
        return pulse.width
    times = np.asarray(pulse.sample_times, dtype=float)
    weight = np.abs(np.asarray(pulse.sample_values, dtype=complex)) ** 2
    total = np.trapezoid(weight, times)
    if total <= 0:
        return 0.0
    mean = np.trapezoid(weight * times, times) / total
    var = np.trapezoid(weight * (times - mean) ** 2, times) / total
    return math.sqrt(2.0 * var)


def _transport_time(plan: MemoryPlan) -> float:
    """Duration over which the packet can actually move, for lattice sizing.

    Holds are excluded: on_demand freezes exactly, and the preset_echo
    holds park the critically coupled momenta at band extrema.  Dispersive
    spreading during the first echo hold (refocused by the second) is
    covered by adding one hold_time.
    """
    ramps = 3 if plan.variant == PRESET_ECHO else 2
    t = plan.write_time + plan.readout + ramps * plan.ramp
    if plan.variant == PRESET_ECHO:
        t += plan.hold_time
    return t


def suggest_lattice(
    plan: MemoryPlan,
    kappa: float,
    step_index: int = 1,
    omega0: float = 0.0,
    margin: int = 16,
) -> LatticeConfig:
    """Symmetric lattice large enough that the run stays boundary-free."""
    extent = auto_extent(kappa, _transport_time(plan), margin=margin)
    return LatticeConfig(
        kappa=kappa,
        j_min=-extent,
        j_max=extent,
        omega0=omega0,
        num_aux=plan.required_num_aux(),
        step_index=step_index,
    )


@dataclass(frozen=True)
class DesignCheck:
    """Protocol design conditions with their margins.

    bandwidth: 2 kappa write_time >= 12 pi (enough write bandwidth-time
    product); emission: max_oam / step_index >= 2 kappa write_time (lattice
    long enough for full re-emission); pulse: width >= 2.5 / kappa (pulse
    spectrally inside the usable band).  Margins are value minus bound.
    """

    bandwidth_ok: bool
    bandwidth_margin: float
    emission_ok: bool
    emission_margin: float
    pulse_ok: bool
    pulse_margin: float

    @property
    def all_ok(self) -> bool:
        return self.bandwidth_ok and self.emission_ok and self.pulse_ok


def check_design(
    kappa: float,
    write_time: float,
    max_oam: float,
    step_index: int = 1,
    pulse_width: float | None = None,
) -> DesignCheck:
    """Evaluate the three protocol design conditions."""
    if kappa <= 0 or write_time <= 0 or max_oam <= 0 or step_index <= 0:
        raise ConfigurationError("design-check arguments must be positive")
    product = 2.0 * kappa * write_time
    bandwidth_margin = product - 12.0 * math.pi
    reach = max_oam / step_index
    emission_margin = reach - product
    if pulse_width is None:
        pulse_margin = math.nan
        pulse_ok = True
    else:
        pulse_margin = pulse_width - 2.5 / kappa
        pulse_ok = pulse_margin >= 0.0
    return DesignCheck(
        bandwidth_ok=bandwidth_margin >= 0.0,
        bandwidth_margin=bandwidth_margin,
        emission_ok=emission_margin >= 0.0,
        emission_margin=emission_margin,
        pulse_ok=pulse_ok,
        pulse_margin=pulse_margin,
    )


@dataclass
class MemoryReport:
    """Scores of one memory run.

    efficiency is the read-window output energy over the injected energy;
    fidelity the modulus-squared cross-correlation peak between the
    windowed output and the input, normalized so a perfect shape copy at
    any delay and carrier phase scores 1; delay the correlation-peak lag.
    echo_mismatch and freeze_drift hold the protocol-specific population
    invariants (nan when not applicable to the variant).
    """

    plan: MemoryPlan
    efficiency: float
    fidelity: float
    delay: float
    ideal_delay: float
    peak_oam: int
    input_energy: float
    output_energy: float
    read_start: float
    read_end: float
    echo_mismatch: float
    freeze_drift: float
    residual_fraction: float
    readout_complete: bool
    boundary_contaminated: bool
    design: DesignCheck
    trajectory: Trajectory = field(repr=False, compare=False)

    @property
    def valid(self) -> bool:
        return self.readout_complete and not self.boundary_contaminated


def _step_of(t: float, dt: float) -> int:
    return int(round(t / dt))


def _snapshot(traj: Trajectory, step: int) -> np.ndarray:
    idx = np.searchsorted(traj.snapshot_steps, step)
    if idx == len(traj.snapshot_steps) or traj.snapshot_steps[idx] != step:
        raise ValueError(f"no snapshot stored at step {step}")
    return traj.populations[idx]


def _population_mismatch(traj: Trajectory, step_ref: int, step_t: int) -> float:
    ref = _snapshot(traj, step_ref)
    cur = _snapshot(traj, step_t)
    total = float(ref.sum())
    if total <= 0:
        return 0.0
    return float(np.abs(cur - ref).sum()) / total


def run_memory(
    plan: MemoryPlan,
    lattice: LatticeConfig,
    losses: LossModel,
    pulse: InputPulse,
    dt: float | None = None,
    rotating_frame: bool = True,
) -> MemoryReport:
    """Integrate one write/store/read cycle and score it.

    The input pulse must arrive essentially inside the write window (99.9%
    of its energy before write_time); the lattice must carry the variant's
    auxiliary-cavity count and a driven port.
    """
    if lattice.num_aux != plan.required_num_aux():
        raise ConfigurationError(
            f"variant {plan.variant!r} needs num_aux = "
            f"{plan.required_num_aux()}, lattice has {lattice.num_aux}"
        )
    if losses.port_rate <= 0:
        raise ConfigurationError("memory runs need a driven port (port_rate > 0)")
    total = pulse.energy()
    if total <= 0:
        raise ConfigurationError("input pulse carries no energy")
    contained = pulse.energy_within(0.0, plan.write_time) / total
    if contained < 0.999:
        raise ConfigurationError(
            f"only {contained:.4%} of the pulse energy falls inside the "
            f"write window [0, {plan.write_time:g}]; recenter or shorten it"
        )

    schedule = build_schedule(plan)
    read_start = plan.read_start
    step = dt if dt is not None else 1e-3 / lattice.kappa

    boundaries = [seg.start for seg in schedule.segments[1:]]
    boundaries += [seg.start + seg.ramp for seg in schedule.segments[1:] if seg.ramp]

    readout = plan.readout
    attempts = 4 if plan.readout_time is None else 1
    traj = None
    prev_output = None
    readout_complete = False
    for _ in range(attempts):
        # the release ramp is centered on read_start; the read plateau
        # proper runs for `readout` after the ramp completes
        t_end = read_start + 0.5 * plan.ramp + readout
        extra = sorted(
            {_step_of(b, step) for b in boundaries if b <= t_end}
        )
        scenario = Scenario(
            lattice=lattice,
            losses=losses,
            schedule=schedule,
            input=pulse,
            t_end=t_end,
            dt=step,
            rotating_frame=rotating_frame,
            snapshot_steps_extra=tuple(extra),
        )
        traj = integrate(scenario)
        peak = float(traj.stored.max(initial=0.0))
        residual = float(traj.stored[-1]) / peak if peak > 0 else 0.0
        output_energy = traj.window_energy("output", read_start, traj.times[-1])
        if residual < _RESIDUAL_LIMIT:
            readout_complete = True
            break
        # With intrinsic losses the residual can be energy that will only
        # dissipate, never re-emit; the window is still done once growing
        # it no longer moves the collected output.
        if prev_output is not None and abs(
            output_energy - prev_output
        ) < _WINDOW_CONVERGED * max(output_energy, 1e-300):
            readout_complete = True
            break
        prev_output = output_energy
        readout *= 2.0
    read_end = traj.times[-1]

    input_energy = float(traj.cum_input[-1])
    efficiency = output_energy / input_energy if input_energy > 0 else 0.0

    window = traj.times >= read_start
    windowed_out = np.where(window, traj.e_out, 0.0)
    out_norm = float(np.vdot(windowed_out, windowed_out).real)
    in_norm = float(np.vdot(traj.e_in, traj.e_in).real)
    if out_norm > 0 and in_norm > 0:
        corr = correlate(windowed_out, traj.e_in, mode="full", method="fft")
        lags = correlation_lags(len(windowed_out), len(traj.e_in), mode="full")
        best = int(np.argmax(np.abs(corr)))
        fidelity = float(np.abs(corr[best]) ** 2 / (out_norm * in_norm))
        delay = float(lags[best]) * traj.dt
    else:
        fidelity = 0.0
        delay = math.nan

    pops = traj.populations
    peak_pop = float(pops.max(initial=0.0))
    if peak_pop > 0:
        reached = (pops > _OAM_FLOOR * peak_pop).any(axis=0)
        peak_oam = int(
            np.max(np.abs(traj.sites[reached])) * lattice.step_index
        ) if reached.any() else 0
    else:
        peak_oam = 0

    echo_mismatch = math.nan
    freeze_drift = math.nan
    half = 0.5 * plan.ramp
    # Population checkpoints sit on the plateau edges (ramps are centered
    # on the nominal boundaries), where the packet is at rest.
    if plan.variant == PRESET_ECHO:
        echo_mismatch = _population_mismatch(
            traj,
            _step_of(plan.write_time + half, step),
            _step_of(read_start - half, step),
        )
    else:
        hold_ref = _step_of(plan.write_time + half, step)
        hold_end = _step_of(plan.write_time + plan.hold_time - half, step)
        drift = 0.0
        for s in traj.snapshot_steps:
            if hold_ref <= s <= hold_end:
                drift = max(drift, _population_mismatch(traj, hold_ref, int(s)))
        freeze_drift = drift

    design = check_design(
        lattice.kappa,
        plan.write_time,
        max_oam=lattice.max_oam,
        step_index=lattice.step_index,
        pulse_width=effective_width(pulse),
    )

    return MemoryReport(
        plan=plan,
        efficiency=efficiency,
        fidelity=fidelity,
        delay=delay,
        ideal_delay=plan.storage_time,
        peak_oam=peak_oam,
        input_energy=input_energy,
        output_energy=output_energy,
        read_start=read_start,
        read_end=float(read_end),
        echo_mismatch=echo_mismatch,
        freeze_drift=freeze_drift,
        residual_fraction=residual,
        readout_complete=readout_complete,
        boundary_contaminated=traj.boundary_contaminated,
        design=design,
        trajectory=traj,
    )


def report_record(report: MemoryReport) -> dict[str, object]:
    """Flatten a report to one row of plain scalars (sweep CSV order)."""
    plan = report.plan
    design = report.design
    return {
        "variant": plan.variant,
        "write_time": plan.write_time,
        "hold_time": plan.hold_time,
        "ramp": plan.ramp,
        "efficiency": report.efficiency,
        "fidelity": report.fidelity,
        "delay": report.delay,
        "ideal_delay": report.ideal_delay,
        "delay_error": report.delay - report.ideal_delay,
        "peak_oam": report.peak_oam,
        "input_energy": report.input_energy,
        "output_energy": report.output_energy,
        "echo_mismatch": report.echo_mismatch,
        "freeze_drift": report.freeze_drift,
        "residual_fraction": report.residual_fraction,
        "readout_complete": report.readout_complete,
        "boundary_contaminated": report.boundary_contaminated,
        "bandwidth_ok": design.bandwidth_ok,
        "bandwidth_margin": design.bandwidth_margin,
        "emission_ok": design.emission_ok,
        "emission_margin": design.emission_margin,
        "pulse_ok": design.pulse_ok,
        "pulse_margin": design.pulse_margin,
    }


def report_to_text(report: MemoryReport) -> str:
    """Flat key = value rendering of a report."""
    lines = []
    for key, value in report_record(report).items():
        if isinstance(value, float):
            lines.append(f"{key} = {value:.10g}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"

"""Data model of the synthetic OAM lattice.

A degenerate cavity hosts orbital-angular-momentum modes l = j * step_index
that act as the sites j of a one-dimensional tight-binding chain.  An
auxiliary cavity provides nearest-neighbour tunneling of strength ``kappa``
whose phase imbalance ``phi`` acts as a tunable Peierls phase, and a pinhole
couples site j = 0 to the external input/output field at rate ``port_rate``.

This module holds the immutable configuration types (lattice geometry,
phase schedules, loss models, input pulses) and the pure assembly functions
used by both the time-domain integrator and the frequency-domain solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError

__all__ = [
    "LatticeConfig",
    "PhaseSegment",
    "PhaseSchedule",
    "LossModel",
    "InputPulse",
    "phase_at",
    "hopping_amplitudes",
    "coupling_matrix",
    "loss_rate",
    "loss_vector",
]


@dataclass(frozen=True)
class LatticeConfig:
    """Geometry and couplings of the synthetic lattice.

    Parameters
    ----------
    kappa : float
        Tunneling rate between neighbouring sites (rad/time), > 0.
    j_min, j_max : int
        Inclusive site range.  Site 0 carries the port, so the range must
        bracket it.
    omega0 : float
        Common resonance frequency of the degenerate modes (rad/time).
    num_aux : int
        Number of auxiliary coupling cavities.  With 1 the hopping carries
        the full Peierls phase; with 2 the arms carry opposite imbalances
        (strength kappa/2 each) and the net hopping is kappa*cos(phi), real.
    step_index : int
        OAM step per site: site j represents the mode with l = j*step_index.
    """

    kappa: float
    j_min: int
    j_max: int
    omega0: float = 0.0
    num_aux: int = 1
    step_index: int = 1

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be > 0, got {self.kappa}")
        if not (self.j_min <= 0 <= self.j_max):
            raise ConfigurationError(
                f"site range [{self.j_min}, {self.j_max}] must contain the port site 0"
            )
        if self.num_aux not in (1, 2):
            raise ConfigurationError(f"num_aux must be 1 or 2, got {self.num_aux}")
        if self.step_index < 1:
            raise ConfigurationError(f"step_index must be >= 1, got {self.step_index}")

    @property
    def n_sites(self) -> int:
        return self.j_max - self.j_min + 1

    @property
    def sites(self) -> NDArray[np.int64]:
        """Site indices j_min..j_max as an array."""
        return np.arange(self.j_min, self.j_max + 1)

    @property
    def port_index(self) -> int:
        """Position of site j=0 within the amplitude array."""
        return -self.j_min

    @property
    def max_oam(self) -> int:
        """Largest |l| representable on this lattice."""
        return max(self.j_max, -self.j_min) * self.step_index


@dataclass(frozen=True)
class PhaseSegment:
    """One step of a phase program: ramp to `phase` starting at `start`.

    The ramp takes `ramp` time units; afterwards the value plateaus until
    the next segment begins.
    """

    start: float
    phase: float
    ramp: float = 0.0


@dataclass(frozen=True)
class PhaseSchedule:
    """Piecewise-smooth profile of the phase imbalance phi(t).

    Segments must be ordered strictly by start time and may not overlap:
    each ramp has to finish before the next segment starts.  Before the
    first segment the schedule evaluates to that segment's phase (the first
    segment defines the initial plateau; its own ramp field is ignored).

    `interpolation` selects the ramp shape: "raised_cosine" (default, C1
    smooth) or "linear".
    """

    segments: tuple[PhaseSegment, ...]
    interpolation: str = "raised_cosine"

    def __post_init__(self):
        if self.interpolation not in ("raised_cosine", "linear"):
            raise ConfigurationError(
                f"unknown ramp interpolation {self.interpolation!r}"
            )
        segs = self.segments
        for s in segs:
            if s.ramp < 0:
                raise ConfigurationError("ramp durations must be >= 0")
        for a, b in zip(segs, segs[1:]):
            if not (a.start < b.start):
                raise ConfigurationError(
                    "schedule segments must be strictly ordered by start time"
                )
            if b.start < a.start + a.ramp:
                raise ConfigurationError(
                    f"ramp starting at t={a.start} (duration {a.ramp}) overlaps "
                    f"the segment at t={b.start}"
                )

    @property
    def end_of_last_ramp(self) -> float:
        s = self.segments[-1]
        return s.start + s.ramp


def phase_at(schedule: PhaseSchedule, t):
    """Evaluate the phase imbalance phi at time(s) `t`.

    Within a ramp the value interpolates from the previous segment's phase
    to the current target; on a plateau it is constant.  Accepts a scalar
    or an array and matches the input shape.
    """
    segs = schedule.segments
    if not segs:
        raise ConfigurationError("phase schedule has no segments")
    starts = np.array([s.start for s in segs])
    targets = np.array([s.phase for s in segs])
    ramps = np.array([s.ramp for s in segs])
    prev = np.concatenate(([targets[0]], targets[:-1]))
    ramps = ramps.copy()
    ramps[0] = 0.0  # the first segment is the initial plateau

    tt = np.asarray(t, dtype=float)
    k = np.searchsorted(starts, tt, side="right") - 1
    k = np.maximum(k, 0)
    d = ramps[k]
    safe_d = np.where(d > 0, d, 1.0)
    frac = np.clip((tt - starts[k]) / safe_d, 0.0, 1.0)
    frac = np.where(d > 0, frac, 1.0)
    # before the first segment: force the initial plateau value
    frac = np.where(tt < starts[0], 0.0, frac)
    if schedule.interpolation == "raised_cosine":
        w = 0.5 * (1.0 - np.cos(np.pi * frac))
    else:
        w = frac
    out = prev[k] + (targets[k] - prev[k]) * w
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LossModel:
    """Per-site loss rates plus the external port coupling.

    The intrinsic (non-recoverable) loss at site j is parameterized as

        gamma_j = site0_extra * delta_{j,0}
                  + exp_amplitude * exp(-|j| / exp_range)
                  + uniform

    which covers both an isolated absorber at the port site and smooth
    profiles that decay away from it.  `port_rate` is the coupling of site 0
    to the input/output field; energy leaving through it is recovered in the
    output field rather than dissipated.  `override`, if given, replaces the
    intrinsic rate at the listed sites.

    ``loss_rate``/``loss_vector`` report the total rate (intrinsic plus
    port) that enters the equations of motion.
    """

    port_rate: float = 0.0
    site0_extra: float = 0.0
    exp_amplitude: float = 0.0
    exp_range: float = 1.0
    uniform: float = 0.0
    override: Mapping[int, float] | None = None

    def __post_init__(self):
        for name in ("port_rate", "site0_extra", "exp_amplitude", "uniform"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        if not self.exp_range > 0:
            raise ConfigurationError("exp_range must be > 0")
        if self.override:
            bad = [j for j, g in self.override.items() if g < 0]
            if bad:
                raise ConfigurationError(f"negative override rates at sites {bad}")

    def intrinsic_rate(self, j) -> np.ndarray | float:
        """Intrinsic loss rate at site(s) j, excluding the port."""
        jj = np.asarray(j)
        g = self.exp_amplitude * np.exp(-np.abs(jj) / self.exp_range) + self.uniform
        g = g + np.where(jj == 0, self.site0_extra, 0.0)
        if self.override:
            g = np.asarray(g, dtype=float)
            flat = np.atleast_1d(g)
            jflat = np.atleast_1d(jj)
            for site, rate in self.override.items():
                flat[jflat == site] = rate
            g = flat.reshape(np.shape(jj))
        if np.isscalar(j):
            return float(g)
        return g


def loss_rate(model: LossModel, j: int, lattice: LatticeConfig | None = None) -> float:
    """Total loss rate gamma_j at site j, port contribution included.

    If `lattice` is given, j is checked against its site range.
    """
    if lattice is not None and not (lattice.j_min <= j <= lattice.j_max):
        raise IndexError(
            f"site {j} outside lattice range [{lattice.j_min}, {lattice.j_max}]"
        )
    g = model.intrinsic_rate(j)
    if j == 0:
        g += model.port_rate
    return float(g)


def loss_vector(model: LossModel, lattice: LatticeConfig) -> NDArray[np.float64]:
    """Total gamma_j over the whole lattice, in site order."""
    g = np.asarray(model.intrinsic_rate(lattice.sites), dtype=float).copy()
    g[lattice.port_index] += model.port_rate
    return g


def hopping_amplitudes(config: LatticeConfig, phase):
    """Coefficients of a_{j+1} and a_{j-1} in the coupling structure.

    Returns the pair (up, down): `up` multiplies the neighbour above
    (super-diagonal of the coupling matrix), `down` the one below.  For a
    single auxiliary cavity these are kappa*e^{-i phi} and its conjugate;
    with two opposed arms the phase terms average to kappa*cos(phi), real.
    `phase` may be a scalar or array.
    """
    phi = np.asarray(phase, dtype=float)
    if config.num_aux == 1:
        up = config.kappa * np.exp(-1j * phi)
        down = np.conj(up)
    else:
        up = config.kappa * np.cos(phi) + 0.0j
        down = up
    return up, down


def coupling_matrix(
    config: LatticeConfig, phase: float, losses: LossModel | None = None
) -> NDArray[np.complex128]:
    """Assemble the tridiagonal coupling matrix at a fixed phase.

    The diagonal is omega0, shifted to omega0 - i*gamma_j/2 when a loss
    model is supplied.  Off-diagonals follow `hopping_amplitudes`; with all
    losses absent the matrix is exactly Hermitian.
    """
    n = config.n_sites
    diag = np.full(n, config.omega0, dtype=complex)
    if losses is not None:
        diag -= 0.5j * loss_vector(losses, config)
    up, down = hopping_amplitudes(config, phase)
    h = np.diag(diag)
    if n > 1:
        off = np.arange(n - 1)
        h[off, off + 1] = up
        h[off + 1, off] = down
    return h


@dataclass(frozen=True)
class InputPulse:
    """Drive field applied at the port site.

    Two envelope kinds are supported.  "gaussian" evaluates to

        scale * exp(-(t - center)^2 / (2 width^2) - i carrier t)

    and "samples" interpolates user-supplied complex baseband samples
    linearly (zero outside the sampled window), multiplied by the same
    carrier factor.

    Attributes
    ----------
    width : float
        Gaussian width t_p: the amplitude standard deviation, so the
        intensity falls to 1/e at t - center = t_p.
    carrier : float
        Carrier frequency omega_c (rad/time).  Integrators working in a
        rotating frame pass their frame frequency to `evaluate`, which
        keeps only the detuning.
    """

    kind: str = "gaussian"
    scale: complex = 1.0
    width: float = 1.0
    carrier: float = 0.0
    center: float = 0.0
    sample_times: tuple[float, ...] | None = None
    sample_values: tuple[complex, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "samples"):
            raise ConfigurationError(f"unknown pulse kind {self.kind!r}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ConfigurationError("gaussian pulse width must be > 0")
        if self.kind == "samples":
            if self.sample_times is None or self.sample_values is None:
                raise ConfigurationError("sampled pulse needs times and values")
            if len(self.sample_times) != len(self.sample_values):
                raise ConfigurationError("sample arrays differ in length")
            dt = np.diff(np.asarray(self.sample_times, dtype=float))
            if len(dt) and not np.all(dt > 0):
                raise ConfigurationError("sample times must increase strictly")

    def evaluate(self, t, frame_frequency: float = 0.0):
        """Complex field at time(s) t, in the frame rotating at `frame_frequency`."""
        tt = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            env = self.scale * np.exp(-((tt - self.center) ** 2) / (2.0 * self.width**2))
        else:
            times = np.asarray(self.sample_times, dtype=float)
            vals = np.asarray(self.sample_values, dtype=complex)
            env = np.interp(tt, times, vals.real, left=0.0, right=0.0) + 1j * np.interp(
                tt, times, vals.imag, left=0.0, right=0.0
            )
            env = self.scale * env
        detuning = self.carrier - frame_frequency
        out = env * np.exp(-1j * detuning * tt)
        if np.isscalar(t) or np.ndim(t) == 0:
            return complex(out)
        return out

    def energy(self) -> float:
        """L2 norm squared of the field, integrated over all time."""
        if self.kind == "gaussian":
            return abs(self.scale) ** 2 * self.width * math.sqrt(math.pi)
        # evaluate() interpolates the complex samples linearly, so |field|^2
        # is quadratic on each interval and integrates in closed form
        dt = np.diff(np.asarray(self.sample_times, dtype=float))
        vals = np.asarray(self.sample_values, dtype=complex) * self.scale
        a, b = vals[:-1], vals[1:]
        seg = (np.abs(a) ** 2 + np.abs(b) ** 2 + (a * np.conj(b)).real) / 3.0
        return float(np.sum(dt * seg))

    def energy_within(self, t0: float, t1: float) -> float:
        """Energy arriving inside the window [t0, t1]."""
        if self.kind == "gaussian":
            a = abs(self.scale) ** 2 * self.width * math.sqrt(math.pi) / 2.0
            return a * (
                math.erf((t1 - self.center) / self.width)
                - math.erf((t0 - self.center) / self.width)
            )
        grid = np.linspace(t0, t1, 4097)
        return float(np.trapezoid(np.abs(self.evaluate(grid)) ** 2, grid))

"""Band structure and frequency-domain port response.

Closed-form dispersion and group velocity of the tight-binding chain, and
the reflection spectrum f(omega) of the port obtained from a resolvent
solve on a finite lattice that is grown automatically until converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_banded

from .errors import BandRangeError, ConfigurationError, ConvergenceError
from .lattice import LatticeConfig, LossModel, hopping_amplitudes, loss_vector

__all__ = [
    "BandPoint",
    "ResponseCurve",
    "dispersion",
    "group_velocity",
    "group_velocity_at_frequency",
    "band_points",
    "default_frequency_grid",
    "filter_response",
    "response_to_csv",
]

# Uniform imaginary shift applied when the lattice carries no intrinsic loss
# at all, so that in-band resolvent solves stay well conditioned. Small
# enough to move f(omega) by ~1e-9 at most.
_LOSSLESS_REGULARIZATION = 1e-9


def dispersion(K, phase: float, kappa: float, omega0: float = 0.0, num_aux: int = 1):
    """Band frequency omega(K) of the infinite lattice.

    One auxiliary cavity gives omega0 - 2 kappa cos(K - phase); two opposed
    arms give omega0 - 2 kappa cos(phase) cos(K), whose width collapses to
    zero at phase = pi/2.  `K` may be a scalar or array (first Brillouin
    zone, (-pi, pi]).
    """
    KK = np.asarray(K, dtype=float)
    if num_aux == 1:
        w = omega0 - 2.0 * kappa * np.cos(KK - phase)
    elif num_aux == 2:
        w = omega0 - 2.0 * kappa * math.cos(phase) * np.cos(KK)
    else:
        raise ConfigurationError(f"num_aux must be 1 or 2, got {num_aux}")
    if np.isscalar(K) or np.ndim(K) == 0:
        return float(w)
    return w


def group_velocity(K, phase: float, kappa: float, num_aux: int = 1):
    """Signed group velocity d(omega)/dK in sites per unit time."""
    KK = np.asarray(K, dtype=float)
    if num_aux == 1:
        v = 2.0 * kappa * np.sin(KK - phase)
    elif num_aux == 2:
        v = 2.0 * kappa * math.cos(phase) * np.sin(KK)
    else:
        raise ConfigurationError(f"num_aux must be 1 or 2, got {num_aux}")
    if np.isscalar(K) or np.ndim(K) == 0:
        return float(v)
    return v


def group_velocity_at_frequency(
    omega: float,
    kappa: float,
    omega0: float = 0.0,
    num_aux: int = 1,
    phase: float = 0.0,
) -> float:
    """Magnitude of the group velocity at a given band frequency.

    Inverting the dispersion gives |v_g| = sqrt((2 k_eff)^2 - (omega -
    omega0)^2) with k_eff = kappa for one auxiliary cavity and
    kappa*|cos(phase)| for two.

    Raises
    ------
    BandRangeError
        If `omega` lies outside the propagating band.
    """
    if num_aux == 1:
        k_eff = kappa
    elif num_aux == 2:
        k_eff = kappa * abs(math.cos(phase))
    else:
        raise ConfigurationError(f"num_aux must be 1 or 2, got {num_aux}")
    detuning = omega - omega0
    half_width = 2.0 * k_eff
    if abs(detuning) > half_width:
        raise BandRangeError(
            f"frequency offset {detuning:g} outside the band (half-width {half_width:g})"
        )
    return math.sqrt(half_width**2 - detuning**2)


@dataclass(frozen=True)
class BandPoint:
    """One point of the dispersion relation."""

    K: float
    omega: float
    v_g: float


def band_points(
    config: LatticeConfig, phase: float, n_points: int = 256
) -> list[BandPoint]:
    """Sample the band over the first Brillouin zone (-pi, pi]."""
    K = -np.pi + 2.0 * np.pi * np.arange(1, n_points + 1) / n_points
    w = dispersion(K, phase, config.kappa, config.omega0, config.num_aux)
    v = group_velocity(K, phase, config.kappa, config.num_aux)
    return [BandPoint(float(k), float(wi), float(vi)) for k, wi, vi in zip(K, w, v)]


@dataclass
class ResponseCurve:
    """Sampled port response f(omega) with solver metadata.

    `metadata` records the lattice extent actually used, the sup-norm
    change over the last size doubling, and whether a regularizing shift
    was applied.
    """

    frequencies: NDArray[np.float64]
    values: NDArray[np.float64]
    metadata: dict = field(default_factory=dict)

    def db(self) -> NDArray[np.float64]:
        """Response in decibels, floored to keep log10 finite."""
        return 10.0 * np.log10(np.maximum(self.values, 1e-300))


def default_frequency_grid(
    kappa: float, omega0: float = 0.0, points: int = 2001, span: float = 3.0
) -> NDArray[np.float64]:
    """Evenly spaced probe grid over omega0 +- span*kappa."""
    return omega0 + kappa * np.linspace(-span, span, points)


def _port_response_fixed(
    config: LatticeConfig,
    losses: LossModel,
    frequencies: NDArray[np.float64],
    extent: int,
    regularization: float,
) -> NDArray[np.float64]:
    """f(omega) on a symmetric lattice of the given half-extent."""
    work = LatticeConfig(
        kappa=config.kappa,
        j_min=-extent,
        j_max=extent,
        omega0=config.omega0,
        num_aux=config.num_aux,
        step_index=config.step_index,
    )
    n = work.n_sites
    center = work.port_index
    gamma = loss_vector(losses, work) + regularization
    up, down = hopping_amplitudes(work, 0.0)

    # (omega I - H + i diag(gamma)/2) x = e0, solved per frequency on the
    # tridiagonal band form. Only the main diagonal depends on omega.
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = -up
    ab[2, :-1] = -down
    base_diag = -config.omega0 + 0.5j * gamma
    rhs = np.zeros(n, dtype=complex)
    rhs[center] = 1.0

    out = np.empty(len(frequencies), dtype=float)
    gbar = losses.port_rate
    for i, w in enumerate(frequencies):
        ab[1, :] = w + base_diag
        x = solve_banded((1, 1), ab, rhs)
        g00 = -1j * gbar * x[center]
        out[i] = abs(1.0 + g00) ** 2
    return out


def filter_response(
    config: LatticeConfig,
    losses: LossModel,
    frequencies=None,
    *,
    convergence_tol: float = 1e-6,
    max_doublings: int = 10,
    auto_converge: bool = True,
) -> ResponseCurve:
    """Port power response f(omega) from a finite-lattice resolvent solve.

    For each probe frequency the linear system
    (omega I - H + i diag(gamma)/2) x = e0 is solved with H the lossless
    coupling matrix, and f = |1 - i port_rate x_0|^2.  The lattice is
    doubled until f changes by less than `convergence_tol` in sup norm;
    the converged extent and residual are reported in the metadata.  With
    `auto_converge` off, the extent of `config` is used as-is.

    Raises
    ------
    ConvergenceError
        If the response keeps changing after `max_doublings` doublings.
    """
    if frequencies is None:
        frequencies = default_frequency_grid(config.kappa, config.omega0)
    frequencies = np.asarray(frequencies, dtype=float)

    meta: dict = {"regularized": False}
    reg = 0.0
    intrinsic = np.asarray(losses.intrinsic_rate(config.sites), dtype=float)
    if np.min(intrinsic) <= 0.0:
        reg = _LOSSLESS_REGULARIZATION * config.kappa
        meta["regularized"] = True
        meta["note"] = (
            "lattice has sites with zero intrinsic loss; applied a uniform "
            f"imaginary shift {reg:g} to keep in-band solves well conditioned"
        )

    extent = max(8, config.j_max, -config.j_min)
    if not auto_converge:
        vals = _port_response_fixed(config, losses, frequencies, extent, reg)
        meta.update({"extent": extent, "sites": 2 * extent + 1, "doublings": 0,
                     "sup_delta": math.nan, "converged": None})
        return ResponseCurve(frequencies, vals, meta)

    vals = _port_response_fixed(config, losses, frequencies, extent, reg)
    for doubling in range(1, max_doublings + 1):
        extent2 = 2 * extent
        vals2 = _port_response_fixed(config, losses, frequencies, extent2, reg)
        delta = float(np.max(np.abs(vals2 - vals)))
        if delta < convergence_tol:
            meta.update(
                {
                    "extent": extent2,
                    "sites": 2 * extent2 + 1,
                    "doublings": doubling,
                    "sup_delta": delta,
                    "converged": True,
                }
            )
            return ResponseCurve(frequencies, vals2, meta)
        extent, vals = extent2, vals2
    raise ConvergenceError(
        f"port response not converged at half-extent {extent} "
        f"(last doubling moved f by {delta:g}); increase intrinsic loss or "
        f"retry with extent >= {4 * extent}",
        suggested_extent=4 * extent,
    )


def response_to_csv(curve: ResponseCurve, path) -> None:
    """Write (omega, f, dB) rows in full double precision."""
    db = curve.db()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("omega,f,f_db\n")
        for w, f, d in zip(curve.frequencies, curve.values, db):
            fh.write(f"{w:.17g},{f:.17g},{d:.17g}\n")

"""Laboratory-parameter mapping: cavity geometry to model rates.

All frequencies here are angular (rad/s).  Helpers convert to the
"2 pi x MHz" form used when quoting numbers, since mode spacings are what
a measurement shows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

__all__ = [
    "C_LIGHT",
    "CavitySpec",
    "free_spectral_range",
    "coupling_alpha",
    "tunneling_rate",
    "pulse_duration_estimate",
    "cycles_value",
    "format_angular",
]

C_LIGHT = 299_792_458.0  # m/s, exact


def free_spectral_range(length: float) -> float:
    """Angular FSR of a ring of total optical path `length` (meters)."""
    if not length > 0:
        raise ConfigurationError("cavity length must be > 0")
    return 2.0 * math.pi * C_LIGHT / length


def coupling_alpha(bs_reflectivity: float) -> float:
    """Per-round-trip coupling weight alpha = r^2 / (1 + t^2).

    `bs_reflectivity` is the beam-splitter power reflectivity r^2, with
    t^2 = 1 - r^2 transmitted.
    """
    if not 0.0 <= bs_reflectivity < 1.0:
        raise ConfigurationError("beam-splitter reflectivity must be in [0, 1)")
    return bs_reflectivity / (2.0 - bs_reflectivity)


def tunneling_rate(bs_reflectivity: float, fsr: float) -> float:
    """Mode-to-mode tunneling rate kappa = FSR * alpha (1 + alpha) / 2 pi."""
    if not fsr > 0:
        raise ConfigurationError("free spectral range must be > 0")
    alpha = coupling_alpha(bs_reflectivity)
    return fsr * alpha * (1.0 + alpha) / (2.0 * math.pi)


def pulse_duration_estimate(kappa: float) -> float:
    """Width of a pulse that fills the usable bandwidth, 2.5 / kappa."""
    if not kappa > 0:
        raise ConfigurationError("kappa must be > 0")
    return 2.5 / kappa


@dataclass(frozen=True)
class CavitySpec:
    """Geometry-level description of one cavity.

    length is the total optical path in meters; bs_reflectivity the power
    reflectivity r^2 of the beam splitter feeding the auxiliary arm.
    """

    length: float
    bs_reflectivity: float

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("cavity length must be > 0")
        if not 0.0 <= self.bs_reflectivity < 1.0:
            raise ConfigurationError("beam-splitter reflectivity must be in [0, 1)")

    @property
    def fsr(self) -> float:
        return free_spectral_range(self.length)

    @property
    def alpha(self) -> float:
        return coupling_alpha(self.bs_reflectivity)

    @property
    def kappa(self) -> float:
        return tunneling_rate(self.bs_reflectivity, self.fsr)

    @property
    def bandwidth(self) -> float:
        """Full lattice bandwidth 4 kappa (rad/s)."""
        return 4.0 * self.kappa


def cycles_value(omega: float) -> float:
    """Ordinary frequency in Hz for an angular frequency in rad/s."""
    return omega / (2.0 * math.pi)


def format_angular(omega: float) -> str:
    """Render an angular frequency as '2 pi x <value> <unit>'."""
    hz = cycles_value(omega)
    for unit, scale in (("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3)):
        if abs(hz) >= scale:
            return f"2 pi x {hz / scale:.4g} {unit}"
    return f"2 pi x {hz:.4g} Hz"

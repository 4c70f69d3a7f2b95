"""Exception hierarchy shared across the package."""

from __future__ import annotations


class OamLatticeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(OamLatticeError):
    """Invalid parameters, schedules, or config-file content.

    `details` optionally carries one message per offending key so a config
    with several typos is reported in a single pass.
    """

    def __init__(self, message: str, details: list[str] | None = None):
        super().__init__(message)
        self.details = details or []


class NumericalError(OamLatticeError):
    """A computation failed to meet its accuracy or stability contract."""


class IntegrationUnstableError(NumericalError):
    """Time step too large for the stiffest rate in the scenario."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ConvergenceError(NumericalError):
    """Lattice-size doubling did not converge; carries a size suggestion."""

    def __init__(self, message: str, suggested_extent: int):
        super().__init__(message)
        self.suggested_extent = suggested_extent


class BandRangeError(ConfigurationError):
    """Requested frequency lies outside the propagating band."""


class NoStopbandError(NumericalError):
    """Response curve has no stopband to measure."""

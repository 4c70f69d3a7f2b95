"""Photonic lattices in orbital-angular-momentum space.

A main cavity's OAM modes form a 1D tight-binding lattice whose hopping
phase and amplitude are set by auxiliary coupling cavities.  This package
integrates the driven-dissipative mode dynamics, builds the write/hold/read
phase protocols that store and recall a light pulse, evaluates stopband
filters built from critically coupled ports, and maps laboratory cavity
geometry onto the model rates.
"""

from .errors import (
    BandRangeError,
    ConfigurationError,
    ConvergenceError,
    IntegrationUnstableError,
    NoStopbandError,
    NumericalError,
    OamLatticeError,
)
from .lattice import (
    InputPulse,
    LatticeConfig,
    LossModel,
    PhaseSchedule,
    PhaseSegment,
)
from .spectrum import (
    BandPoint,
    ResponseCurve,
    band_points,
    default_frequency_grid,
    dispersion,
    filter_response,
    group_velocity,
    group_velocity_at_frequency,
    response_to_csv,
)
from .dynamics import (
    Scenario,
    Trajectory,
    auto_extent,
    derivative,
    integrate,
    output_field,
    population_to_csv,
    trajectory_to_csv,
)
from .memory import (
    ON_DEMAND,
    PRESET_ECHO,
    DesignCheck,
    MemoryPlan,
    MemoryReport,
    build_schedule,
    check_design,
    effective_width,
    gaussian_input,
    report_record,
    report_to_text,
    run_memory,
    suggest_lattice,
)
from .filters import (
    DesignResult,
    FilterMetrics,
    FilterStage,
    cascade_response,
    design_filter,
    filter_metrics,
    gamma_for_target,
    max_absorption_frequency,
    metrics_record,
    refined_metrics,
    stage_response,
)
from .physical import (
    C_LIGHT,
    CavitySpec,
    coupling_alpha,
    cycles_value,
    format_angular,
    free_spectral_range,
    pulse_duration_estimate,
    tunneling_rate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "OamLatticeError",
    "ConfigurationError",
    "NumericalError",
    "IntegrationUnstableError",
    "ConvergenceError",
    "BandRangeError",
    "NoStopbandError",
    # lattice
    "LatticeConfig",
    "PhaseSegment",
    "PhaseSchedule",
    "LossModel",
    "InputPulse",
    # spectrum
    "dispersion",
    "group_velocity",
    "group_velocity_at_frequency",
    "BandPoint",
    "band_points",
    "ResponseCurve",
    "default_frequency_grid",
    "filter_response",
    "response_to_csv",
    # dynamics
    "Scenario",
    "Trajectory",
    "auto_extent",
    "derivative",
    "integrate",
    "output_field",
    "trajectory_to_csv",
    "population_to_csv",
    # memory
    "PRESET_ECHO",
    "ON_DEMAND",
    "MemoryPlan",
    "MemoryReport",
    "DesignCheck",
    "build_schedule",
    "gaussian_input",
    "effective_width",
    "suggest_lattice",
    "check_design",
    "run_memory",
    "report_record",
    "report_to_text",
    # filters
    "FilterStage",
    "FilterMetrics",
    "DesignResult",
    "max_absorption_frequency",
    "gamma_for_target",
    "stage_response",
    "cascade_response",
    "filter_metrics",
    "refined_metrics",
    "design_filter",
    "metrics_record",
    # physical
    "C_LIGHT",
    "CavitySpec",
    "free_spectral_range",
    "coupling_alpha",
    "tunneling_rate",
    "pulse_duration_estimate",
    "cycles_value",
    "format_angular",
]

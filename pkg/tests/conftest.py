"""Shared fixtures: filter evaluations reused across test modules.

The refined stopband evaluations take a few seconds each, so they are
computed once per session and shared by the unit tests and the acceptance
suite.
"""

from __future__ import annotations

import pytest

from oamlattice import FilterStage, LossModel, gamma_for_target, refined_metrics

KAPPA = 1.0

# Absorber profile used by the reference stopband runs: a smooth dip of
# intrinsic loss around the port plus a uniform floor, both 0.1 kappa.
FILTER_INTRINSIC = LossModel(
    exp_amplitude=0.1 * KAPPA, exp_range=1.0, uniform=0.1 * KAPPA
)

# Checklist lines collected by the acceptance suite; echoed after the run
# so they survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checklist")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def edge_stage() -> FilterStage:
    """Single stage with its absorption pair near the band edges."""
    return FilterStage(
        kappa=KAPPA,
        port_rate=gamma_for_target(-1.8 * KAPPA, KAPPA),
        losses=FILTER_INTRINSIC,
    )


def staggered_stages() -> tuple[FilterStage, FilterStage]:
    """Edge stage plus a second one filling the center hump."""
    return (
        edge_stage(),
        FilterStage(
            kappa=KAPPA,
            port_rate=gamma_for_target(-1.1 * KAPPA, KAPPA),
            losses=FILTER_INTRINSIC,
        ),
    )


@pytest.fixture(scope="session")
def edge_stage_result():
    return refined_metrics([edge_stage()])


@pytest.fixture(scope="session")
def staggered_cascade_result():
    return refined_metrics(staggered_stages())

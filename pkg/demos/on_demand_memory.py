"""Freeze-and-release storage with two auxiliary cavities per site.

With two auxiliary loops the hopping amplitude is kappa*cos(phase), so a
quarter-turn phase stops transport completely instead of reversing it.
The release time is then a free choice: this script stores the same pulse
for three different hold times and shows that the recovered pulse does
not care how long it was parked.
"""

import os

import numpy as np

from oamlattice import LossModel, MemoryPlan, gaussian_input, run_memory, suggest_lattice
from oamlattice.svgplot import line_plot

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

KAPPA = 1.0
WRITE = 20.0
RAMP = 0.5

series = []
print("hold    efficiency   fidelity     delay    freeze drift")
for hold in (5.0, 20.0, 60.0):
    plan = MemoryPlan(
        variant="on_demand", write_time=WRITE, hold_time=hold, ramp=RAMP
    )
    lattice = suggest_lattice(plan, KAPPA)
    pulse = gaussian_input(KAPPA, WRITE)
    report = run_memory(plan, lattice, LossModel(port_rate=4.0), pulse, dt=4e-3)
    print(
        "%4g    %.8f   %.8f   %6.2f   %.2e"
        % (
            hold,
            report.efficiency,
            report.fidelity,
            report.delay,
            report.freeze_drift,
        )
    )
    traj = report.trajectory
    peak = np.max(np.abs(traj.e_in) ** 2)
    series.append(
        (traj.times, np.abs(traj.e_out) ** 2 / peak, f"hold {hold:g}")
    )

# All three outputs are the same pulse, shifted by the hold time; the
# release is triggered by the phase step back to zero, not by an echo.
line_plot(
    os.path.join(OUT, "on_demand_release.svg"),
    series,
    xlabel="time (1/kappa)",
    ylabel="output power (input peak = 1)",
    title="release on demand: identical pulses, chosen delays",
)
print(f"artifacts in {OUT}")

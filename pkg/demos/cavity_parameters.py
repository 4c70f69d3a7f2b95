"""From bench geometry to model rates.

The abstract model runs in units of the tunneling rate kappa.  This maps
it back to hardware: a degenerate cavity of length L with an internal
beam splitter of power reflectivity r^2 couples neighboring orbital
angular momentum modes at a rate set by the free spectral range and the
splitting ratio.
"""

from oamlattice import CavitySpec, format_angular, pulse_duration_estimate

print("length   r^2     alpha    kappa             4 kappa           pulse")
for length in (0.3, 0.45, 0.6):
    for r2 in (0.25, 0.5):
        spec = CavitySpec(length=length, bs_reflectivity=r2)
        print(
            "%.2f m  %.2f   %.4f   %-16s  %-16s  %5.1f ns"
            % (
                length,
                r2,
                spec.alpha,
                format_angular(spec.kappa),
                format_angular(spec.bandwidth),
                pulse_duration_estimate(spec.kappa) * 1e9,
            )
        )

# The usable band is 4 kappa wide; a quarter-reflectivity splitter in a
# 30-60 cm cavity lands it between 2 pi x 50 MHz and 2 pi x 110 MHz,
# comfortable for microsecond-scale storage experiments.
spec = CavitySpec(length=0.3, bs_reflectivity=0.25)
print()
print(f"reference point: alpha = {spec.alpha:.6f} (= 1/7 at r^2 = 1/4)")
print(f"free spectral range {format_angular(spec.fsr)}")
print(f"matched gaussian width {pulse_duration_estimate(spec.kappa) * 1e9:.2f} ns")

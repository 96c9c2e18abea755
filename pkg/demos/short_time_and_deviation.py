"""Early-time structure: the universal t^2 law and the departure estimate.

Every chain starts as K = b_1^2 t^2 + c_4 t^4 + c_6 t^6 + ..., with c_4 and
c_6 fixed by the first three coefficients alone. The deviation time

    tau_d = sqrt(|4 c_4| / |6 c_6|)

estimates where the quartic correction stops being a small perturbation on
the quadratic one; for chaotic-spectrum chains this is also roughly where
the growth rate peels away from the 2 b_1 dK budget. The script checks the
residual exponent numerically, then overlays tau_d on a GOE ratio curve.
"""

import numpy as np

from kbound import (
    complexity_profile,
    deviation_time,
    evolve_amplitudes,
    goe_sample,
    run_lanczos,
    short_time_coefficients,
    uniform_observable,
)

rng = np.random.default_rng(8)

# Residual after subtracting c_2 t^2 + c_4 t^4 must fall off as t^6.
b = rng.uniform(0.5, 2.5, size=10)
c2, c4 = short_time_coefficients(b[0], b[1])
grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e-1, 25)])
prof = complexity_profile(evolve_amplitudes(b, grid))
residual = np.abs(prof.complexity[1:] - c2 * grid[1:] ** 2 - c4 * grid[1:] ** 4)
slope = np.polyfit(np.log(grid[1:]), np.log(residual), 1)[0]
print(f"c_2 = {c2:.4f}, c_4 = {c4:+.4f}")
print(f"log-log residual slope over [1e-3, 1e-1]: {slope:.3f} (expect ~6)")

# One chaotic example: tau_d against the observed ratio curve.
H = goe_sample(24, 1.0, seed=5)
res = run_lanczos(H, uniform_observable(H), store_basis=False)
tau = deviation_time(res.b[0], res.b[1], res.b[2])
tgrid = np.linspace(0.0, 3.0, 301)
gprof = complexity_profile(evolve_amplitudes(res.b, tgrid))
print(f"\nGOE d=24: D = {res.D}, b_1 = {res.b[0]:.3f}, tau_d = {tau:.3f}")
for frac, label in ((0.5, "tau_d/2"), (1.0, "tau_d"), (2.0, "2 tau_d"),
                    (4.0, "4 tau_d")):
    k = int(np.argmin(np.abs(tgrid - frac * tau)))
    print(f"  ratio at {label:7s} (t = {tgrid[k]:.2f}): {gprof.ratio[k]:.4f}")

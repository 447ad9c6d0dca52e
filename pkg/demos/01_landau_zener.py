# Linear sweep through an avoided crossing, compared with 1 - exp(-2 pi gamma).
#
# Run: python3 demos/01_landau_zener.py

import math

from vibron_ratchet.experiments import lz_half_window, lz_sweep_run, lz_validation_sweep
from vibron_ratchet.landau_zener import LinearSweep, lz_transition_probability

# one sweep in detail: |u - v| = 1, gamma = 0.25
gamma = 0.25
sweep = LinearSweep.for_gamma(gamma)
traj = lz_sweep_run(gamma)
print(f"gamma = {gamma}: J = {sweep.coupling_J:.3f}, window = +-{lz_half_window(gamma):.1f}")
print(f"  rho22 at the end        {traj.rho22[-1]:.6f}")
print(f"  analytic 1 - P          {lz_transition_probability(sweep.params):.6f}")
print(f"  max norm drift          {traj.max_norm_error:.1e}")

# population is transferred within a few J / |u - v| of the crossing at t = 0
for t in (-20.0, -5.0, 0.0, 5.0, 20.0):
    i = abs(traj.times - t).argmin()
    print(f"  t = {traj.times[i]:7.2f}   rho22 = {traj.rho22[i]:.4f}")

# the whole validation grid
print()
print(" gamma   numeric   analytic   rel. error")
for row in lz_validation_sweep():
    print(f" {row.gamma:5.2f}   {row.p_numeric:.5f}   {row.p_analytic:.5f}    {row.rel_error:.2%}")

# gamma = 1/(2 pi) gives exactly 1 - 1/e
print()
print("1 - 1/e =", 1 - math.exp(-1), "=", lz_transition_probability(LinearSweep.for_gamma(1 / (2 * math.pi)).params))

# Breaking the ratchet: a smaller vibron amplitude, a missing second vibron,
# and a single-vibron ratchet built from non-parallel couplings.
#
# Run: python3 demos/03_mutations_and_single_vibron.py

from vibron_ratchet.experiments import (
    mutation_experiment,
    nonparallel_model,
    optimal_regime_search,
    reference_model,
    reference_settings,
    single_vibron_nonparallel,
)
from vibron_ratchet.model import UNITS, wavenumber_to_omega

model = reference_model()
s = reference_settings()

res = mutation_experiment(model, s["perturbation"], None, s["threshold"], s["horizon_periods"])
print(f"h.v1 shrunk by {s['perturbation']:.1%}: margin {UNITS.to_wavenumber(res.margin_perturbed):.2f} cm^-1")
print(f"  p_direct  {res.p_direct_baseline:.4f} -> {res.p_direct_perturbed:.4f}")
print("vibron 2 removed:")
print(f"  p_direct  {res.p_direct_baseline:.4f} -> {res.p_direct_no_vibron2:.4f}")
print(f"  p_reverse {res.p_reverse_baseline:.4f} -> {res.p_reverse_no_vibron2:.4f}")

# amplitude scan across the solvability boundary h.v1 = h.q0 / 2 = 57.5 cm^-1
grid = [50.0, 56.0, 60.0, 70.0, 80.0, 87.44, 100.0, 120.0]
scan = optimal_regime_search(model, [wavenumber_to_omega(a) for a in grid], None, s["threshold"], s["horizon_periods"])
print("\n h.v1    p_direct  p_reverse  slope at 1st crossing (rad/fs^2)")
for a, g in zip(grid, scan.grid):
    slope = "-" if g["first_slope"] is None else f"{g['first_slope']:.2e}"
    print(f" {a:6.2f}  {g['p_direct']:.4f}    {g['p_reverse']:.4f}     {slope}")
print("largest irreversibility at h.v1 =", grid[scan.best_index[0]], "cm^-1")

# one vibron, h1 = (1, 0), h2 = (0, 1): only the h1 crossing is reachable
rep, accepted = single_vibron_nonparallel(nonparallel_model())
print(f"\nnon-parallel couplings: scenario accepted = {accepted}")
print(f"  p_direct = {rep.p_direct:.4f}, p_reverse = {rep.p_reverse:.4f}")

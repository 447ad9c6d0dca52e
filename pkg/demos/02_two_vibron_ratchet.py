# Direct and reverse moves on the frozen two-vibron reference configuration.
#
# Run: python3 demos/02_two_vibron_ratchet.py [out_dir]

import sys
from pathlib import Path

from vibron_ratchet.cli import write_trajectory
from vibron_ratchet.crossing import direct_crossing, reverse_crossing
from vibron_ratchet.experiments import energy_matching_check, ratchet_experiment, reference_model, reference_settings
from vibron_ratchet.model import UNITS

model = reference_model()
s = reference_settings()
p = model.h_projection()
cm = UNITS.to_wavenumber
print("reference configuration (cm^-1):")
print(f"  h.q0 = {cm(p['h_q0']):.2f}  h.v1 = {cm(p['h_v1']):.2f}  h.v2 = {cm(p['h_v2']):.2f}")
print(f"  J = {cm(model.coupling_J):.2f}  omega1 = {cm(model.vibron1.omega):.2f}  omega2 = {cm(model.vibron2.omega):.2f}")
print(f"  threshold {s['threshold']}, horizon {s['horizon_periods']} vibron-1 periods")

# the direct crossing exists: the vibron amplitude clears h.q0 / 2
dc = direct_crossing(model)
print(f"\ndirect crossing margin 2 h.v1 - h.q0 = {cm(dc.margin):.2f} cm^-1")
print("first crossings (fs):", ", ".join(f"{t:.1f}" for t in dc.crossing_times[:4]))

rep = ratchet_experiment(model, s["threshold"], s["horizon_periods"])
print(f"\nvibron 2 switched on at t2 = {rep.t2_detected:.2f} fs")
print(f"p_direct  = {rep.p_direct:.4f}   (last-period mean {rep.p_direct_mean:.4f})")
print(f"reverse move starts from |2> at t = {rep.reverse_start:.2f} fs")
print(f"p_reverse = {rep.p_reverse:.4f}   (last-period mean {rep.p_reverse_mean:.4f})")

# with vibron 2 on, h.(q1 + q2) stays positive: no reverse crossing in five slow periods
rc = reverse_crossing(model, rep.t2_detected)
print(f"reverse crossing solvable: {rc.solvable}, min of h.(q1 + q2) = {cm(rc.margin):.2f} cm^-1")

em = energy_matching_check(model)
print(f"\nadiabatic gap at t1 {cm(em.gap_at_t1):.1f} cm^-1 vs omega1 {cm(em.vibron_energy):.1f} cm^-1 "
      f"(mismatch {em.relative_mismatch:.1%})")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else None
if out is not None:
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(out / "direct.csv", rep.direct_trajectory)
    write_trajectory(out / "reverse.csv", rep.reverse_trajectory)
    print(f"trajectories written to {out}")

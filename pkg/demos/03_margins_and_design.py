# Gain/phase margins and the search for controllers hitting GM/PM targets.
import math

from fopi import BENCH_MOTOR, DesignSpec, PiLambdaController, compute_margins, derive_tf, design_search

g = derive_tf(BENCH_MOTOR)

fo = PiLambdaController(2.5732, 1.45204, 1.2)
print(compute_margins(fo, g).as_text())
# the phase of C*G never reaches -180 deg for this loop, so GM is infinite

spec = DesignSpec(gm_target_db=4.5, pm_target_deg=20.0, gm_tolerance_db=0.5, pm_tolerance_deg=2.0)
res = design_search(g, [1.0, 1.1, 1.2, 1.3, 1.4], spec)
for lam, n in res.status.items():
    print(f"lambda = {lam}: {n} candidates")

# candidates cluster at small negative kp: the only way to get a -180 deg crossing
# with 4.5 dB to spare on this overdamped plant
best = min(res.feasible(1.2), key=lambda c: spec.score(c.report))
print("best at lambda 1.2:", best.kp, best.ki, best.report.gain_margin_db, best.report.phase_margin_deg)
print("distance to the reference point:", math.hypot(best.kp - fo.kp, best.ki - fo.ki))

# Stabilizing (kp, ki) regions of the PI^lambda loop for a few lambdas.
import os

import numpy as np

from fopi import BENCH_MOTOR, Verdict, classify_point, derive_tf, global_regions, locus_point
from fopi import plots

out = os.environ.get("FOPI_OUT_DIR", ".")
g = derive_tf(BENCH_MOTOR)

# one boundary point: the gains that put a closed-loop root at s = j*0.5
kp, ki = locus_point(g, 1.2, 0.5)
print(f"boundary at w = 0.5, lambda = 1.2: kp = {kp:.4f}, ki = {ki:.4f}")

regions = global_regions(g, [0.8, 1.0, 1.2, 1.4])
for r in regions:
    x0, x1, y0, y1 = r.bounding_box()
    print(f"lambda = {r.lam}: area {r.shape.area:6.2f} in window, kp [{x0:.2f}, {x1:.2f}], ki [{y0:.2f}, {y1:.2f}]")

# the region is only a map; stability itself comes from the pole test
for pt in [(2.5732, 1.45204), (1.0, -1.0), (0.0, 0.0)]:
    print(pt, classify_point(g, 1.2, *pt).value)

# spot check the map against the pole test on random points
reg = regions[2]
pts = reg.sample(20, inside=True, seed=1) + reg.sample(20, inside=False, seed=2)
agree = [classify_point(g, 1.2, *p) is (Verdict.STABLE if reg.contains(*p) else Verdict.UNSTABLE) for p in pts]
print("agreement:", np.mean(agree))

plots.plot_regions(regions, os.path.join(out, "regions.svg"), marks=[("FO", (2.5732, 1.45204))])

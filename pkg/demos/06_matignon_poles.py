# Pole test of the fractional closed loop in the w = s^q plane.
import math
import os

import numpy as np

from fopi import BENCH_MOTOR, PiLambdaController, derive_tf, focq, is_stable, to_commensurate
from fopi import plots

out = os.environ.get("FOPI_OUT_DIR", ".")
g = derive_tf(BENCH_MOTOR)

p = focq(g, PiLambdaController(2.5732, 1.45204, 1.2))
print("characteristic quasipolynomial:", p)

# exponents 0, 1.2, 2.2, 3.2 are all multiples of q = 0.2
cp = to_commensurate(p)
print(f"q = {cp.q}, degree {cp.degree}")

v = is_stable(cp)
print("stable:", v.stable, " margin:", v.min_arg_margin, "rad")
print("sector edge q*pi/2 =", cp.q * math.pi / 2)
for r in sorted(v.roots, key=lambda z: abs(np.angle(z))):
    print(f"  w = {r.real:+.4f} {r.imag:+.4f}j   |arg| = {abs(np.angle(r)):.4f}")

# an unstable setting for contrast
print("kp = 1, ki = -1:", is_stable(to_commensurate(focq(g, PiLambdaController(1.0, -1.0, 1.2)))).stable)

plots.plot_poles(v, os.path.join(out, "poles.svg"))

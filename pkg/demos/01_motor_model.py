# Speed model of the bench DC motor from its physical parameters.
import numpy as np

from fopi import BENCH_MOTOR, derive_tf, tf_eval
from fopi.motor import raw_denominator

p = BENCH_MOTOR
print(p)

# (Js + B)(Ls + R) + K^2 before normalization
print("raw denominator (s^2, s, 1):", raw_denominator(p))

# divided through so the constant term is 1
g = derive_tf(p)
print("G(s) =", g)
print("DC gain:", g.dc_gain())

# the two real poles: a slow mechanical one and a fast electrical one
den = [g.den.coefficient(e) for e in (2, 1, 0)]
print("poles:", np.roots(den))

# frequency response at a few points
w = np.array([0.1, 0.73, 10.0, 1333.0])
for wi, gi in zip(w, tf_eval(g, w)):
    print(f"w = {wi:8.2f}  |G| = {abs(gi):.4f}  phase = {np.degrees(np.angle(gi)):7.2f} deg")

# Relay experiment on the simulated motor and Ziegler-Nichols PI tuning.
import os

from fopi import BENCH_MOTOR, RelayConfig, derive_tf, relay_experiment, zn_pi
from fopi import plots

out = os.environ.get("FOPI_OUT_DIR", ".")
g = derive_tf(BENCH_MOTOR)

# relay swings 0.5 +- 0.5 and switches at 0.7 (down) and 0.3 (up)
cfg = RelayConfig(h=0.5, switch_on=0.7, switch_off=0.3)
res = relay_experiment(g, cfg)
print(res.as_text())

c = zn_pi(res.ku, res.pu)
print(f"Ziegler-Nichols PI: {c.kp:.4f} + {c.ki:.4f}/s")

# a larger relay gives a larger oscillation; Ku should stay roughly put
big = relay_experiment(g, RelayConfig(h=1.0, switch_on=0.9, switch_off=0.1))
print(f"h = 1.0: a = {big.a:.4f}, Ku = {big.ku:.4f}")

plots.plot_relay(res, os.path.join(out, "relay.svg"))

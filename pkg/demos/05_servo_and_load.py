# Servo and load-disturbance runs of the FO and integer PI loops about 50 % speed.
import os

from fopi import BENCH_MOTOR, PiLambdaController, SimConfig, derive_tf, run_scenario_suite, simulate_closed_loop
from fopi import plots
from fopi.timesim import servo_config

out = os.environ.get("FOPI_OUT_DIR", ".")
g = derive_tf(BENCH_MOTOR)
fo = PiLambdaController(2.5732, 1.45204, 1.2)
io = PiLambdaController(1.431, 0.72, 1.0)

table = run_scenario_suite(g, fo, io, SimConfig(dt=1e-3, horizon=20.0))
print("step    ISE FO/IO        IAE FO/IO       rise FO/IO")
for s in (5.0, 10.0, 15.0, -5.0, -10.0, -15.0):
    f, i = table.get("FO", "servo", s), table.get("IO", "servo", s)
    print(f"{s:+5.0f}%  {f.ise:6.2f}/{i.ise:6.2f}   {f.iae:6.2f}/{i.iae:6.2f}   {f.rise_time_s:.2f}/{i.rise_time_s:.2f}")
for s in (2.0, -2.0):
    f, i = table.get("FO", "load", s), table.get("IO", "load", s)
    print(f"load {s:+.0f}%  ISE {f.ise:.3f}/{i.ise:.3f}  IAE {f.iae:.3f}/{i.iae:.3f}")

# ISE of a linear loop grows with the square of the step
print("ISE(+10%)/ISE(+5%):", table.get("FO", "servo", 10.0).ise / table.get("FO", "servo", 5.0).ise)

cfg = servo_config(SimConfig(), 5.0)
traces = {"FO": simulate_closed_loop(g, fo, cfg), "IO": simulate_closed_loop(g, io, cfg)}
plots.plot_traces(traces, os.path.join(out, "servo.svg"))
table.write_csv(os.path.join(out, "scenarios.csv"))

"""End-to-end acceptance checks for the bench motor.

Each test records one PASS/FAIL line in ``RESULTS``; conftest prints them as
a summary block at the end of the session.
"""
import math
import time
import timeit

import numpy as np
import pytest
from oracles import classical_pi_oracle

from fopi import BENCH_MOTOR, PiLambdaController, derive_tf
from fopi.locus import Verdict, build_region, classify_point, locus_point, characteristic_residual
from fopi.margins import DesignSpec, compute_margins, design_search
from fopi.matignon import is_stable, to_commensurate
from fopi.quasipoly import focq, tf_eval
from fopi.relay import RelayConfig, relay_experiment, ultimate_gain, zn_pi
from fopi.timesim import (
    LOAD_STEPS,
    SERVO_STEPS,
    SimConfig,
    fractional_integral,
    run_scenario_suite,
    servo_config,
    simulate_closed_loop,
)

G = derive_tf(BENCH_MOTOR)
FO = PiLambdaController(2.5732, 1.45204, 1.2)
IO = PiLambdaController(1.431, 0.72, 1.0)
DESIGN_LAMBDAS = [round(1.0 + 0.05 * k, 2) for k in range(9)]

RESULTS: dict[int, str] = {}


def record(n, title, checks):
    """``checks``: list of (ok, detail).  Records a line and asserts all."""
    ok = all(c for c, _ in checks)
    detail = "; ".join(d for _, d in checks)
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c01_model():
    a2, a1 = G.den.coefficient(2), G.den.coefficient(1)
    n0 = G.num.coefficient(0)
    per_call = min(timeit.repeat(lambda: derive_tf(BENCH_MOTOR), number=100, repeat=5)) / 100
    record(1, "model derivation", [
        (abs(n0 / 1.01 - 1) <= 5e-3, f"num {n0:.5g}"),
        (abs(a2 / 0.001025 - 1) <= 5e-3, f"s^2 {a2:.5g}"),
        (abs(a1 / 1.367 - 1) <= 5e-3, f"s {a1:.5g}"),
        (G.den.coefficient(0) == 1.0, "const 1"),
        (per_call < 1e-3, f"{per_call * 1e6:.0f} us"),
    ])


def test_c02_ultimate_gain():
    ku = ultimate_gain(0.5, 0.2)
    record(2, "ultimate gain", [(abs(ku - 3.1831) <= 0.005, f"Ku = {ku:.5f}")])


def test_c03_zn():
    c = zn_pi(3.18, 2.4)
    record(3, "Ziegler-Nichols PI", [
        (abs(c.kp - 1.431) <= 1e-3, f"kp = {c.kp:.5g}"),
        (abs(c.ki - 0.7155) <= 1e-3, f"ki = {c.ki:.5g}"),
        (c.lam == 1.0, "lambda 1"),
    ])


def test_c04_relay():
    res, dt = timed(lambda: relay_experiment(G, RelayConfig(h=0.5, switch_on=0.7, switch_off=0.3, dt=5e-4)))
    record(4, "relay experiment", [
        (0.15 <= res.a <= 0.25, f"a = {res.a:.4f}"),
        (2.0 <= res.pu <= 2.8, f"Pu = {res.pu:.4f} s"),
        (dt < 5.0, f"{dt:.2f} s"),
    ])


def test_c05_margins():
    rep, dt = timed(lambda: compute_margins(FO, G))
    record(5, "reference FO margins", [
        (4.3 <= rep.gain_margin_db <= 5.5, f"GM = {rep.gain_margin_db:.4g} dB"),
        (18.0 <= rep.phase_margin_deg <= 22.0, f"PM = {rep.phase_margin_deg:.4g} deg"),
        (dt < 1.0, f"{dt:.2f} s"),
    ])


def test_c06_design_window():
    res, dt = timed(lambda: design_search(G, DESIGN_LAMBDAS, DesignSpec(4.5, 20.0, 0.5, 2.0)))
    counts = {lam: len(res.feasible(lam)) for lam in DESIGN_LAMBDAS}
    record(6, "design window", [
        (counts[1.2] > 0, f"lambda 1.2: {counts[1.2]} feasible"),
        (counts[1.0] == 0, f"lambda 1.0: {counts[1.0]} feasible"),
        (counts[1.4] == 0, f"lambda 1.4: {counts[1.4]} feasible"),
        (dt < 120.0, f"{dt:.1f} s"),
    ])


def test_c07_matignon():
    def check():
        p = to_commensurate(focq(G, FO))
        return p, is_stable(p), is_stable(to_commensurate(focq(G, IO)))

    (p, v_fo, v_io), dt = timed(check)
    min_arg = float(np.min(np.abs(np.angle(v_fo.roots))))
    record(7, "stability certification", [
        (math.isclose(p.q, 0.2) and p.degree == 16, f"q = {p.q:g}, degree {p.degree}"),
        (v_fo.stable and min_arg > 0.1 * math.pi, f"FO stable, min |arg w| = {min_arg / math.pi:.4f} pi"),
        (v_io.stable and v_io.q == 1.0 and v_io.roots.size == 3, f"IO stable: {v_io.stable}"),
        (dt < 1.0, f"{dt:.3f} s"),
    ])


def test_c08_locus_consistency():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        w = 10 ** rng.uniform(-3, 3)
        lam = rng.uniform(0.05, 1.95)
        kp, ki = locus_point(G, lam, w)
        worst = max(worst, characteristic_residual(G, lam, w, kp, ki))
    dev = 0.0
    for w in np.logspace(-3, 3, 100):
        kp, ki = locus_point(G, 1.0, w)
        inv = 1.0 / tf_eval(G, w)
        kp0, ki0 = -inv.real, w * inv.imag
        dev = max(dev, abs(kp - kp0) / max(1.0, abs(kp0)), abs(ki - ki0) / max(1.0, abs(ki0)))
    record(8, "locus self-consistency", [
        (worst < 1e-9, f"max residual {worst:.2e}"),
        (dev < 1e-9, f"max classical deviation {dev:.2e}"),
    ])


def test_c09_region_oracle():
    region = build_region(G, 1.2)
    inside = region.sample(60, inside=True, buffer=0.02, seed=11)
    outside = region.sample(60, inside=False, buffer=0.02, seed=12)
    n_in = sum(classify_point(G, 1.2, *p) is Verdict.STABLE for p in inside)
    n_out = sum(classify_point(G, 1.2, *p) is Verdict.UNSTABLE for p in outside)
    record(9, "region/oracle agreement", [
        (len(inside) >= 50 and n_in == len(inside), f"{n_in}/{len(inside)} interior stable"),
        (len(outside) >= 50 and n_out == len(outside), f"{n_out}/{len(outside)} exterior unstable"),
    ])


def test_c10_gl_numerics():
    dt = 1e-3
    t = np.arange(1001) * dt
    one = np.ones_like(t)
    ramp_err = abs(fractional_integral(one, 1.0, dt)[-1] - 1.0)
    half = fractional_integral(one, 0.5, dt)[-1]
    half_err = abs(half / (2 * math.sqrt(1 / math.pi)) - 1)
    x = np.cos(3 * t) + t
    semi = fractional_integral(fractional_integral(x, 0.3, dt), 0.7, dt)[-1]
    full = fractional_integral(x, 1.0, dt)[-1]
    semi_err = abs(semi / full - 1)
    record(10, "GL numerics", [
        (ramp_err < 1e-3, f"ramp error {ramp_err:.1e}"),
        (half_err < 1e-2, f"order 0.5 rel error {half_err:.1e}"),
        (semi_err < 5e-3, f"semigroup rel error {semi_err:.1e}"),
    ])


@pytest.fixture(scope="module")
def suite():
    return timed(lambda: run_scenario_suite(G, FO, IO, SimConfig()))


def test_c11_servo_dominance(suite):
    table, dt = suite
    checks = []
    for s in SERVO_STEPS:
        f, i = table.get("FO", "servo", s), table.get("IO", "servo", s)
        ok = (f.ise < i.ise and f.iae < i.iae and f.rise_time_s is not None and i.rise_time_s is not None
              and f.rise_time_s < i.rise_time_s and f.settling_time_s is not None
              and (i.settling_time_s is None or f.settling_time_s < i.settling_time_s))
        checks.append((ok, f"{s:+g}%: ISE {f.ise:.3g}<{i.ise:.3g}"))
    ratio = table.get("FO", "servo", 10.0).ise / table.get("FO", "servo", 5.0).ise
    checks.append((3.2 <= ratio <= 4.8, f"ISE ratio {ratio:.3f}"))
    checks.append((dt < 30.0, f"{dt:.1f} s for servo+load suite"))
    record(11, "servo dominance", checks)


def test_c12_regulatory_dominance():
    table, dt = timed(lambda: run_scenario_suite(G, FO, IO, SimConfig(), servo_steps=()))
    checks = []
    for s in LOAD_STEPS:
        f, i = table.get("FO", "load", s), table.get("IO", "load", s)
        checks.append((f.ise < i.ise and f.iae < i.iae,
                       f"{s:+g}%: ISE {f.ise:.3g}<{i.ise:.3g}, IAE {f.iae:.3g}<{i.iae:.3g}"))
    checks.append((dt < 10.0, f"{dt:.1f} s"))
    record(12, "regulatory dominance", checks)


def test_c13_reduction_oracle():
    rng = np.random.default_rng(13)
    worst, n = 0.0, 0
    while n < 10:
        kp, ki = rng.uniform(0.1, 5.0), rng.uniform(0.05, 3.0)
        if classify_point(G, 1.0, kp, ki) is not Verdict.STABLE:
            continue
        cfg = servo_config(SimConfig(horizon=5.0), float(rng.choice([-10.0, 5.0, 15.0])))
        y = simulate_closed_loop(G, PiLambdaController(kp, ki, 1.0), cfg).y
        worst = max(worst, float(np.max(np.abs(y - classical_pi_oracle(G, kp, ki, cfg)))))
        n += 1
    record(13, "integer-order reduction", [(worst < 1e-6, f"max |dy| {worst:.2e} over {n} gain pairs")])

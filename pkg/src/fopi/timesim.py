"""Fixed-step closed-loop simulation of the motor under PI^lambda control.

The controller's fractional integral is a Grünwald-Letnikov convolution; the
integer-order plant is advanced with its exact zero-order-hold discretization.
All signals are in percent of span.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.signal import cont2discrete, tf2ss

from .errors import NonIntegerPlant, WindowOutOfRange
from .quasipoly import FractionalTransferFunction, PiLambdaController

Profile = Callable[[np.ndarray], np.ndarray]


def gl_weights(order: float, n: int) -> np.ndarray:
    """Grünwald-Letnikov weights ``(-1)^k binom(order, k)`` for k = 0..n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    w = np.empty(n + 1)
    w[0] = 1.0
    for k in range(1, n + 1):
        w[k] = w[k - 1] * (1.0 - (order + 1.0) / k)
    return w


def fractional_integral(x, lam: float, dt: float, memory: int | None = None) -> np.ndarray:
    """GL fractional integral of order ``lam`` of a uniformly sampled signal.

    Samples are read as right endpoints of their step (``x[k]`` holds on
    ``(t[k-1], t[k]]``), so ``x[0]`` carries no area and order 1 is the
    right-rectangle rule: ``y[n] = dt * sum(x[1:n+1])``.  ``memory`` keeps
    only that many most recent samples (short-memory principle); ``None``
    keeps the full history.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.zeros(n)
    if n < 2:
        return out
    span = n - 2 if memory is None else min(n - 2, int(memory) - 1)
    if span < 0:
        return out
    w = gl_weights(-lam, span)
    # y[k] = sum_{j<k} w[j] x[k-j]; weights past `span` are the memory cut
    out[1:] = np.convolve(x[1:], w)[: n - 1]
    return dt**lam * out


def step_profile(before: float, after: float, at: float = 0.0) -> Profile:
    """Piecewise-constant signal switching from ``before`` to ``after`` at time ``at``."""
    return lambda t: np.where(np.asarray(t) >= at, after, before)


def constant_profile(value: float) -> Profile:
    return lambda t: np.full(np.shape(t), float(value))


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``hold_initial`` adds a constant bias to the controller output equal to the
    input that keeps the plant at ``initial_output`` in steady state, so runs
    start from a resting operating point (e.g. 50 % speed).
    """

    dt: float = 1e-3
    horizon: float = 20.0
    gl_memory: int | None = None
    setpoint: Profile = field(default=constant_profile(50.0))
    disturbance: Profile = field(default=constant_profile(0.0))
    initial_output: float = 50.0
    hold_initial: bool = True
    saturation: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least one step")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt)) + 1

    def time(self) -> np.ndarray:
        return np.arange(self.steps) * self.dt


@dataclass
class SimTrace:
    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    u: np.ndarray
    e: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "r", "y", "u", "e"))
            for row in zip(self.t, self.r, self.y, self.u, self.e):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "SimTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(*(data[:, i].copy() for i in range(5)))


class DiscretePlant:
    """Exact ZOH discretization of an integer-order plant in state-space form."""

    def __init__(self, plant: FractionalTransferFunction, dt: float):
        if not plant.is_integer_order():
            raise NonIntegerPlant("time-domain simulation needs integer plant exponents")
        deg = int(round(plant.den.degree))
        den = [plant.den.coefficient(k) for k in range(deg, -1, -1)]
        num = [plant.num.coefficient(k) for k in range(deg, -1, -1)]
        self.order = deg
        self.dt = dt
        if deg == 0:
            self.Ad = np.zeros((0, 0))
            self.Bd = np.zeros((0, 1))
            self.C = np.zeros((1, 0))
            self.D = num[0] / den[0]
            self._A = self.Ad
            self._B = self.Bd
            return
        while len(num) > 1 and num[0] == 0.0:
            num = num[1:]
        A, B, C, D = tf2ss(num, den)
        Ad, Bd, _, _, _ = cont2discrete((A, B, C, D), dt, method="zoh")
        self._A, self._B = A, B
        self.Ad, self.Bd, self.C, self.D = Ad, Bd, C, float(D.squeeze())

    def rest_state(self, y0: float) -> tuple[np.ndarray, float]:
        """State at rest with output ``y0`` and the constant input that holds it."""
        if self.order == 0:
            return np.zeros(0), (y0 / self.D if self.D else 0.0)
        A, B, C = self._A, self._B, self.C
        # steady state x = -A^-1 B u gives y = (D - C A^-1 B) u
        try:
            xu = -np.linalg.solve(A, B[:, 0])
            gain = float((C @ xu)[0]) + self.D
        except np.linalg.LinAlgError:
            gain = 0.0
        if gain == 0.0:
            x, *_ = np.linalg.lstsq(C, np.array([y0]), rcond=None)
            return x, 0.0
        u = y0 / gain
        return xu * u, u

    def output(self, x: np.ndarray, u: float) -> float:
        return float((self.C @ x)[0]) + self.D * u if self.order else self.D * u

    def step(self, x: np.ndarray, u: float) -> np.ndarray:
        return self.Ad @ x + self.Bd[:, 0] * u


def simulate_closed_loop(
    plant: FractionalTransferFunction,
    controller: PiLambdaController,
    cfg: SimConfig = SimConfig(),
) -> SimTrace:
    """Unity-feedback loop ``u = bias + kp e + ki I^lam e``, load added at the plant input.

    The output at step n is read before the input of step n is applied, so
    the plant must be strictly proper.
    """
    if not plant.is_strictly_proper():
        raise ValueError("closed-loop simulation needs a strictly proper plant")
    dp = DiscretePlant(plant, cfg.dt)
    n = cfg.steps
    t = cfg.time()
    r = np.asarray(cfg.setpoint(t), dtype=float) * np.ones(n)
    d = np.asarray(cfg.disturbance(t), dtype=float) * np.ones(n)
    x, bias = dp.rest_state(cfg.initial_output)
    if not cfg.hold_initial:
        bias = 0.0
    lam, kp, ki = controller.lam, controller.kp, controller.ki
    span = n - 1 if cfg.gl_memory is None else min(n - 1, int(cfg.gl_memory))
    w = gl_weights(-lam, max(span - 1, 0))
    scale = cfg.dt**lam
    e_rev = np.zeros(n)  # e_rev[n-1-k] = e_k, so history reads as a forward slice
    y = np.empty(n)
    u = np.empty(n)
    e = np.empty(n)
    Ad, Bd, C = dp.Ad, dp.Bd[:, 0], dp.C[0] if dp.order else None
    sat = cfg.saturation
    for k in range(n):
        yk = float(C @ x) if dp.order else 0.0
        ek = r[k] - yk
        e_rev[n - 1 - k] = ek
        # same right-endpoint GL sum as fractional_integral: e_0 carries no area
        m = min(k, span)
        integ = scale * np.dot(w[:m], e_rev[n - 1 - k : n - 1 - k + m])
        uk = bias + kp * ek + ki * integ
        if sat is not None:
            uk = min(max(uk, sat[0]), sat[1])
        y[k], e[k], u[k] = yk, ek, uk
        x = Ad @ x + Bd * (uk + d[k])
    return SimTrace(t, r, y, u, e)


@dataclass(frozen=True)
class Metrics:
    ise: float
    iae: float
    rise_time_s: float | None
    settling_time_s: float | None


def compute_metrics(trace: SimTrace, window: tuple[float, float] | None = None, band: float = 0.02) -> Metrics:
    """ISE and IAE (rectangle rule) plus 10-90 % rise time and settling time.

    Rise and settling are measured from the window start relative to the
    setpoint change inside the window.  The settling band is ``band`` times
    the final setpoint value (times the step size when the setpoint ends at
    zero).  Settling time is ``None`` when the response never stays inside
    the band.
    """
    t = trace.t
    dt = trace.dt
    t0, t1 = (t[0], t[-1]) if window is None else window
    eps = 1e-9 * max(1.0, abs(t[-1]))
    if t0 < t[0] - eps or t1 > t[-1] + eps or t1 < t0:
        raise WindowOutOfRange(f"window [{t0}, {t1}] outside trace span [{t[0]}, {t[-1]}]")
    sel = (t >= t0 - eps) & (t <= t1 + eps)
    ts, e, y, r = t[sel], trace.e[sel], trace.y[sel], trace.r[sel]
    ise = float(np.sum(e**2) * dt)
    iae = float(np.sum(np.abs(e)) * dt)
    y0, r_final = y[0], r[-1]
    step = r_final - y0
    rise = None
    if step != 0:
        frac = (y - y0) / step
        i10 = np.nonzero(frac >= 0.1)[0]
        i90 = np.nonzero(frac >= 0.9)[0]
        if i10.size and i90.size:
            rise = float(ts[i90[0]] - ts[i10[0]])
    tol = band * (abs(r_final) if r_final != 0 else abs(step))
    outside = np.nonzero(np.abs(y - r_final) > tol)[0]
    if outside.size == 0:
        settle = 0.0
    elif outside[-1] == ts.size - 1:
        settle = None
    else:
        settle = float(ts[outside[-1] + 1] - ts[0])
    return Metrics(ise, iae, rise, settle)


SERVO_STEPS = (5.0, 10.0, 15.0, -5.0, -10.0, -15.0)
LOAD_STEPS = (2.0, -2.0)


def servo_config(base: SimConfig, step: float, at: float = 0.0) -> SimConfig:
    op = base.initial_output
    return replace(base, setpoint=step_profile(op, op + step, at), disturbance=constant_profile(0.0))


def load_config(base: SimConfig, step: float, at: float = 0.0) -> SimConfig:
    op = base.initial_output
    return replace(base, setpoint=constant_profile(op), disturbance=step_profile(0.0, step, at))


@dataclass
class ScenarioTable:
    """Servo and load metrics: ``rows[(controller, kind, step)] = Metrics``."""

    rows: dict[tuple[str, str, float], Metrics]
    errors: dict[tuple[str, str, float], Exception] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    def get(self, controller: str, kind: str, step: float) -> Metrics:
        return self.rows[(controller, kind, step)]

    def write_csv(self, path) -> None:
        """One row per (controller, kind, metric); step sizes as columns."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            kinds = [("servo", SERVO_STEPS), ("load", LOAD_STEPS)]
            for kind, steps in kinds:
                w.writerow(["controller", "scenario", "metric"] + [f"{s:+g}%" for s in steps])
                for name in sorted({k[0] for k in self.rows}):
                    for metric in ("ise", "iae", "rise_time_s", "settling_time_s"):
                        cells = []
                        for s in steps:
                            m = self.rows.get((name, kind, s))
                            v = None if m is None else getattr(m, metric)
                            cells.append("" if v is None else repr(v))
                        w.writerow([name, kind, metric] + cells)


def run_scenario_suite(
    plant: FractionalTransferFunction,
    fo: PiLambdaController,
    io: PiLambdaController,
    cfg_base: SimConfig = SimConfig(),
    servo_steps: Sequence[float] = SERVO_STEPS,
    load_steps: Sequence[float] = LOAD_STEPS,
) -> ScenarioTable:
    """Servo and load runs about the operating point for both controllers."""
    table = ScenarioTable({})
    for name, ctrl in (("FO", fo), ("IO", io)):
        for kind, steps, make in (("servo", servo_steps, servo_config), ("load", load_steps, load_config)):
            for s in steps:
                key = (name, kind, float(s))
                try:
                    trace = simulate_closed_loop(plant, ctrl, make(cfg_base, s))
                    table.rows[key] = compute_metrics(trace)
                except (ValueError, ArithmeticError, NonIntegerPlant) as exc:
                    table.errors[key] = exc
    return table

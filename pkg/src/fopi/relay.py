"""Relay-feedback experiment (in simulation) and Ziegler-Nichols PI tuning."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooShort, NoLimitCycle
from .quasipoly import FractionalTransferFunction, PiLambdaController
from .timesim import DiscretePlant

#: a period shorter than this many samples is chatter, not a limit cycle
MIN_SAMPLES_PER_PERIOD = 10
MEASURED_CYCLES = 3
PERIOD_SPREAD_TOL = 0.02


@dataclass(frozen=True)
class RelayConfig:
    """Hysteresis relay in normalized output units.

    The relay drives ``setpoint + h`` until the output rises above
    ``switch_on``, then ``setpoint - h`` until it falls below ``switch_off``.
    """

    h: float = 0.5
    switch_on: float = 0.7
    switch_off: float = 0.3
    setpoint: float = 0.5
    dt: float = 5e-4
    horizon: float = 30.0
    settle_cycles: int = 2

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("relay height h must be positive")
        if not self.switch_on > self.switch_off:
            raise ValueError("switch_on must exceed switch_off")
        if self.settle_cycles < 2:
            raise ValueError("settle_cycles must be >= 2")
        if not (self.dt > 0 and self.horizon > self.dt):
            raise ValueError("need 0 < dt < horizon")


@dataclass(frozen=True)
class RelayResult:
    a: float
    pu: float
    ku: float
    cycles_used: int
    t: np.ndarray
    y: np.ndarray
    relay_out: np.ndarray

    def as_text(self) -> str:
        return (f"a = {self.a!r}\npu = {self.pu!r}\nku = {self.ku!r}\n"
                f"cycles_used = {self.cycles_used}\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "y", "relay_out"))
            for row in zip(self.t, self.y, self.relay_out):
                w.writerow([repr(float(v)) for v in row])


def ultimate_gain(h: float, a: float) -> float:
    """Describing-function estimate ``4h / (pi a)``."""
    if not (h > 0 and a > 0):
        raise ValueError("h and a must be positive")
    return 4.0 * h / (math.pi * a)


def zn_pi(ku: float, pu: float) -> PiLambdaController:
    """Closed-loop Ziegler-Nichols PI: ``Kc = 0.45 Ku``, ``Ti = Pu / 1.2``."""
    if not (ku > 0 and pu > 0):
        raise ValueError("ku and pu must be positive")
    kc = 0.45 * ku
    ti = pu / 1.2
    return PiLambdaController(kc, kc / ti, 1.0)


def _run(plant: FractionalTransferFunction, cfg: RelayConfig):
    dp = DiscretePlant(plant, cfg.dt)
    n = int(round(cfg.horizon / cfg.dt)) + 1
    t = np.arange(n) * cfg.dt
    hi, lo = cfg.setpoint + cfg.h, cfg.setpoint - cfg.h
    x = np.zeros(dp.order)
    y = np.empty(n)
    out = np.empty(n)
    high = True
    u_prev = 0.0
    switches: list[tuple[float, bool]] = []  # (time, switched to high)
    for k in range(n):
        # direct feedthrough sees the previous relay level (one-sample measurement lag)
        yk = dp.output(x, u_prev)
        if high and yk > cfg.switch_on:
            high = False
            switches.append((_cross_time(t, y, k, yk, cfg.switch_on), False))
        elif not high and yk < cfg.switch_off:
            high = True
            switches.append((_cross_time(t, y, k, yk, cfg.switch_off), True))
        uk = hi if high else lo
        y[k], out[k] = yk, uk
        if dp.order:
            x = dp.step(x, uk)
        u_prev = uk
    return t, y, out, switches


def _cross_time(t, y, k, yk, level):
    if k == 0:
        return float(t[0])
    y0 = y[k - 1]
    if yk == y0:
        return float(t[k])
    return float(t[k - 1] + (level - y0) / (yk - y0) * (t[k] - t[k - 1]))


def relay_experiment(plant: FractionalTransferFunction, cfg: RelayConfig = RelayConfig()) -> RelayResult:
    """Run the relay loop and extract amplitude ``a`` and ultimate period ``Pu``.

    Cycles run from one switch-to-high to the next.  The first
    ``settle_cycles`` are discarded; at least three further cycles are needed
    and their periods must agree within 2 %.  ``a`` is half the peak-to-peak
    output per measured cycle, averaged.
    """
    t, y, out, switches = _run(plant, cfg)
    ups = [s for s, to_high in switches if to_high]
    need = cfg.settle_cycles + MEASURED_CYCLES + 1
    if len(switches) < 2:
        tail = y[int(0.9 * y.size):]
        if np.ptp(tail) > 1e-3 * max(1.0, float(np.max(np.abs(y)))):
            raise HorizonTooShort(
                f"output still moving after {cfg.horizon} s without completing a relay cycle"
            )
        raise NoLimitCycle("relay latched: the output never crossed both thresholds")
    periods = np.diff(ups)
    if periods.size and np.median(periods) < MIN_SAMPLES_PER_PERIOD * cfg.dt:
        raise NoLimitCycle("relay chatters at the sampling rate; no measurable period")
    if len(ups) < need:
        raise HorizonTooShort(
            f"only {max(len(ups) - 1, 0)} full cycles in {cfg.horizon} s; need {need - 1}"
        )
    measured = periods[cfg.settle_cycles:]
    last = measured[-MEASURED_CYCLES:]
    if (last.max() - last.min()) / last.mean() > PERIOD_SPREAD_TOL:
        raise NoLimitCycle(f"period not steady over the last cycles: {last}")
    amps = []
    edges = ups[cfg.settle_cycles:]
    for t0, t1 in zip(edges[:-1], edges[1:]):
        sel = (t >= t0) & (t < t1)
        amps.append(0.5 * np.ptp(y[sel]))
    a = float(np.mean(amps))
    if not a > 0:
        raise NoLimitCycle("zero oscillation amplitude")
    return RelayResult(
        a=a,
        pu=float(np.mean(measured)),
        ku=ultimate_gain(cfg.h, a),
        cycles_used=int(measured.size),
        t=t,
        y=y,
        relay_out=out,
    )

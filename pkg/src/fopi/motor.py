"""Armature-controlled DC motor: physical parameters to speed transfer function."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError, DegenerateModel
from .quasipoly import FractionalTransferFunction, QuasiPolynomial


@dataclass(frozen=True)
class MotorParams:
    """SI parameters of a separately excited DC motor (``K = Kb = KT``)."""

    J: float
    B: float
    K: float
    R: float
    L: float
    rated_speed: float = 1500.0  # rpm

    def __post_init__(self):
        for name in ("J", "B", "K", "R", "L", "rated_speed"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        for name in ("J", "K", "R", "rated_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        # B = 0 is physically degenerate but keeps a well-defined model when K > 0
        if self.B < 0:
            raise ValueError("B must be non-negative")
        if self.L < 0:
            raise ValueError("L must be non-negative")

    def rpm_to_percent(self, rpm: float) -> float:
        return 100.0 * rpm / self.rated_speed

    def percent_to_rpm(self, pct: float) -> float:
        return pct * self.rated_speed / 100.0


#: bench motor used throughout the examples and acceptance tests
BENCH_MOTOR = MotorParams(J=0.03, B=0.019, K=0.1331, R=6.0, L=4.5e-3, rated_speed=1500.0)


def raw_denominator(p: MotorParams) -> tuple[float, float, float]:
    """Coefficients ``(JL, JR + BL, BR + K^2)`` of ``(Js + B)(Ls + R) + K^2``."""
    return (p.J * p.L, p.J * p.R + p.B * p.L, p.B * p.R + p.K**2)


def dc_gain(p: MotorParams) -> float:
    return p.K / (p.B * p.R + p.K**2)


def derive_tf(p: MotorParams) -> FractionalTransferFunction:
    """Voltage-to-speed model ``K / ((Js + B)(Ls + R) + K^2)``.

    Numerator and denominator are divided by ``BR + K^2`` so the denominator's
    constant term is exactly 1.
    """
    a2, a1, a0 = raw_denominator(p)
    if abs(a0) < 1e-12:
        raise DegenerateModel("B*R + K^2 vanishes; cannot normalize")
    num = QuasiPolynomial([(p.K / a0, 0.0)])
    den = QuasiPolynomial([(1.0, 0.0), (a1 / a0, 1.0), (a2 / a0, 2.0)])
    return FractionalTransferFunction(num, den)


_KEYS = tuple(f.name for f in fields(MotorParams))


def parse_config(text: str, source: str = "<config>") -> MotorParams:
    """Parse ``key = value`` lines (``#`` comments allowed) into MotorParams."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: value for {key!r} is not a number: {val!r}") from None
    missing = [k for k in _KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing keys {', '.join(missing)}")
    try:
        return MotorParams(**values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> MotorParams:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))


def format_config(p: MotorParams) -> str:
    return "".join(f"{k} = {getattr(p, k)!r}\n" for k in _KEYS)

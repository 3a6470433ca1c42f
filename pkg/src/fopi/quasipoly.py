"""Fractional-order quasipolynomials, transfer functions and the PI^lambda controller.

A quasipolynomial is a finite sum ``sum_i c_i * s**a_i`` with real coefficients
and real, non-negative (possibly non-integer) exponents.  Everything here is
evaluated on the positive imaginary axis ``s = j*omega`` using the principal
branch ``(j*omega)**a = omega**a * exp(j*a*pi/2)``.

All objects are immutable; every function is pure.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DenominatorZero

#: exponents closer than this are merged into one term
EXPONENT_TOL = 1e-9
#: |D(j omega)| below this is treated as a zero of the denominator
DENOMINATOR_TOL = 1e-14

_TERM_RE = re.compile(r"([+-]?)(\d+\.?\d*(?:[eE][+-]?\d+)?|inf|nan)(?:\*s\^(\d+\.?\d*))?")
_UNIT_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite input: {v!r}")


def s_power_jw(alpha, omega):
    """Return ``(j*omega)**alpha`` on the principal branch.

    ``omega`` may be a scalar or an array and must be strictly positive.
    Integer exponents use exact powers of ``j`` so that ordinary polynomials
    evaluate without spurious ``cos(pi/2)`` residue.
    """
    _check_finite(alpha, omega)
    if alpha < 0:
        raise ValueError("exponent must be non-negative")
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("omega must be strictly positive")
    if float(alpha).is_integer():
        n = int(alpha)
        out = _UNIT_POWERS[n % 4] * w**n
    else:
        out = w**alpha * np.exp(1j * alpha * math.pi / 2)
    out = np.asarray(out, dtype=complex)
    return complex(out) if out.ndim == 0 else out


class QuasiPolynomial:
    """Immutable ``sum c_i s**a_i`` with strictly increasing exponents.

    Terms with (near-)equal exponents are merged by adding coefficients and
    zero coefficients are dropped, so the stored representation is canonical.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[tuple[float, float]] = ()):
        items = []
        for coeff, exp in terms:
            coeff, exp = float(coeff), float(exp)
            _check_finite(coeff, exp)
            if exp < 0:
                raise ValueError(f"negative exponent {exp}")
            items.append((exp, coeff))
        items.sort()
        merged: list[list[float]] = []
        for exp, coeff in items:
            if merged and abs(exp - merged[-1][0]) <= EXPONENT_TOL:
                merged[-1][1] += coeff
            else:
                merged.append([exp, coeff])
        self._terms = tuple((c, e) for e, c in merged if c != 0.0)

    @classmethod
    def from_poly(cls, coeffs_descending) -> "QuasiPolynomial":
        """Build from an ordinary polynomial in numpy ``polyval`` order."""
        coeffs = list(coeffs_descending)
        n = len(coeffs) - 1
        return cls((c, n - k) for k, c in enumerate(coeffs))

    @classmethod
    def parse(cls, text: str) -> "QuasiPolynomial":
        """Inverse of ``str()``: ``c*s^e`` terms joined by `` + `` / `` - ``."""
        compact = text.replace(" ", "")
        if compact == "0":
            return cls()
        pos, terms = 0, []
        for m in _TERM_RE.finditer(compact):
            if m.start() != pos:
                break
            sign = -1.0 if m.group(1) == "-" else 1.0
            exp = m.group(3)
            terms.append((sign * float(m.group(2)), float(exp) if exp else 0.0))
            pos = m.end()
        if pos != len(compact) or not terms:
            raise ValueError(f"cannot parse quasipolynomial {text!r}")
        return cls(terms)

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        """``(coeff, exponent)`` pairs, exponents ascending."""
        return self._terms

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self._terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([e for _, e in self._terms])

    @property
    def degree(self) -> float:
        return self._terms[-1][1] if self._terms else -math.inf

    def is_zero(self) -> bool:
        return not self._terms

    def is_integer_order(self) -> bool:
        return all(abs(e - round(e)) <= EXPONENT_TOL for _, e in self._terms)

    def coefficient(self, exponent: float) -> float:
        for c, e in self._terms:
            if abs(e - exponent) <= EXPONENT_TOL:
                return c
        return 0.0

    def shift(self, amount: float) -> "QuasiPolynomial":
        """Multiply by ``s**amount``."""
        return QuasiPolynomial((c, e + amount) for c, e in self._terms)

    def scale(self, k: float) -> "QuasiPolynomial":
        return QuasiPolynomial((k * c, e) for c, e in self._terms)

    def __add__(self, other: "QuasiPolynomial") -> "QuasiPolynomial":
        if not isinstance(other, QuasiPolynomial):
            return NotImplemented
        return QuasiPolynomial(self._terms + other._terms)

    def __neg__(self) -> "QuasiPolynomial":
        return self.scale(-1.0)

    def __sub__(self, other: "QuasiPolynomial") -> "QuasiPolynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, QuasiPolynomial):
            return QuasiPolynomial(
                (c1 * c2, e1 + e2) for c1, e1 in self._terms for c2, e2 in other._terms
            )
        if isinstance(other, (int, float)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuasiPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __call__(self, omega):
        return qp_eval(self, omega)

    def __repr__(self) -> str:
        return f"QuasiPolynomial({list(self._terms)!r})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for c, e in reversed(self._terms):
            parts.append(f"{c!r}*s^{e:.6f}")
        return " + ".join(parts).replace("+ -", "- ")


def qp_eval(p: QuasiPolynomial, omega):
    """Evaluate ``p(j*omega)``; ``omega`` scalar or array, strictly positive."""
    w = np.asarray(omega, dtype=float)
    total = np.zeros(w.shape, dtype=complex)
    if p.is_zero():
        _check_finite(w)
        if np.any(w <= 0):
            raise ValueError("omega must be strictly positive")
    for c, e in p.terms:
        total = total + c * s_power_jw(e, w)
    return complex(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class FractionalTransferFunction:
    """``G(s) = num(s) / den(s)`` with quasipolynomial numerator and denominator."""

    num: QuasiPolynomial
    den: QuasiPolynomial

    def __post_init__(self):
        if self.den.is_zero():
            raise ValueError("denominator has no terms")
        if not self.num.is_zero() and self.num.degree > self.den.degree + EXPONENT_TOL:
            raise ValueError("improper transfer function: deg num > deg den")

    @classmethod
    def from_poly(cls, num, den) -> "FractionalTransferFunction":
        return cls(QuasiPolynomial.from_poly(num), QuasiPolynomial.from_poly(den))

    def is_integer_order(self) -> bool:
        return self.num.is_integer_order() and self.den.is_integer_order()

    def is_strictly_proper(self) -> bool:
        return self.num.is_zero() or self.num.degree < self.den.degree - EXPONENT_TOL

    def dc_gain(self) -> float:
        """Limit of ``G(j*omega)`` as ``omega -> 0+`` (inf when den has no constant term)."""
        d0 = self.den.coefficient(0.0)
        n0 = self.num.coefficient(0.0)
        if d0 == 0.0:
            return math.inf if n0 else math.nan
        return n0 / d0

    def __call__(self, omega):
        return tf_eval(self, omega)

    def __str__(self) -> str:
        return f"({self.num})/({self.den})"


def tf_eval(g: FractionalTransferFunction, omega):
    n = qp_eval(g.num, omega)
    d = qp_eval(g.den, omega)
    if np.any(np.abs(d) < DENOMINATOR_TOL):
        raise DenominatorZero(f"|D(j omega)| < {DENOMINATOR_TOL} at omega={omega}")
    return n / d


@dataclass(frozen=True)
class PiLambdaController:
    """``C(s) = kp + ki / s**lam`` with integrator order ``lam`` in (0, 2).

    ``lam == 1`` is the ordinary PI controller.
    """

    kp: float
    ki: float
    lam: float = 1.0

    def __post_init__(self):
        _check_finite(self.kp, self.ki, self.lam)
        if not 0.0 < self.lam < 2.0:
            raise ValueError(
                f"lambda={self.lam} outside (0, 2): sin(lambda*pi/2) vanishes at the ends"
            )

    def __call__(self, omega):
        return controller_eval(self, omega)

    def as_tf(self) -> FractionalTransferFunction:
        """``(kp s^lam + ki) / s^lam``."""
        num = QuasiPolynomial([(self.kp, self.lam), (self.ki, 0.0)])
        return FractionalTransferFunction(num, QuasiPolynomial([(1.0, self.lam)]))


def controller_eval(c: PiLambdaController, omega):
    w = np.asarray(omega, dtype=float)
    _check_finite(w)
    if np.any(w <= 0):
        raise ValueError("omega must be strictly positive")
    if c.lam == 1.0:
        integ = 1.0 / (1j * w)
    else:
        integ = w ** (-c.lam) * np.exp(-1j * c.lam * math.pi / 2)
    out = c.kp + c.ki * integ
    return complex(out) if np.ndim(out) == 0 else out


def focq(g: FractionalTransferFunction, c: PiLambdaController) -> QuasiPolynomial:
    """Closed-loop characteristic quasipolynomial ``D s^lam + kp N s^lam + ki N``."""
    return (
        g.den.shift(c.lam)
        + g.num.shift(c.lam).scale(c.kp)
        + g.num.scale(c.ki)
    )

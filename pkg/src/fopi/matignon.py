"""Stability of commensurate-order characteristic equations (Matignon's criterion).

A quasipolynomial whose exponents are all integer multiples of a base order
``q`` becomes an ordinary polynomial in ``w = s**q``.  The fractional system is
stable iff every root ``w`` satisfies ``|arg w| > q*pi/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .errors import CommensurateApproximationError, ConvergenceFailure
from .quasipoly import QuasiPolynomial

DEFAULT_MAX_DENOMINATOR = 100
#: roots whose angular margin lies within this band are reported as boundary
BOUNDARY_BAND = 1e-6
_RATIONAL_TOL = 1e-9
_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class CommensuratePolynomial:
    """``sum_k coeffs[k] * w**k`` with ``w = s**q`` (ascending coefficients)."""

    q: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q={self.q} outside (0, 1]")
        if not self.coeffs or self.coeffs[-1] == 0.0:
            raise ValueError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    roots: np.ndarray
    min_arg_margin: float
    q: float

    @property
    def boundary(self) -> bool:
        """True when the closest root sits inside the numerical dead zone."""
        return abs(self.min_arg_margin) <= BOUNDARY_BAND


def _as_fraction(x: float, max_denominator: int) -> Fraction:
    f = Fraction(x).limit_denominator(max_denominator)
    if abs(float(f) - x) > _RATIONAL_TOL:
        raise CommensurateApproximationError(
            f"exponent {x!r} is not k/m with m <= {max_denominator}"
        )
    return f


def to_commensurate(
    p: QuasiPolynomial, max_denominator: int = DEFAULT_MAX_DENOMINATOR
) -> CommensuratePolynomial:
    """Rewrite ``p`` as a dense polynomial in ``w = s**q`` with the largest valid q <= 1."""
    if p.is_zero():
        raise ValueError("zero quasipolynomial has no commensurate form")
    fracs = [_as_fraction(e, max_denominator) for e in p.exponents]
    den = reduce(math.lcm, (f.denominator for f in fracs), 1)
    if den > max_denominator:
        raise CommensurateApproximationError(
            f"common denominator {den} exceeds {max_denominator}"
        )
    nums = [int(f * den) for f in fracs]
    g = reduce(math.gcd, nums, 0) or 1
    base = Fraction(g, den)
    if base > 1:
        base = base / math.ceil(base)
    ks = [int(f / base) for f in fracs]
    coeffs = np.zeros(max(ks) + 1)
    for k, c in zip(ks, p.coeffs):
        coeffs[k] += c
    return CommensuratePolynomial(q=float(base), coeffs=tuple(coeffs))


def _residual_ok(coeffs_desc: np.ndarray, r: complex) -> bool:
    n = len(coeffs_desc) - 1
    val = np.polyval(coeffs_desc, r)
    scale = 1.0 + np.max(np.abs(coeffs_desc)) * max(1.0, abs(r)) ** n
    return abs(val) / scale < _RESIDUAL_TOL


def poly_roots(p: CommensuratePolynomial) -> np.ndarray:
    """All roots of ``p`` in the w-plane.

    Companion-matrix eigenvalues (``numpy.roots``) followed by one Newton
    polish step; every root is checked against a scaled residual bound.
    """
    if p.degree < 1:
        raise ValueError("degree must be >= 1")
    desc = np.array(p.coeffs[::-1], dtype=float)
    roots = np.roots(desc).astype(complex)
    # numpy.roots drops trailing zero coefficients silently; restore those roots
    n_zero = p.degree - len(roots)
    dp = np.polyder(desc)
    polished = []
    for r in roots:
        d = np.polyval(dp, r)
        if d != 0:
            step = np.polyval(desc, r) / d
            cand = r - step
            if abs(np.polyval(desc, cand)) <= abs(np.polyval(desc, r)):
                r = cand
        polished.append(r)
    out = np.concatenate([np.array(polished, dtype=complex), np.zeros(n_zero, dtype=complex)])
    for r in out:
        if not _residual_ok(desc, r):
            raise ConvergenceFailure(f"root {r} fails residual bound")
    return out


def arg_margins(roots: np.ndarray, q: float) -> np.ndarray:
    """``|arg w| - q*pi/2`` per root; exact zeros get ``-q*pi/2`` (marginal)."""
    roots = np.asarray(roots, dtype=complex)
    margins = np.abs(np.angle(roots)) - q * math.pi / 2
    return np.where(roots == 0, -q * math.pi / 2, margins)


def is_stable(p: CommensuratePolynomial) -> StabilityVerdict:
    if p.degree == 0:
        return StabilityVerdict(True, np.zeros(0, dtype=complex), math.inf, p.q)
    roots = poly_roots(p)
    margins = arg_margins(roots, p.q)
    m = float(np.min(margins))
    return StabilityVerdict(stable=m > 0, roots=roots, min_arg_margin=m, q=p.q)


def quasi_is_stable(
    p: QuasiPolynomial, max_denominator: int = DEFAULT_MAX_DENOMINATOR
) -> StabilityVerdict:
    """Convenience: commensurate conversion followed by :func:`is_stable`."""
    return is_stable(to_commensurate(p, max_denominator))


def pole_table(verdict: StabilityVerdict) -> list[tuple[float, float, float, bool]]:
    """Rows ``(re, im, arg_deg, stable_flag)`` for export."""
    margins = arg_margins(verdict.roots, verdict.q)
    return [
        (float(r.real), float(r.imag), math.degrees(float(np.angle(r))), bool(m > 0))
        for r, m in zip(verdict.roots, margins)
    ]

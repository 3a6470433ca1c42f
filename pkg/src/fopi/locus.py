"""Stability boundary locus of the PI^lambda loop in the (kp, ki) plane.

For a fixed integrator order ``lam`` the closed-loop characteristic equation

    D(s) s^lam + kp N(s) s^lam + ki N(s) = 0

has a root at ``s = j*omega`` exactly when the real and imaginary parts vanish.
Both are linear in (kp, ki), so each frequency gives one boundary point by a
2x2 solve.  Sweeping omega traces the complex-root boundary; ``ki = 0`` is the
real-root (s = 0) boundary.  Stability of arbitrary points is always decided by
the Matignon test, never by the sampled curve.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, Point, box
from shapely.ops import polygonize, unary_union

from . import matignon
from .errors import EmptyCurve, SingularSystem
from .quasipoly import (
    FractionalTransferFunction,
    PiLambdaController,
    focq,
    s_power_jw,
)

DEFAULT_OMEGA_GRID = np.logspace(-3, 3, 2000)
#: (kp_min, kp_max, ki_min, ki_max) used to clip the open-ended regions
DEFAULT_WINDOW = (-2.0, 12.0, -2.0, 12.0)
RESIDUAL_TOL = 1e-9
_SINGULAR_TOL = 1e-12


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class LocusPoint:
    omega: float
    kp: float
    ki: float


@dataclass
class LocusCurve:
    lam: float
    points: list[LocusPoint]
    gaps: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def kp(self) -> np.ndarray:
        return np.array([p.kp for p in self.points])

    @property
    def ki(self) -> np.ndarray:
        return np.array([p.ki for p in self.points])


def _term_blocks(g: FractionalTransferFunction, lam: float, omega):
    """Values at j*omega of the three pieces multiplying 1, kp and ki, plus a term scale."""
    w = np.asarray(omega, dtype=float)
    d_part = np.zeros(w.shape, complex)
    kp_part = np.zeros(w.shape, complex)
    ki_part = np.zeros(w.shape, complex)
    scale = np.zeros(w.shape)
    for a, alpha in g.den.terms:
        v = a * s_power_jw(alpha + lam, w)
        d_part = d_part + v
        scale = np.maximum(scale, np.abs(v))
    for b, beta in g.num.terms:
        kp_part = kp_part + b * s_power_jw(beta + lam, w)
        ki_part = ki_part + b * s_power_jw(beta, w)
    return d_part, kp_part, ki_part, scale


def _solve(g, lam, omega):
    d, nk, ni, dscale = _term_blocks(g, lam, omega)
    det = nk.real * ni.imag - nk.imag * ni.real
    mag = np.abs(nk) * np.abs(ni)
    singular = (mag == 0) | (np.abs(det) < _SINGULAR_TOL * mag)
    safe = np.where(singular, 1.0, det)
    kp = (-d.real * ni.imag + d.imag * ni.real) / safe
    ki = (-nk.real * d.imag + nk.imag * d.real) / safe
    scale = np.maximum.reduce([dscale, np.abs(kp * nk), np.abs(ki * ni)])
    resid = np.abs(d + kp * nk + ki * ni) / (1.0 + scale)
    bad = singular | ~np.isfinite(kp) | ~np.isfinite(ki) | (resid >= RESIDUAL_TOL)
    return kp, ki, resid, bad


def characteristic_residual(g, lam, omega, kp, ki) -> float:
    """``|P(j omega)| / (1 + max |term|)`` for the characteristic equation."""
    d, nk, ni, dscale = _term_blocks(g, lam, omega)
    scale = max(float(dscale), abs(kp * nk), abs(ki * ni))
    return float(abs(d + kp * nk + ki * ni) / (1.0 + scale))


def _check_lambda(lam):
    if not 0.0 < lam < 2.0 or abs(math.sin(lam * math.pi / 2)) < 1e-12:
        raise ValueError(
            f"lambda={lam} must lie in (0, 2): sin(lambda*pi/2) = 0 makes the boundary equations degenerate"
        )


def locus_point(g: FractionalTransferFunction, lam: float, omega: float) -> tuple[float, float]:
    """(kp, ki) placing a closed-loop root exactly at ``s = j*omega``."""
    _check_lambda(lam)
    kp, ki, resid, bad = _solve(g, lam, float(omega))
    if bad:
        raise SingularSystem(
            f"boundary system singular or ill-conditioned at omega={omega} (residual {float(resid):.3g})"
        )
    return float(kp), float(ki)


def locus_curve(g: FractionalTransferFunction, lam: float, omega_grid=None) -> LocusCurve:
    """Boundary points over an increasing frequency grid; singular nodes become gaps."""
    _check_lambda(lam)
    w = DEFAULT_OMEGA_GRID if omega_grid is None else np.asarray(omega_grid, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("omega grid must be a non-empty 1-D sequence")
    if np.any(w <= 0) or np.any(np.diff(w) <= 0):
        raise ValueError("omega grid must be positive and strictly increasing")
    kp, ki, _, bad = _solve(g, lam, w)
    points = [LocusPoint(float(o), float(a), float(b)) for o, a, b, x in zip(w, kp, ki, bad) if not x]
    if not points:
        raise EmptyCurve(f"every grid node is singular for lambda={lam}")
    return LocusCurve(lam, points, [float(o) for o, x in zip(w, bad) if x])


def classify_point(
    g: FractionalTransferFunction,
    lam: float,
    kp: float,
    ki: float,
    max_denominator: int = matignon.DEFAULT_MAX_DENOMINATOR,
) -> Verdict:
    """Matignon verdict for the loop closed with ``kp + ki/s^lam``.

    Characteristic roots at the origin (e.g. ``ki = 0``) and roots inside the
    numerical dead zone are reported as BOUNDARY.
    """
    p = focq(g, PiLambdaController(kp, ki, lam))
    verdict = matignon.quasi_is_stable(p, max_denominator)
    roots = verdict.roots
    if roots.size and np.min(np.abs(roots)) <= 1e-12 * max(1.0, float(np.max(np.abs(roots)))):
        return Verdict.BOUNDARY
    if verdict.boundary:
        return Verdict.BOUNDARY
    return Verdict.STABLE if verdict.stable else Verdict.UNSTABLE


@dataclass
class StabilityRegion:
    """Stabilizing (kp, ki) set for one lambda, clipped to a finite window.

    ``shape`` is a shapely geometry assembled from the faces of the locus
    curve, the ``ki = 0`` line and the window edges that test stable.  It is
    used for sampling and plotting; stability verdicts come from Matignon.
    """

    lam: float
    curve: LocusCurve | None
    window: tuple[float, float, float, float]
    shape: object = None
    interior_check: Verdict | None = None
    exterior_check: Verdict | None = None
    error: Exception | None = None
    real_root_line: bool = True

    @property
    def ok(self) -> bool:
        return self.error is None and self.shape is not None and not self.shape.is_empty

    def boundary_lines(self):
        kp0, kp1, _, _ = self.window
        lines = [LineString([(kp0, 0.0), (kp1, 0.0)])]
        if self.curve is not None:
            lines.append(_curve_line(self.curve, self.window))
        return unary_union(lines)

    def contains(self, kp: float, ki: float) -> bool:
        return bool(self.shape.contains(Point(kp, ki)))

    def boundary_distance(self, kp: float, ki: float) -> float:
        return float(self.boundary_lines().distance(Point(kp, ki)))

    def bounding_box(self) -> tuple[float, float, float, float]:
        x0, y0, x1, y1 = self.shape.bounds
        return x0, x1, y0, y1

    def sample(self, n: int, inside: bool, buffer: float = 0.02, seed: int = 0, max_tries: int = 200000):
        """Draw ``n`` window points inside (or outside) the region, at least
        ``buffer * window span`` away from the boundary curve and ki = 0 line."""
        kp0, kp1, ki0, ki1 = self.window
        margin = buffer * max(kp1 - kp0, ki1 - ki0)
        rng = np.random.default_rng(seed)
        lines = self.boundary_lines()
        shape = shapely.prepared.prep(self.shape)
        out = []
        tries = 0
        while len(out) < n and tries < max_tries:
            tries += 1
            x, y = rng.uniform(kp0, kp1), rng.uniform(ki0, ki1)
            pt = Point(x, y)
            if shape.contains(pt) != inside:
                continue
            if lines.distance(pt) < margin:
                continue
            out.append((x, y))
        return out


def _curve_line(curve: LocusCurve, window) -> LineString:
    kp, ki = curve.kp, curve.ki
    # ki -> 0 as omega -> 0+, so the curve starts on the real-root line
    xs = np.concatenate([[kp[0]], kp])
    ys = np.concatenate([[0.0], ki])
    # carry the last segment out past the window so the faces close
    if len(xs) >= 2:
        dx, dy = xs[-1] - xs[-2], ys[-1] - ys[-2]
        norm = math.hypot(dx, dy)
        if norm > 0:
            reach = 10.0 * max(window[1] - window[0], window[3] - window[2]) + math.hypot(xs[-1], ys[-1])
            xs = np.append(xs, xs[-1] + dx / norm * reach)
            ys = np.append(ys, ys[-1] + dy / norm * reach)
    return LineString(np.column_stack([xs, ys]))


def build_region(
    g: FractionalTransferFunction,
    lam: float,
    omega_grid=None,
    window=DEFAULT_WINDOW,
    max_denominator: int = matignon.DEFAULT_MAX_DENOMINATOR,
) -> StabilityRegion:
    curve = locus_curve(g, lam, omega_grid)
    kp0, kp1, ki0, ki1 = window
    frame = box(kp0, ki0, kp1, ki1)
    lines = [frame.exterior, LineString([(kp0, 0.0), (kp1, 0.0)]), _curve_line(curve, window).intersection(frame)]
    faces = list(polygonize(unary_union(lines)))
    stable_faces = []
    for face in faces:
        rp = face.representative_point()
        if classify_point(g, lam, rp.x, rp.y, max_denominator) is Verdict.STABLE:
            stable_faces.append(face)
    shape = unary_union(stable_faces) if stable_faces else shapely.geometry.Polygon()
    region = StabilityRegion(lam=lam, curve=curve, window=tuple(window), shape=shape)
    if not shape.is_empty:
        rp = shape.representative_point()
        region.interior_check = classify_point(g, lam, rp.x, rp.y, max_denominator)
        outside = frame.difference(shape.buffer(1e-9))
        if not outside.is_empty:
            op = outside.representative_point()
            region.exterior_check = classify_point(g, lam, op.x, op.y, max_denominator)
    return region


def global_regions(
    g: FractionalTransferFunction,
    lambdas: Sequence[float],
    omega_grid=None,
    window=DEFAULT_WINDOW,
    max_denominator: int = matignon.DEFAULT_MAX_DENOMINATOR,
) -> list[StabilityRegion]:
    """One region per lambda, in input order.  Failures are stored on the
    region's ``error`` attribute and do not stop the remaining values."""
    out = []
    for lam in lambdas:
        try:
            out.append(build_region(g, lam, omega_grid, window, max_denominator))
        except (ValueError, SingularSystem, EmptyCurve, matignon.CommensurateApproximationError,
                matignon.ConvergenceFailure) as exc:
            out.append(StabilityRegion(lam=lam, curve=None, window=tuple(window), error=exc))
    return out


REGION_CSV_HEADER = ("lambda", "omega", "kp", "ki")


def write_region_csv(path, curves: Sequence[LocusCurve]) -> None:
    """Combined boundary export, one row per locus point, full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REGION_CSV_HEADER)
        for c in curves:
            for p in c.points:
                w.writerow([repr(c.lam), repr(p.omega), repr(p.kp), repr(p.ki)])


def read_region_csv(path) -> dict[float, LocusCurve]:
    curves: dict[float, list[LocusPoint]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            lam = float(row["lambda"])
            curves.setdefault(lam, []).append(
                LocusPoint(float(row["omega"]), float(row["kp"]), float(row["ki"]))
            )
    return {lam: LocusCurve(lam, pts) for lam, pts in curves.items()}

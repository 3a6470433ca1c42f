"""Open-loop frequency response, gain/phase margins and margin-driven design."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import matignon
from .locus import DEFAULT_WINDOW, StabilityRegion, Verdict, build_region, classify_point
from .quasipoly import (
    FractionalTransferFunction,
    PiLambdaController,
    controller_eval,
    tf_eval,
)

DEFAULT_OMEGA_RANGE = (1e-4, 1e4)
DEFAULT_NODES = 4000
_XTOL = 1e-10


def open_loop_response(c: PiLambdaController, g: FractionalTransferFunction, omega):
    return controller_eval(c, omega) * tf_eval(g, omega)


def _wrap180(deg):
    return (np.asarray(deg) + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class MarginReport:
    """Worst-case margins.  Absent crossovers give ``inf`` margins and ``None`` frequencies."""

    gain_margin_db: float
    phase_margin_deg: float
    phase_crossover_omega: float | None
    gain_crossover_omega: float | None

    def as_text(self) -> str:
        def fmt(x):
            return "absent" if x is None else repr(x)

        return (
            f"gain_margin_db = {self.gain_margin_db!r}\n"
            f"phase_margin_deg = {self.phase_margin_deg!r}\n"
            f"phase_crossover_omega = {fmt(self.phase_crossover_omega)}\n"
            f"gain_crossover_omega = {fmt(self.gain_crossover_omega)}\n"
        )

    def as_row(self) -> list[str]:
        return [repr(self.gain_margin_db), repr(self.phase_margin_deg),
                "" if self.phase_crossover_omega is None else repr(self.phase_crossover_omega),
                "" if self.gain_crossover_omega is None else repr(self.gain_crossover_omega)]


MARGIN_CSV_HEADER = ("gain_margin_db", "phase_margin_deg", "phase_crossover_omega", "gain_crossover_omega")


def bode_data(response, omega):
    """Magnitude (dB) and continuously unwrapped phase (deg) of a frequency response."""
    mag_db = 20.0 * np.log10(np.abs(response))
    phase = np.degrees(np.unwrap(np.angle(response)))
    return mag_db, phase


def _margins_from_function(L, omega_range, nodes) -> MarginReport:
    lo, hi = omega_range
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError("omega_range must be positive, finite and increasing")
    w = np.logspace(math.log10(lo), math.log10(hi), nodes)
    resp = L(w)
    mag = np.abs(resp)
    phase = np.degrees(np.unwrap(np.angle(resp)))
    logw = np.log(w)

    def phase_near(x, ref):
        return ref + _wrap180(np.degrees(np.angle(L(np.exp(x)))) - ref)

    # gain crossovers: log|L| changes sign
    lm = np.log(mag)
    pms, wgcs = [], []
    for i in np.nonzero((np.sign(lm[:-1]) * np.sign(lm[1:]) < 0) | (lm[:-1] == 0))[0]:
        x = brentq(lambda x: math.log(abs(L(math.exp(x)))), logw[i], logw[i + 1], xtol=_XTOL, rtol=_XTOL)
        ph = phase_near(x, phase[i])
        pms.append(float(_wrap180(180.0 + ph)))
        wgcs.append(math.exp(x))

    # phase crossovers: unwrapped phase passes -180 + 360 k
    shifted = (phase + 180.0) / 360.0
    gms, wpcs = [], []
    for i in np.nonzero(np.floor(shifted[:-1]) != np.floor(shifted[1:]))[0]:
        k = max(math.floor(shifted[i]), math.floor(shifted[i + 1]))
        target = -180.0 + 360.0 * k
        ref = phase[i]
        x = brentq(lambda x: phase_near(x, ref) - target, logw[i], logw[i + 1], xtol=_XTOL, rtol=_XTOL)
        gms.append(-20.0 * math.log10(abs(L(math.exp(x)))))
        wpcs.append(math.exp(x))

    if gms:
        j = int(np.argmin(gms))
        gm, wpc = gms[j], wpcs[j]
    else:
        gm, wpc = math.inf, None
    if pms:
        j = int(np.argmin(pms))
        pm, wgc = pms[j], wgcs[j]
    else:
        pm, wgc = math.inf, None
    return MarginReport(gm, pm, wpc, wgc)


def compute_margins(
    c: PiLambdaController,
    g: FractionalTransferFunction,
    omega_range=DEFAULT_OMEGA_RANGE,
    nodes: int = DEFAULT_NODES,
) -> MarginReport:
    """Gain and phase margins of ``C(s)G(s)``.

    Crossovers are bracketed on a log grid and refined by Brent's method to
    1e-10 relative in omega.  With several crossovers the smallest margin is
    reported.
    """
    return _margins_from_function(lambda w: open_loop_response(c, g, w), omega_range, nodes)


def margins_of(response_fn, omega_range=DEFAULT_OMEGA_RANGE, nodes: int = DEFAULT_NODES) -> MarginReport:
    """Margins of an arbitrary vectorized open-loop response ``L(omega)``."""
    return _margins_from_function(response_fn, omega_range, nodes)


def write_bode_csv(path, omega, response) -> None:
    mag_db, phase = bode_data(response, omega)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("omega", "magnitude_db", "phase_deg"))
        for row in zip(omega, mag_db, phase):
            w.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class DesignSpec:
    gm_target_db: float = 4.5
    pm_target_deg: float = 20.0
    gm_tolerance_db: float = 0.5
    pm_tolerance_deg: float = 2.0

    def __post_init__(self):
        if self.gm_tolerance_db <= 0 or self.pm_tolerance_deg <= 0:
            raise ValueError("tolerances must be positive")

    def gm_error(self, report: MarginReport) -> float:
        return abs(report.gain_margin_db - self.gm_target_db)

    def pm_error(self, report: MarginReport) -> float:
        return abs(report.phase_margin_deg - self.pm_target_deg)

    def accepts(self, report: MarginReport) -> bool:
        return self.gm_error(report) <= self.gm_tolerance_db and self.pm_error(report) <= self.pm_tolerance_deg

    def score(self, report: MarginReport) -> float:
        """Sum of target errors in units of tolerance (inf when a margin is absent)."""
        return self.gm_error(report) / self.gm_tolerance_db + self.pm_error(report) / self.pm_tolerance_deg


@dataclass(frozen=True)
class Candidate:
    lam: float
    kp: float
    ki: float
    report: MarginReport


@dataclass
class DesignResult:
    candidates: list[Candidate]
    #: per lambda: number of feasible candidates, or the error that stopped the search
    status: dict[float, object] = field(default_factory=dict)

    def feasible(self, lam: float) -> list[Candidate]:
        return [c for c in self.candidates if math.isclose(c.lam, lam, abs_tol=1e-12)]

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)


def _bisect(f, lo, hi, iters=60):
    """Vectorized bisection; ``f(lo)`` and ``f(hi)`` differ in sign elementwise."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _worst(margin, freq, rows, values, omegas):
    # smallest margin per row; ties keep the lowest frequency, as in compute_margins
    order = np.lexsort((omegas, values, rows))
    rows, values, omegas = rows[order], values[order], omegas[order]
    first = np.ones(rows.size, bool)
    first[1:] = rows[1:] != rows[:-1]
    margin[rows[first]] = values[first]
    freq[rows[first]] = omegas[first]


def batch_margins(kp, ki, lam, g: FractionalTransferFunction, omega):
    """Worst-case margins for many controllers ``kp + ki/s^lam`` at once.

    Same crossover definitions as :func:`compute_margins`: brackets come from
    the ``omega`` grid and are refined by vectorized bisection on log-omega.
    Returns ``(gm_db, pm_deg, phase_crossover_omega, gain_crossover_omega)``
    arrays; absent crossovers give ``inf`` margins and ``nan`` frequencies.
    """
    kp = np.asarray(kp, dtype=float)
    ki = np.asarray(ki, dtype=float)
    omega = np.asarray(omega, dtype=float)
    rot = np.exp(-1j * lam * math.pi / 2)

    def loop(rows, w):
        return (kp[rows] + ki[rows] * w ** (-lam) * rot) * tf_eval(g, w)

    L = (kp[:, None] + ki[:, None] * (omega ** (-lam) * rot)[None, :]) * tf_eval(g, omega)[None, :]
    lm = np.log(np.abs(L))
    ph = np.degrees(np.unwrap(np.angle(L), axis=1))
    x = np.log(omega)
    gm, pm = np.full(kp.shape, np.inf), np.full(kp.shape, np.inf)
    wpc, wgc = np.full(kp.shape, np.nan), np.full(kp.shape, np.nan)

    rows, cols = np.nonzero((np.sign(lm[:, :-1]) * np.sign(lm[:, 1:]) < 0) | (lm[:, :-1] == 0))
    if rows.size:
        xc = _bisect(lambda t: np.log(np.abs(loop(rows, np.exp(t)))), x[cols], x[cols + 1])
        ref = ph[rows, cols]
        phc = ref + _wrap180(np.degrees(np.angle(loop(rows, np.exp(xc)))) - ref)
        _worst(pm, wgc, rows, _wrap180(180.0 + phc), np.exp(xc))

    shifted = (ph + 180.0) / 360.0
    s0, s1 = np.floor(shifted[:, :-1]), np.floor(shifted[:, 1:])
    rows, cols = np.nonzero(s0 != s1)
    if rows.size:
        target = -180.0 + 360.0 * np.maximum(s0[rows, cols], s1[rows, cols])
        ref = ph[rows, cols]

        def f(t):
            return ref + _wrap180(np.degrees(np.angle(loop(rows, np.exp(t)))) - ref) - target

        xc = _bisect(f, x[cols], x[cols + 1])
        _worst(gm, wpc, rows, -20.0 * np.log10(np.abs(loop(rows, np.exp(xc)))), np.exp(xc))
    return gm, pm, wpc, wgc


def _search_lambda(g, lam, spec, region, grid, omega_range, nodes, max_denominator, refine_levels):
    kp0, kp1, ki0, ki1 = region.bounding_box()
    # integer lattice at the finest refinement level; coarse nodes every `step`
    step = 2**refine_levels
    hkp = (kp1 - kp0) / max(grid - 1, 1) / step
    hki = (ki1 - ki0) / max(grid - 1, 1) / step
    w = np.logspace(math.log10(omega_range[0]), math.log10(omega_range[1]), nodes)
    scores: dict[tuple[int, int], float] = {}
    reports: dict[tuple[int, int], MarginReport] = {}

    def coords(ij):
        return kp0 + ij[0] * hkp, ki0 + ij[1] * hki

    def evaluate(keys):
        keys = [k for k in dict.fromkeys(keys) if k not in scores]
        inside = [k for k in keys if region.contains(*coords(k))]
        for k in keys:
            scores[k] = math.inf
        for i in range(0, len(inside), 256):
            chunk = inside[i:i + 256]
            xy = np.array([coords(k) for k in chunk])
            gm, pm, wpc, wgc = batch_margins(xy[:, 0], xy[:, 1], lam, g, w)
            err = (np.abs(gm - spec.gm_target_db) / spec.gm_tolerance_db
                   + np.abs(pm - spec.pm_target_deg) / spec.pm_tolerance_deg)
            for i, k in enumerate(chunk):
                scores[k] = float(err[i])
                reports[k] = MarginReport(float(gm[i]), float(pm[i]),
                                          None if np.isnan(wpc[i]) else float(wpc[i]),
                                          None if np.isnan(wgc[i]) else float(wgc[i]))

    evaluate([(i * step, j * step) for i in range(grid) for j in range(grid)])
    # halve the spacing around promising nodes; the threshold tightens
    # level by level down to twice the tolerance
    for level in range(refine_levels):
        h = step >> (level + 1)
        limit = 2.0 * 2.0 ** (refine_levels - level)
        keep = [k for k, e in scores.items() if e <= limit and k[0] % (2 * h) == 0 and k[1] % (2 * h) == 0]
        evaluate([(i + a * h, j + b * h) for i, j in keep for a in (-1, 0, 1) for b in (-1, 0, 1)])

    hits = []
    for k in sorted(reports):
        rep = reports[k]
        if not spec.accepts(rep):
            continue
        kp, ki = coords(k)
        if classify_point(g, lam, kp, ki, max_denominator) is not Verdict.STABLE:
            continue
        hits.append(Candidate(lam, kp, ki, rep))
    return hits


def design_search(
    g: FractionalTransferFunction,
    lambdas: Sequence[float],
    spec: DesignSpec,
    region_source: Sequence[StabilityRegion] | None = None,
    grid: int = 60,
    window=DEFAULT_WINDOW,
    omega_range=DEFAULT_OMEGA_RANGE,
    nodes: int = DEFAULT_NODES,
    max_denominator: int = matignon.DEFAULT_MAX_DENOMINATOR,
    refine_levels: int = 4,
) -> DesignResult:
    """Grid search for stabilizing (kp, ki) meeting the GM/PM targets.

    For each lambda a ``grid x grid`` lattice over the stability region's
    bounding box (clipped to ``window``) is evaluated with
    :func:`batch_margins`.  Around promising nodes the spacing is
    halved ``refine_levels`` times, with the threshold tightening to twice
    the tolerance.  Points meeting the spec must also pass the Matignon test.  Candidates
    are ordered by (lambda, kp, ki).
    """
    regions = {}
    if region_source is not None:
        regions = {r.lam: r for r in region_source}
    result = DesignResult([])
    for lam in lambdas:
        try:
            region = regions.get(lam) or build_region(g, lam, window=window, max_denominator=max_denominator)
            if not region.ok:
                raise region.error or ValueError(f"empty stability region for lambda={lam}")
            hits = _search_lambda(g, lam, spec, region, grid, omega_range, nodes, max_denominator, refine_levels)
        except (ValueError, matignon.CommensurateApproximationError, matignon.ConvergenceFailure) as exc:
            result.status[lam] = exc
            continue
        result.status[lam] = len(hits)
        result.candidates.extend(hits)
    result.candidates.sort(key=lambda c: (c.lam, c.kp, c.ki))
    return result

"""SVG figures for the CLI.  CSV files are the contract; these are convenience."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# reproducible SVG ids and no timestamp
plt.rcParams["svg.hashsalt"] = "fopi"
_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_regions(regions, path, marks=()):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for reg in regions:
        if reg.curve is None:
            continue
        kp0, kp1, ki0, ki1 = reg.window
        sel = (reg.curve.ki <= ki1) & (reg.curve.kp >= kp0) & (reg.curve.kp <= kp1)
        ax.plot(reg.curve.kp[sel], reg.curve.ki[sel], label=f"λ = {reg.lam:g}")
    ax.axhline(0.0, color="k", lw=0.8)
    for label, (kp, ki) in marks:
        ax.plot(kp, ki, "k*")
        ax.annotate(label, (kp, ki), textcoords="offset points", xytext=(4, 4))
    if regions:
        kp0, kp1, ki0, ki1 = regions[0].window
        ax.set_xlim(kp0, kp1)
        ax.set_ylim(ki0, ki1)
    ax.set_xlabel("Kp")
    ax.set_ylabel("Ki")
    ax.legend()
    _save(fig, path)


def plot_bode(omega, mag_db, phase_deg, path, title=""):
    fig, (a1, a2) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    a1.semilogx(omega, mag_db)
    a1.axhline(0.0, color="k", lw=0.6)
    a1.set_ylabel("magnitude [dB]")
    a2.semilogx(omega, phase_deg)
    a2.axhline(-180.0, color="k", lw=0.6)
    a2.set_ylabel("phase [deg]")
    a2.set_xlabel("ω [rad/s]")
    a1.set_title(title)
    _save(fig, path)


def plot_traces(traces, path):
    """``traces``: mapping label -> SimTrace; output and controller output panels."""
    fig, (a1, a2) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    first = True
    for label, tr in traces.items():
        if first:
            a1.plot(tr.t, tr.r, "k--", lw=0.8, label="setpoint")
            first = False
        a1.plot(tr.t, tr.y, label=label)
        a2.plot(tr.t, tr.u, label=label)
    a1.set_ylabel("speed [%]")
    a2.set_ylabel("armature voltage [%]")
    a2.set_xlabel("t [s]")
    a1.legend()
    _save(fig, path)


def plot_poles(verdict, path):
    fig, ax = plt.subplots(figsize=(5, 5))
    roots = verdict.roots
    ax.plot(roots.real, roots.imag, "x")
    reach = max(1.0, float(np.max(np.abs(roots)))) * 1.1 if roots.size else 1.0
    ang = verdict.q * math.pi / 2
    for sgn in (1, -1):
        ax.plot([0, reach * math.cos(ang)], [0, sgn * reach * math.sin(ang)], "r--", lw=0.8)
    ax.axhline(0, color="k", lw=0.5)
    ax.axvline(0, color="k", lw=0.5)
    ax.set_title(f"w-plane poles, q = {verdict.q:g}")
    ax.set_aspect("equal")
    _save(fig, path)


def plot_relay(result, path):
    fig, (a1, a2) = plt.subplots(2, 1, sharex=True, figsize=(6, 4.5))
    a1.plot(result.t, result.relay_out)
    a1.set_ylabel("relay output")
    a2.plot(result.t, result.y)
    a2.set_ylabel("process output")
    a2.set_xlabel("t [s]")
    _save(fig, path)

"""Deterministic SVG figures for trajectories, convergence tables,
spectra and abscissa sweeps.

All output is SVG 1.1 with fonts rendered as paths (no external
assets).  The hash salt is pinned and the date metadata dropped so that
identical data produces byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ParameterError

PLOT_KINDS = ("trajectory", "convergence_loglog", "spectrum", "sweep")

plt.rcParams["svg.hashsalt"] = "synclim"
plt.rcParams["svg.fonttype"] = "path"

_MAX_TRAJECTORY_CURVES = 16


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_trajectory(series, ax):
    n = series.phases.shape[1]
    if len(series.times) == 0 or n == 0:
        raise ParameterError("empty trajectory")
    shown = np.unique(np.linspace(0, n - 1, min(n, _MAX_TRAJECTORY_CURVES)).astype(int))
    marker = "o" if len(series.times) == 1 else None
    for k in shown:
        ax.plot(series.times, series.phases[:, k], lw=0.8, marker=marker)
    ax.set_xlabel("t")
    ax.set_ylabel("phase")
    ax.set_title(f"{n}-node trajectory ({len(shown)} curves shown)")


def _plot_convergence(report, ax):
    n_values = list(report.n_values)
    if not n_values:
        raise ParameterError("empty report")
    marker = "o"
    if hasattr(report, "sup_errors"):
        ax.loglog(n_values, report.sup_errors, marker=marker, label="sup-t L2 error")
        if getattr(report, "envelope", None):
            ax.loglog(n_values, report.envelope, marker=".", ls="--", label="Gronwall envelope")
    elif hasattr(report, "medians"):
        ax.loglog(n_values, report.medians, marker=marker, label="median")
        ax.loglog(n_values, report.q90s, marker=".", ls="--", label="0.9 quantile")
    else:  # mu-scaling report
        ax.loglog(n_values, report.means, marker=marker, label="mean")
    ax.set_xlabel("N")
    ax.set_ylabel("error")
    ax.legend()
    ax.set_title("convergence in N")


def _plot_spectrum(spec, ax):
    if not spec.modes:
        raise ParameterError("empty spectrum")
    ms = [m for m, _, _ in spec.modes]
    ax.plot(ms, [lp.real for _, lp, _ in spec.modes], "o", ms=3, label="Re lambda_+")
    ax.plot(ms, [lm.real for _, _, lm in spec.modes], ".", ms=3, label="Re lambda_-")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("mode m")
    ax.set_ylabel("real part")
    ax.legend()
    ax.set_title("mode eigenvalues")


def _plot_sweep(rows, ax):
    if not rows:
        raise ParameterError("empty sweep")
    ax.plot(range(len(rows)), [row["abscissa"] for row in rows], marker="o")
    ax.axhline(0.0, color="k", lw=0.5)
    labels = [f"p={row['p']:g},r={row['r']:g},K={row['coupling']:g}" for row in rows]
    ax.set_xticks(range(len(rows)), labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("spectral abscissa")
    ax.set_title("destabilization sweep")


def emit_plot(data, kind: str, path) -> str:
    """Render one figure; returns the path written."""
    if kind not in PLOT_KINDS:
        raise ParameterError(f"unknown plot kind {kind!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=100)
    try:
        if kind == "trajectory":
            _plot_trajectory(data, ax)
        elif kind == "convergence_loglog":
            _plot_convergence(data, ax)
        elif kind == "spectrum":
            _plot_spectrum(data, ax)
        else:
            _plot_sweep(data, ax)
        fig.tight_layout()
        _save(fig, path)
    except Exception:
        plt.close(fig)
        raise
    return str(path)

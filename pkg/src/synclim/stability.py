"""Linear stability of constant steady states.

Each nonzero spatial Fourier mode m of the linearized continuum model
obeys a damped scalar oscillator whose eigenvalues are

    lambda_pm = -alpha/2 +- sqrt((alpha/2)^2 + coupling * spectral_diff)

with spectral_diff the kernel's m-th Fourier coefficient minus the
zeroth (always <= 0 for non-negative profiles).  ``coupling`` is the
mode equation's coefficient; when validating against a simulated model
it must be the slope of that model's D at 0 (NonlinearitySpec.
slope_at_zero), e.g. 2*pi*gain for the sine2pi kind.  The spatially
constant mode is not an eigenvalue problem; it has the explicit damped
solution exposed as ZeroModeSolution.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass

import numpy as np

from .continuum import ContinuumProblem, solve_continuum
from .core import ModelParams, sine2pi_coupling, zero_forcing
from .errors import DecayFitError, ParameterError
from .graphons import fourier_coefficient, spectral_difference

DEFAULT_M_MAX = 64


def mode_eigenvalues(alpha: float, coupling: float, spectral_diff: float):
    """Eigenvalue pair of one Fourier mode; principal-branch square root."""
    disc = (0.5 * alpha) ** 2 + coupling * spectral_diff
    root = cmath.sqrt(disc)
    return -0.5 * alpha + root, -0.5 * alpha - root


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Eigenvalue pairs for modes 1..m_max.

    Even real profiles have even real Fourier coefficients, so the
    spectrum at -m equals the spectrum at m; only positive m is stored.
    """

    modes: tuple  # ((m, lambda_plus, lambda_minus), ...)
    alpha: float
    coupling: float
    kernel_meta: object = None

    def abscissa(self):
        """(max over m of Re lambda_plus, the maximizing m)."""
        if not self.modes:
            raise ParameterError("empty spectrum")
        best = max(self.modes, key=lambda row: row[1].real)
        return best[1].real, best[0]


def spectrum(kernel, alpha: float, coupling: float, m_max: int = DEFAULT_M_MAX) -> ModeSpectrum:
    if m_max < 1:
        raise ParameterError("m_max must be >= 1")
    modes = []
    for m in range(1, m_max + 1):
        lp, lm = mode_eigenvalues(alpha, coupling, spectral_difference(kernel, m))
        modes.append((m, lp, lm))
    spec = ModeSpectrum(tuple(modes), alpha, coupling,
                        kernel_meta=getattr(kernel, "describe", lambda: None)())
    if alpha > 0 and coupling > 0 and fourier_coefficient(kernel, 0).real > 0:
        bad = [m for m, lp, lm in modes if lp.real >= 0 or lm.real >= 0]
        if bad:
            raise RuntimeError(f"stability violated at modes {bad}; check kernel input")
    return spec


def spectral_abscissa(spec: ModeSpectrum) -> float:
    return spec.abscissa()[0]


@dataclass(frozen=True)
class ZeroModeSolution:
    """Explicitly solvable damped dynamics of the spatial mean."""

    mean0: float
    meanvel0: float
    alpha: float

    def __post_init__(self):
        if self.alpha == 0.0 or not math.isfinite(self.alpha):
            raise ParameterError("zero-mode solution requires alpha != 0")


def zero_mode_mean(sol: ZeroModeSolution, t):
    decay = np.exp(-sol.alpha * np.asarray(t, dtype=float))
    out = sol.mean0 * decay + (sol.meanvel0 + sol.alpha * sol.mean0) * (1.0 - decay) / sol.alpha
    return out if np.ndim(out) else float(out)


def mode_amplitude_series(series, m: int) -> np.ndarray:
    """Cosine-mode coefficient 2 * mean_k(phi_k(t) cos(2 pi m x_k)) on
    cell centers x_k = (k + 1/2)/n."""
    n = series.phases.shape[1]
    x = (np.arange(n) + 0.5) / n
    return 2.0 * (series.phases @ np.cos(2.0 * np.pi * m * x)) / n


def _fit_envelope(times, values, floor=1e-13):
    """Decay rate of a scalar damped signal: log-linear fit of the
    rectified peaks when it oscillates, of the late tail otherwise."""
    amp = np.abs(values)
    if np.max(amp) <= floor:
        raise DecayFitError("mode amplitude never rises above the floor")
    signs = np.sign(values)
    flips = int(np.sum(signs[1:] * signs[:-1] < 0))
    # >= 4 sign changes means >= 2 full periods, enough rectified peaks
    # for the log-linear fit; fewer means over- or near-critical damping
    if flips >= 4:
        inner = amp[1:-1]
        is_peak = (inner > amp[:-2]) & (inner > amp[2:]) & (inner > floor)
        idx = np.where(is_peak)[0] + 1
        if len(idx) < 4:
            raise DecayFitError(
                f"only {len(idx)} usable oscillation peaks above {floor:g}; extend t_end")
        return float(np.polyfit(times[idx], np.log(amp[idx]), 1)[0])
    usable = amp > max(floor, 1e-9 * float(np.max(amp)))
    start = int(0.6 * len(times))
    window = np.where(usable[start:])[0] + start
    if len(window) < 10:
        raise DecayFitError("too few late-time samples above the floor for a tail fit")
    return float(np.polyfit(times[window], np.log(amp[window]), 1)[0])


def measure_decay_rate(kernel, alpha: float, gain: float, m: int, epsilon: float = 1e-4,
                       t_end: float = 18.0, dt: float = 2e-3, grid_n: int = 512) -> float:
    """Empirical decay rate of mode m of the nonlinear sine2pi model.

    Integrates from phi(x, 0) = epsilon * cos(2 pi m x), zero velocity
    and zero forcing, then fits the mode amplitude's envelope.  Compare
    against mode_eigenvalues with coupling = 2*pi*gain (the sine2pi
    slope at 0).
    """
    if m == 0:
        raise ParameterError("the zero mode has no decay-rate fit; use zero_mode_mean")
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    params = ModelParams(alpha, sine2pi_coupling(gain), zero_forcing())
    problem = ContinuumProblem(kernel, params,
                               init_phi=lambda x: epsilon * np.cos(2.0 * np.pi * m * x),
                               init_vel=0.0, grid_n=grid_n)
    series = solve_continuum(problem, t_end, dt)
    return _fit_envelope(series.times, mode_amplitude_series(series, m))


def sweep_abscissa(entries, m_max: int = DEFAULT_M_MAX):
    """Spectral abscissa over a parameter list.

    entries: iterables (kernel, p, r, alpha, coupling); returns one dict
    row per entry with the abscissa and its maximizing mode.
    """
    rows = []
    for kernel, p, r, alpha, coupling in entries:
        value, argmax_m = spectrum(kernel, alpha, coupling, m_max).abscissa()
        rows.append({"p": p, "r": r, "alpha": alpha, "coupling": coupling,
                     "abscissa": value, "argmax_m": argmax_m})
    return rows


def write_spectrum_csv(spec: ModeSpectrum, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "re_lp", "im_lp", "re_lm", "im_lm"])
        for m, lp, lm in spec.modes:
            writer.writerow([m] + [format(v, ".17g") for v in (lp.real, lp.imag, lm.real, lm.imag)])


def read_spectrum_csv(path, alpha=float("nan"), coupling=float("nan")) -> ModeSpectrum:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["m", "re_lp", "im_lp", "re_lm", "im_lm"]:
            raise ParameterError(f"unexpected spectrum header {header!r}")
        modes = tuple(
            (int(row[0]), complex(float(row[1]), float(row[2])), complex(float(row[3]), float(row[4])))
            for row in reader)
    return ModeSpectrum(modes, alpha, coupling)


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "r", "alpha", "K", "abscissa", "argmax_m"])
        for row in rows:
            writer.writerow([format(row["p"], ".17g"), format(row["r"], ".17g"),
                             format(row["alpha"], ".17g"), format(row["coupling"], ".17g"),
                             format(row["abscissa"], ".17g"), row["argmax_m"]])


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["p", "r", "alpha", "K", "abscissa", "argmax_m"]:
            raise ParameterError(f"unexpected sweep header {header!r}")
        return [{"p": float(a), "r": float(b), "alpha": float(c), "coupling": float(d),
                 "abscissa": float(e), "argmax_m": int(f)} for a, b, c, d, e, f in reader]

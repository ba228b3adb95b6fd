"""Finite oscillator networks and their fixed-step RK4 integration.

State is (phases, velocities); phases are unwrapped reals, never reduced
modulo a period.  The right-hand side is dense O(n^2).  For the sine
catalog kinds the pairwise sine is expanded through the angle-difference
identity, turning the coupling sum into two real matrix-vector products;
this is an exact identity, not an approximation.  Tabulated
nonlinearities evaluate the full pairwise difference matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import piecewise
from .core import ModelParams
from .errors import DivergenceError, ParameterError
from .graphs import CouplingGraph, averaged_graph

SCALINGS = ("one_over_n", "none")


@dataclass(frozen=True, eq=False)
class OscillatorState:
    """Phases and velocities of an n-node system at one time."""

    phases: np.ndarray
    velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if p.ndim != 1 or v.shape != p.shape:
            raise ParameterError("phases and velocities must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ParameterError("state must be finite")
        p, v = p.copy(), v.copy()
        p.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "phases", p)
        object.__setattr__(self, "velocities", v)

    @property
    def n(self) -> int:
        return len(self.phases)


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    graph: CouplingGraph
    params: ModelParams
    scaling: str = "one_over_n"

    def __post_init__(self):
        if self.scaling not in SCALINGS:
            raise ParameterError(f"unknown scaling {self.scaling!r}")

    @property
    def n(self) -> int:
        return self.graph.n


def _coupling_acceleration(weights, nonlinearity, phases, scale):
    """scale * sum_l weights[k, l] * D(phases[l] - phases[k]), all k."""
    if nonlinearity.kind in ("sine", "sine2pi"):
        theta = phases if nonlinearity.kind == "sine" else 2.0 * np.pi * phases
        s = np.sin(theta)
        c = np.cos(theta)
        # sin(t_l - t_k) = sin t_l cos t_k - cos t_l sin t_k, exactly
        coup = c * (weights @ s) - s * (weights @ c)
        return (nonlinearity.gain * scale) * coup
    diffs = phases[None, :] - phases[:, None]
    return scale * (weights * nonlinearity(diffs)).sum(axis=1)


def rhs(system: FiniteSystem, state: OscillatorState, t: float = 0.0):
    """Time derivative (dphases, dvelocities) at the given state."""
    scale = 1.0 / system.n if system.scaling == "one_over_n" else 1.0
    f = system.params.forcing.vector(system.n)
    acc = _coupling_acceleration(system.graph.weights, system.params.nonlinearity, state.phases, scale)
    return state.velocities.copy(), acc - system.params.alpha * state.velocities + f


def time_grid(t_end: float, dt: float) -> np.ndarray:
    """Output times 0, dt, 2 dt, ..., t_end; last step shortened to land
    on t_end exactly."""
    if dt <= 0 or not math.isfinite(dt):
        raise ParameterError("dt must be positive and finite")
    if t_end < 0 or not math.isfinite(t_end):
        raise ParameterError("t_end must be non-negative and finite")
    if t_end == 0:
        return np.zeros(1)
    n_full = int(math.floor(t_end / dt + 1e-9))
    times = np.arange(n_full + 1) * dt
    if t_end - times[-1] > 1e-9 * dt:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


@dataclass(eq=False)
class TrajectorySeries:
    """Sampled trajectory: times (T,), phases and velocities (T, n).

    diagnostics holds per-time channels: mean_phase always; q1 and q2
    (the conserved combinations) when the producing integrator knew
    alpha, q2 only for alpha != 0.
    """

    times: np.ndarray
    phases: np.ndarray
    velocities: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.phases.shape[1]

    def state_at(self, i: int) -> OscillatorState:
        return OscillatorState(self.phases[i], self.velocities[i], float(self.times[i]))


def _fill_diagnostics(series: TrajectorySeries, alpha: float):
    mean_phase = series.phases.mean(axis=1)
    mean_vel = series.velocities.mean(axis=1)
    series.diagnostics["mean_phase"] = mean_phase
    series.diagnostics["q1"] = mean_vel + alpha * mean_phase
    if alpha != 0.0:
        series.diagnostics["q2"] = -mean_vel / alpha * np.exp(alpha * series.times)


def integrate(system: FiniteSystem, init: OscillatorState, t_end: float, dt: float = 1e-3) -> TrajectorySeries:
    """Classical fixed-step RK4; every step is an output sample.

    Raises DivergenceError (with the offending time) on non-finite
    state.
    """
    if init.n != system.n:
        raise ParameterError("initial state size does not match the graph")
    times = time_grid(t_end, dt)
    n = system.n
    weights = system.graph.weights
    nl = system.params.nonlinearity
    alpha = system.params.alpha
    scale = 1.0 / n if system.scaling == "one_over_n" else 1.0
    f = system.params.forcing.vector(n)

    phases = np.empty((len(times), n))
    velocities = np.empty((len(times), n))
    phases[0] = init.phases
    velocities[0] = init.velocities

    def accel(p, v):
        return _coupling_acceleration(weights, nl, p, scale) - alpha * v + f

    p = phases[0].copy()
    v = velocities[0].copy()
    # blow-up is detected and reported; the transient overflow itself is
    # not an error condition worth a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, len(times)):
            h = times[i] - times[i - 1]
            k1p, k1v = v, accel(p, v)
            p2, v2 = p + 0.5 * h * k1p, v + 0.5 * h * k1v
            k2p, k2v = v2, accel(p2, v2)
            p3, v3 = p + 0.5 * h * k2p, v + 0.5 * h * k2v
            k3p, k3v = v3, accel(p3, v3)
            p4, v4 = p + h * k3p, v + h * k3v
            k4p, k4v = v4, accel(p4, v4)
            p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
                raise DivergenceError(times[i])
            phases[i] = p
            velocities[i] = v

    series = TrajectorySeries(
        times=times,
        phases=phases,
        velocities=velocities,
        meta={"dt": dt, "scaling": system.scaling, "alpha": alpha, "n": n},
    )
    _fill_diagnostics(series, alpha)
    return series


def integrate_averaged(kernel, n: int, params: ModelParams, init: OscillatorState,
                       t_end: float, dt: float = 1e-3) -> TrajectorySeries:
    """Integrate on the expected adjacency of the kernel's random graph."""
    system = FiniteSystem(averaged_graph(kernel, n), params, scaling="one_over_n")
    return integrate(system, init, t_end, dt)


def conserved_quantities(series: TrajectorySeries, alpha: float):
    """q1(t) = mean velocity + alpha * mean phase; q2(t) = -(mean
    velocity / alpha) * exp(alpha t).

    Both are constant along any run with symmetric coupling, odd D and
    zero forcing.  q2 needs alpha != 0 and grows like exp(alpha t), so
    only compare it on horizons where that factor stays moderate.
    """
    if alpha == 0.0:
        raise ParameterError("q2 requires alpha != 0")
    mean_phase = series.phases.mean(axis=1)
    mean_vel = series.velocities.mean(axis=1)
    q1 = mean_vel + alpha * mean_phase
    q2 = -mean_vel / alpha * np.exp(alpha * series.times)
    return q1, q2


@dataclass(eq=False)
class StepFunctionSeries:
    """Step-function embedding of a trajectory: x in [k/n, (k+1)/n) takes
    the value of node k."""

    times: np.ndarray
    values: np.ndarray  # (T, n)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def evaluate(self, x, i: int):
        idx = np.minimum((np.asarray(x, dtype=float) * self.n).astype(int), self.n - 1)
        out = self.values[i][idx]
        return out if np.ndim(out) else float(out)

    def l2_norms(self) -> np.ndarray:
        return np.sqrt(np.mean(self.values**2, axis=1))

    def l2_distances(self, other: "StepFunctionSeries") -> np.ndarray:
        """Exact per-time L2(0, 1) distances; time grids must agree."""
        if len(self.times) != len(other.times) or np.max(np.abs(self.times - other.times)) > 1e-12:
            raise ParameterError("step series must share their time grid")
        return piecewise.series_l2_distance(self.values, other.values)


def embed_step_function(series: TrajectorySeries) -> StepFunctionSeries:
    return StepFunctionSeries(times=series.times, values=series.phases)


def write_trajectory_csv(series: TrajectorySeries, path):
    """Long-format CSV: t, node, phi, phidot (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "node", "phi", "phidot"])
        for i, t in enumerate(series.times):
            ts = format(t, ".17g")
            for k in range(series.n):
                writer.writerow([ts, k, format(series.phases[i, k], ".17g"),
                                 format(series.velocities[i, k], ".17g")])


def read_trajectory_csv(path) -> TrajectorySeries:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "node", "phi", "phidot"]:
            raise ParameterError(f"unexpected trajectory header {header!r}")
        rows = [(float(t), int(k), float(p), float(v)) for t, k, p, v in reader]
    if not rows:
        raise ParameterError(f"empty trajectory file {path}")
    n = max(r[1] for r in rows) + 1
    if len(rows) % n:
        raise ParameterError("trajectory rows do not tile a (time, node) grid")
    m = len(rows) // n
    times = np.array([rows[i * n][0] for i in range(m)])
    phases = np.array([r[2] for r in rows]).reshape(m, n)
    velocities = np.array([r[3] for r in rows]).reshape(m, n)
    return TrajectorySeries(times=times, phases=phases, velocities=velocities)


def write_diagnostics_csv(series: TrajectorySeries, path):
    """CSV of t, q1, q2, mean_phase; q2 is nan when alpha == 0."""
    q1 = series.diagnostics.get("q1")
    q2 = series.diagnostics.get("q2")
    mean_phase = series.diagnostics.get("mean_phase")
    if q1 is None or mean_phase is None:
        raise ParameterError("series carries no diagnostics")
    if q2 is None:
        q2 = np.full(len(series.times), np.nan)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "q1", "q2", "mean_phase"])
        for t, a, b, c in zip(series.times, q1, q2, mean_phase):
            writer.writerow([format(t, ".17g"), format(a, ".17g"),
                             format(b, ".17g"), format(c, ".17g")])


def read_diagnostics_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "q1", "q2", "mean_phase"]:
            raise ParameterError(f"unexpected diagnostics header {header!r}")
        rows = [[float(c) for c in row] for row in reader]
    arr = np.asarray(rows)
    return {"t": arr[:, 0], "q1": arr[:, 1], "q2": arr[:, 2], "mean_phase": arr[:, 3]}

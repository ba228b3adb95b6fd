"""Model parameters, nonlinearity and forcing catalogs, physical-units map.

The dimensionless system integrated throughout this package is

    phi_k'' = -alpha * phi_k' + scale * sum_l K[k, l] * D(phi_l - phi_k) + f_k

with damping alpha, coupling matrix K, odd coupling nonlinearity D and
per-node forcing f.  ``scale`` is 1/N for graphon-limit work and 1 for
the raw physical network.  D comes from a small catalog: plain sine
(phases in radians), sine of 2*pi*x (phases parametrize the unit
circle), or a user-supplied odd 1-periodic piecewise-linear table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError

FloatArray = NDArray[np.float64]

NONLINEARITY_KINDS = ("sine", "sine2pi", "custom_table")
FORCING_KINDS = ("zero", "uniform_constant", "constant_per_node")


@dataclass(frozen=True, eq=False)
class NonlinearitySpec:
    """Odd coupling nonlinearity D.

    kind "sine":      D(x) = gain * sin(x)
    kind "sine2pi":   D(x) = gain * sin(2*pi*x)
    kind "custom_table": D(x) = gain * (piecewise-linear interpolant of
        ``table`` at nodes j/M, extended 1-periodically).  The table must
        be odd: table[0] == 0 and table[(M - j) % M] == -table[j].
    """

    kind: str
    gain: float = 1.0
    table: Optional[FloatArray] = None

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ParameterError(f"unknown nonlinearity kind {self.kind!r}")
        if not np.isfinite(self.gain) or self.gain < 0:
            raise ParameterError("gain must be finite and >= 0")
        if self.kind == "custom_table":
            if self.table is None:
                raise ParameterError("custom_table needs a table")
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 1 or len(t) < 2 or not np.all(np.isfinite(t)):
                raise ParameterError("table must be a finite 1-d array, length >= 2")
            m = len(t)
            if t[0] != 0.0:
                raise ParameterError("table[0] must be 0 (odd profile)")
            mirrored = -t[(m - np.arange(m)) % m]
            if np.max(np.abs(t - mirrored)) > 1e-12:
                raise ParameterError("table must be odd: table[M-j] == -table[j]")
            t = t.copy()
            t.flags.writeable = False
            object.__setattr__(self, "table", t)
        elif self.table is not None:
            raise ParameterError(f"kind {self.kind!r} takes no table")

    def __call__(self, x):
        if self.kind == "sine":
            return self.gain * np.sin(x)
        if self.kind == "sine2pi":
            return self.gain * np.sin(2.0 * np.pi * np.asarray(x, dtype=float))
        t = self.table
        m = len(t)
        u = (np.asarray(x, dtype=float) % 1.0) * m
        j = np.minimum(u.astype(int), m - 1)
        frac = u - j
        nxt = t[(j + 1) % m]
        return self.gain * (t[j] + frac * (nxt - t[j]))

    def lipschitz(self) -> float:
        """Smallest catalog Lipschitz constant of D."""
        if self.kind == "sine":
            return self.gain
        if self.kind == "sine2pi":
            return 2.0 * math.pi * self.gain
        m = len(self.table)
        slopes = (np.roll(self.table, -1) - self.table) * m
        return self.gain * float(np.max(np.abs(slopes)))

    def sup_bound(self) -> float:
        """sup |D|."""
        if self.kind in ("sine", "sine2pi"):
            return self.gain
        return self.gain * float(np.max(np.abs(self.table)))

    def slope_at_zero(self) -> float:
        """D'(0), the linear gain of the coupling around a constant state."""
        if self.kind == "sine":
            return self.gain
        if self.kind == "sine2pi":
            return 2.0 * math.pi * self.gain
        return self.gain * float(self.table[1]) * len(self.table)


def sine_coupling(gain=1.0) -> NonlinearitySpec:
    return NonlinearitySpec("sine", gain)


def sine2pi_coupling(gain=1.0) -> NonlinearitySpec:
    return NonlinearitySpec("sine2pi", gain)


def evaluate_nonlinearity(spec: NonlinearitySpec, x):
    """Evaluate the coupling nonlinearity (function form of spec(x))."""
    return spec(x)


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """Per-node forcing f_k.  None of the catalog kinds depend on phi or t."""

    kind: str = "zero"
    values: object = None  # scalar for uniform_constant, vector for constant_per_node

    def __post_init__(self):
        if self.kind not in FORCING_KINDS:
            raise ParameterError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "zero" and self.values is not None:
            raise ParameterError("zero forcing takes no values")
        if self.kind == "uniform_constant":
            v = float(self.values)
            if not math.isfinite(v):
                raise ParameterError("uniform forcing value must be finite")
            object.__setattr__(self, "values", v)
        if self.kind == "constant_per_node":
            v = np.asarray(self.values, dtype=float)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ParameterError("per-node forcing must be a finite vector")
            v = v.copy()
            v.flags.writeable = False
            object.__setattr__(self, "values", v)

    def vector(self, n: int) -> FloatArray:
        if self.kind == "zero":
            return np.zeros(n)
        if self.kind == "uniform_constant":
            return np.full(n, self.values)
        if len(self.values) != n:
            raise ParameterError(f"forcing vector has length {len(self.values)}, system has {n} nodes")
        return np.asarray(self.values)

    def lipschitz(self) -> float:
        return 0.0


def zero_forcing() -> ForcingSpec:
    return ForcingSpec("zero")


def uniform_forcing(value: float) -> ForcingSpec:
    return ForcingSpec("uniform_constant", value)


def per_node_forcing(values) -> ForcingSpec:
    return ForcingSpec("constant_per_node", values)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Damping, coupling nonlinearity and forcing of the dimensionless model."""

    alpha: float
    nonlinearity: NonlinearitySpec
    forcing: ForcingSpec = field(default_factory=zero_forcing)

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ParameterError("alpha must be finite")

    @property
    def coupling_gain(self) -> float:
        return self.nonlinearity.gain

    @property
    def lip_d(self) -> float:
        return self.nonlinearity.lipschitz()

    @property
    def lip_f(self) -> float:
        return self.forcing.lipschitz()

    def describe(self) -> dict:
        d = {
            "alpha": self.alpha,
            "coupling_gain": self.coupling_gain,
            "nonlinearity": self.nonlinearity.kind,
            "forcing": self.forcing.kind,
        }
        if self.forcing.kind == "uniform_constant":
            d["forcing_value"] = self.forcing.values
        return d


@dataclass(frozen=True, eq=False)
class PhysicalParams:
    """Physical rotating-machine network parameters.

    inertia (per unit), friction coefficient, reference frequency, the
    per-node source power vector and the symmetric matrix of line
    capacities.
    """

    inertia: float
    friction: float
    ref_frequency: float
    p_source: FloatArray
    p_max: FloatArray

    def __post_init__(self):
        if self.inertia <= 0 or not math.isfinite(self.inertia):
            raise ParameterError("inertia must be positive")
        if self.friction < 0 or not math.isfinite(self.friction):
            raise ParameterError("friction must be >= 0")
        if self.ref_frequency <= 0 or not math.isfinite(self.ref_frequency):
            raise ParameterError("reference frequency must be positive")
        ps = np.asarray(self.p_source, dtype=float)
        pm = np.asarray(self.p_max, dtype=float)
        if ps.ndim != 1 or not np.all(np.isfinite(ps)):
            raise ParameterError("p_source must be a finite vector")
        if pm.shape != (len(ps), len(ps)) or not np.all(np.isfinite(pm)) or np.any(pm < 0):
            raise ParameterError("p_max must be a finite non-negative square matrix matching p_source")
        if not np.array_equal(pm, pm.T):
            raise ParameterError("p_max must be symmetric")
        for name, arr in (("p_source", ps), ("p_max", pm)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def physical_to_nondimensional(phys: PhysicalParams):
    """Map physical network parameters onto the dimensionless model.

    Returns (params, weights) with

        alpha   = 2 * friction * inertia
        f_k     = (p_source_k - friction * F^2) / (inertia * F^2)
        K[k, l] = p_max[l, k] / (inertia * F)

    where F is the reference frequency.  The weights drive the plain-sine
    model without 1/N scaling; the diagonal is zeroed (D(0) = 0 makes it
    inert).
    """
    alpha = 2.0 * phys.friction * phys.inertia
    f2 = phys.ref_frequency**2
    f_k = (phys.p_source - phys.friction * f2) / (phys.inertia * f2)
    weights = phys.p_max.T / (phys.inertia * phys.ref_frequency)
    weights = weights.copy()
    np.fill_diagonal(weights, 0.0)
    if np.all(f_k == f_k[0]):
        forcing = uniform_forcing(float(f_k[0]))
    else:
        forcing = per_node_forcing(f_k)
    params = ModelParams(alpha=alpha, nonlinearity=sine_coupling(1.0), forcing=forcing)
    return params, weights


def rescale_uniform_forcing(params: ModelParams):
    """Absorb a uniform constant forcing P into a linear phase drift.

    If psi solves the forcing-free model with psi(0) = phi(0) and
    psi'(0) = phi'(0) - P/alpha, then phi(t) = psi(t) + (P/alpha) * t.
    Returns (forcing-free params, drift rate P/alpha).  Undefined at
    alpha == 0.
    """
    if params.forcing.kind != "uniform_constant":
        raise ParameterError("rescaling applies to uniform_constant forcing only")
    if params.alpha == 0.0:
        raise ParameterError("rescaling undefined at alpha == 0")
    rate = params.forcing.values / params.alpha
    stripped = ModelParams(params.alpha, params.nonlinearity, zero_forcing())
    return stripped, rate

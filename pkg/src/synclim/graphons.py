"""Graphon kernels on the unit square and their Fourier analysis.

Difference kernels K(x, y) = prof(x - y) are built from an even
1-periodic profile: a constant offset plus indicator components
1{pernorm(x) < s} (pernorm is the distance to the nearest integer), or a
piecewise-constant table.  Small-world kernels are the two-component
mixture p * G_{1/2} + (1 - 2p) * G_r, where G_s is the indicator of
pernorm < s; the "rewire" and "insertion" constructions produce the same
mixture and differ only as provenance.

Fourier coefficients are exact: the m-th coefficient of G_s is 2s for
m == 0 and sin(2 pi m s) / (pi m) otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import piecewise
from .errors import ParameterError

SMALL_WORLD_VARIANTS = ("rewire", "insertion")


def pernorm(x):
    """Distance to the nearest integer (1-periodic, even, range [0, 1/2])."""
    frac = np.asarray(x, dtype=float) % 1.0
    out = np.minimum(frac, 1.0 - frac)
    return out if out.ndim else float(out)


def indicator_profile(x, s: float):
    """1 where pernorm(x) < s (strict), else 0."""
    if not 0.0 < s <= 0.5:
        raise ParameterError("indicator radius must satisfy 0 < s <= 1/2")
    out = (pernorm(x) < s).astype(float) if np.ndim(x) else float(pernorm(x) < s)
    return out


@dataclass(frozen=True)
class SmallWorldParams:
    p: float
    r: float
    variant: str = "insertion"

    def __post_init__(self):
        if self.variant not in SMALL_WORLD_VARIANTS:
            raise ParameterError(f"unknown small-world variant {self.variant!r}")
        if not 0.0 < self.p < 0.5:
            raise ParameterError("p must lie in (0, 1/2)")
        if not 0.0 < self.r < 0.5:
            raise ParameterError("r must lie in (0, 1/2)")


@dataclass(frozen=True, eq=False)
class DifferenceKernel:
    """Kernel K(x, y) = prof(x - y) with piecewise-constant even profile.

    prof(u) = offset + sum_i coef_i * 1{pernorm(u) < s_i}  (+ table cells).
    """

    offset: float = 0.0
    parts: tuple = ()  # ((coefficient, radius), ...)
    table: Optional[np.ndarray] = None  # even cell values on [0, 1), length M
    small_world: Optional[SmallWorldParams] = None

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise ParameterError("offset must be finite")
        parts = tuple((float(c), float(s)) for c, s in self.parts)
        for c, s in parts:
            if not math.isfinite(c):
                raise ParameterError("component coefficients must be finite")
            if not 0.0 < s <= 0.5:
                raise ParameterError("component radii must lie in (0, 1/2]")
        object.__setattr__(self, "parts", parts)
        if self.table is not None:
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 1 or len(t) < 1 or not np.all(np.isfinite(t)):
                raise ParameterError("profile table must be a finite 1-d array")
            if np.max(np.abs(t - t[::-1])) > 1e-12:
                raise ParameterError("profile table must be even: table[j] == table[M-1-j]")
            t = t.copy()
            t.flags.writeable = False
            object.__setattr__(self, "table", t)
        if self.min_value < -1e-12:
            raise ParameterError("kernel takes negative values")

    kind = "difference_profile"

    def profile(self, u):
        """Profile value prof(u), vectorized, 1-periodic."""
        uu = np.asarray(u, dtype=float)
        per = pernorm(uu)
        out = np.full_like(np.atleast_1d(per), self.offset, dtype=float)
        per1 = np.atleast_1d(per)
        for c, s in self.parts:
            out += c * (per1 < s)
        if self.table is not None:
            m = len(self.table)
            frac = np.atleast_1d(uu) % 1.0
            idx = np.minimum((frac * m).astype(int), m - 1)
            out += self.table[idx]
        return out.reshape(np.shape(per)) if np.ndim(per) else float(out[0])

    def evaluate(self, x, y):
        return self.profile(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def profile_segments(self):
        """Canonical partition of [0, 1] into (lo, hi, value) pieces."""
        cuts = {0.0, 1.0}
        for _, s in self.parts:
            cuts.add(s)
            cuts.add(1.0 - s)
        if self.table is not None:
            m = len(self.table)
            cuts.update(j / m for j in range(1, m))
        edges = sorted(cuts)
        segs = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo < 1e-15:
                continue
            segs.append((lo, hi, float(self.profile(0.5 * (lo + hi)))))
        return segs

    @property
    def sup_norm(self) -> float:
        return max(v for _, _, v in self.profile_segments())

    @property
    def min_value(self) -> float:
        return min(v for _, _, v in self.profile_segments())

    def describe(self) -> dict:
        d = {"type": "difference", "offset": self.offset, "parts": [list(p) for p in self.parts]}
        if self.table is not None:
            d["table"] = [float(v) for v in self.table]
        if self.small_world is not None:
            d["small_world"] = {
                "p": self.small_world.p,
                "r": self.small_world.r,
                "variant": self.small_world.variant,
            }
        return d


@dataclass(frozen=True, eq=False)
class GridKernel:
    """Kernel tabulated as an M x M symmetric step function on the unit square."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ParameterError("grid kernel must be a square matrix")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ParameterError("grid kernel must be finite and non-negative")
        if not np.array_equal(v, v.T):
            raise ParameterError("grid kernel must be symmetric")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    kind = "tabulated_grid"

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def evaluate(self, x, y):
        m = self.m
        ix = np.minimum((np.asarray(x, dtype=float) * m).astype(int), m - 1)
        iy = np.minimum((np.asarray(y, dtype=float) * m).astype(int), m - 1)
        out = self.values[ix, iy]
        return out if np.ndim(out) else float(out)

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.values))

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))

    def describe(self) -> dict:
        return {"type": "grid", "m": self.m}


def constant_kernel(value: float) -> DifferenceKernel:
    if value < 0 or not math.isfinite(value):
        raise ParameterError("constant kernel value must be finite and >= 0")
    return DifferenceKernel(offset=value)


def indicator_kernel(s: float, coefficient: float = 1.0) -> DifferenceKernel:
    return DifferenceKernel(parts=((coefficient, s),))


def tabulated_profile_kernel(cell_values) -> DifferenceKernel:
    return DifferenceKernel(table=np.asarray(cell_values, dtype=float))


def small_world_kernel(params: SmallWorldParams) -> DifferenceKernel:
    """Mixture p * G_{1/2} + (1 - 2p) * G_r for either variant."""
    return DifferenceKernel(
        parts=((params.p, 0.5), (1.0 - 2.0 * params.p, params.r)),
        small_world=params,
    )


def fourier_coefficient(kernel, m: int) -> complex:
    """m-th Fourier coefficient of the difference profile.

    Integral over [0, 1] of prof(x) * exp(2 pi i m x) dx.  Indicator
    components use the closed form (2s at m == 0, sin(2 pi m s)/(pi m)
    otherwise); tabulated profiles are integrated piece by piece.  Even
    profiles have exactly real coefficients; the mixture path returns
    imaginary part 0 by construction.
    """
    if not isinstance(m, (int, np.integer)):
        raise ParameterError("mode index must be an integer")
    if not isinstance(kernel, DifferenceKernel):
        raise ParameterError("fourier_coefficient needs a difference kernel")
    m = int(m)
    if m == 0:
        real = kernel.offset + sum(c * 2.0 * s for c, s in kernel.parts)
    else:
        real = sum(c * math.sin(2.0 * math.pi * m * s) / (math.pi * m) for c, s in kernel.parts)
    imag = 0.0
    if kernel.table is not None:
        mm = len(kernel.table)
        edges = np.arange(mm + 1) / mm
        if m == 0:
            real += float(np.sum(kernel.table)) / mm
        else:
            w = 2.0 * math.pi * m
            sin_e = np.sin(w * edges)
            cos_e = np.cos(w * edges)
            real += float(np.dot(kernel.table, (sin_e[1:] - sin_e[:-1]))) / w
            imag += float(np.dot(kernel.table, -(cos_e[1:] - cos_e[:-1]))) / w
    return complex(real, imag)


def spectral_difference(kernel, m: int) -> float:
    """Fourier coefficient difference coef(m) - coef(0); < 0 off m == 0
    for every non-trivial non-negative profile."""
    if m == 0:
        raise ParameterError("spectral difference is defined for m != 0")
    return (fourier_coefficient(kernel, m) - fourier_coefficient(kernel, 0)).real


def save_grid_kernel_csv(kernel: GridKernel, path):
    """Header-free M x M CSV, row-major, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in kernel.values:
            writer.writerow([format(v, ".17g") for v in row])


def load_grid_kernel_csv(path) -> GridKernel:
    with open(path, newline="") as fh:
        rows = [[float(cell) for cell in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ParameterError(f"empty kernel table {path}")
    return GridKernel(np.asarray(rows))

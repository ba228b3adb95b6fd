"""Finite coupling graphs: constructors, graphon sampling, step kernels.

A graph on n nodes is a finite non-negative coupling matrix.  Graphs are
read out of a graphon kernel either deterministically, by evaluating the
kernel at the grid points (k/n, l/n) for 1-based k, l, or randomly, by
drawing independent Bernoulli edges with those evaluations as success
probabilities.  The random draw uses the counter-based Philox generator
keyed by (seed, n) with a fixed upper-triangle layout, so the uniform
behind edge (k, l) is a pure function of (seed, n, k, l) regardless of
iteration or scheduling order.

The step kernel of a graph is the piecewise-constant kernel equal to
weight[k, l] on the cell [k/n, (k+1)/n) x [l/n, (l+1)/n); L2 distances
between step kernels and difference kernels are computed exactly from
common refinements, never by quadrature.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import piecewise
from .errors import ParameterError
from .graphons import DifferenceKernel, GridKernel

PROVENANCES = ("explicit", "from_graphon", "sampled")


@dataclass(frozen=True, eq=False)
class CouplingGraph:
    """Finite coupling matrix with provenance metadata.

    The diagonal is stored as zero throughout: D(0) = 0 makes any
    self-coupling inert, and keeping it zero makes sampled and averaged
    matrices directly comparable.
    """

    weights: np.ndarray
    provenance: str = "explicit"
    seed: Optional[int] = None
    kernel_meta: Optional[dict] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise ParameterError("weights must be a square matrix")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("weights must be finite and >= 0")
        if np.any(np.diagonal(w) != 0.0):
            raise ParameterError("diagonal weights must be stored as 0")
        if self.provenance not in PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class StepKernel:
    """Piecewise-constant kernel on n x n uniform cells of the unit square."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError("step kernel must be a square matrix")
        if not np.all(np.isfinite(v)):
            raise ParameterError("step kernel must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    kind = "step"

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def evaluate(self, x, y):
        n = self.n
        ix = np.minimum((np.asarray(x, dtype=float) * n).astype(int), n - 1)
        iy = np.minimum((np.asarray(y, dtype=float) * n).astype(int), n - 1)
        out = self.values[ix, iy]
        return out if np.ndim(out) else float(out)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def ring_distance(n: int, k: int, l: int) -> int:
    """Cyclic distance between 1-based node labels k, l on an n-ring."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not (1 <= k <= n and 1 <= l <= n):
        raise ParameterError("node labels must lie in [1, n]")
    d = abs(k - l)
    return min(d, n - d)


def nearest_neighbour_graph(n: int, m: int) -> CouplingGraph:
    """Ring of n nodes, unit edges to the m nearest neighbours per side."""
    if n < 3:
        raise ParameterError("n must be >= 3")
    if not 0 < m < n / 2:
        raise ParameterError("m must satisfy 0 < m < n/2")
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    d = np.minimum(d, n - d)
    w = ((d >= 1) & (d <= m)).astype(float)
    return CouplingGraph(w, provenance="explicit")


def _grid_values(kernel, n: int) -> np.ndarray:
    """Kernel evaluations at (k/n, l/n), 1-based k, l; diagonal included."""
    x = np.arange(1, n + 1) / n
    return np.asarray(kernel.evaluate(x[:, None], x[None, :]), dtype=float)


def graph_from_graphon(kernel, n: int) -> CouplingGraph:
    """Deterministic weighted graph read from a kernel at grid points.

    weight[k, l] = kernel(k/n, l/n) with 1-based labels; diagonal zeroed.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    w = _grid_values(kernel, n)
    if np.any(w < 0):
        raise ParameterError("kernel evaluations must be >= 0")
    np.fill_diagonal(w, 0.0)
    return CouplingGraph(w, provenance="from_graphon", kernel_meta=kernel.describe())


def averaged_graph(kernel, n: int) -> CouplingGraph:
    """Expected adjacency of the Bernoulli sampling: same grid evaluations."""
    return graph_from_graphon(kernel, n)


def edge_uniform_matrix(seed: int, n: int) -> np.ndarray:
    """Symmetric matrix of uniforms, one per unordered pair incl. diagonal.

    Philox keyed through SeedSequence([seed, n]); the upper triangle
    (k <= l) is drawn in one call in fixed row-major order, then
    mirrored.  Reproducible by construction for every (seed, n, k, l).
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    bitgen = np.random.Philox(seed=np.random.SeedSequence([int(seed), int(n)]))
    rng = np.random.Generator(bitgen)
    u = np.zeros((n, n))
    iu = np.triu_indices(n)
    u[iu] = rng.random(len(iu[0]))
    u = u + np.triu(u, 1).T
    return u


def sample_k_random_graph(kernel, n: int, seed: int) -> CouplingGraph:
    """{0, 1} graph with independent edges, P(edge k~l) = kernel(k/n, l/n).

    Symmetric; diagonal stored 0.  Degenerate probabilities reproduce the
    deterministic graph exactly (u < 1 always holds, u < 0 never).
    """
    p = _grid_values(kernel, n)
    if np.any(p < 0) or np.any(p > 1):
        raise ParameterError("sampling needs kernel values within [0, 1]")
    u = edge_uniform_matrix(seed, n)
    w = (u < p).astype(float)
    np.fill_diagonal(w, 0.0)
    return CouplingGraph(w, provenance="sampled", seed=int(seed), kernel_meta=kernel.describe())


def sampled_deviation_matrix(kernel, n: int, seed: int) -> np.ndarray:
    """Expected minus sampled adjacency, diagonal entry included.

    Every row then holds n independent centered Bernoulli deviations,
    matching the product probability space over unordered pairs including
    the diagonal.  Shares its uniforms with sample_k_random_graph, so the
    off-diagonal of (averaged - sampled) weights coincides entry for
    entry.
    """
    p = _grid_values(kernel, n)
    if np.any(p < 0) or np.any(p > 1):
        raise ParameterError("sampling needs kernel values within [0, 1]")
    u = edge_uniform_matrix(seed, n)
    return p - (u < p).astype(float)


def step_kernel(graph: CouplingGraph) -> StepKernel:
    """Step kernel holding the graph's weights (zero diagonal) cell-wise."""
    return StepKernel(graph.weights)


def point_sampled_step_kernel(kernel, n: int) -> StepKernel:
    """Step kernel of the raw grid evaluations, diagonal cells included."""
    return StepKernel(_grid_values(kernel, n))


def _as_step_values(obj):
    if isinstance(obj, StepKernel):
        return obj.values
    if isinstance(obj, GridKernel):
        return obj.values
    if isinstance(obj, CouplingGraph):
        return obj.weights
    return None


def l2_kernel_distance(a, b) -> float:
    """Exact L2(I x I) distance between kernels.

    Accepts any mix of StepKernel / GridKernel / CouplingGraph (read as
    its step kernel) / DifferenceKernel.  Step-step pairs integrate over
    the common grid refinement; step-difference pairs use the tent
    integrals of the profile over diagonal cell bands; difference pairs
    reduce to one-dimensional profile integrals via periodicity.
    """
    va, vb = _as_step_values(a), _as_step_values(b)

    def _inner(x_vals, y_vals, x_obj, y_obj):
        if x_vals is not None and y_vals is not None:
            return piecewise.step_inner_2d(x_vals, y_vals)
        if x_vals is not None:
            return piecewise.step_profile_inner_2d(x_vals, y_obj.profile_segments())
        if y_vals is not None:
            return piecewise.step_profile_inner_2d(y_vals, x_obj.profile_segments())
        return piecewise.profile_product_integral(x_obj.profile_segments(), y_obj.profile_segments())

    for obj, vals in ((a, va), (b, vb)):
        if vals is None and not isinstance(obj, DifferenceKernel):
            raise ParameterError(f"cannot measure kernel of type {type(obj).__name__}")
    aa = _inner(va, va, a, a)
    bb = _inner(vb, vb, b, b)
    ab = _inner(va, vb, a, b)
    return float(np.sqrt(max(aa - 2.0 * ab + bb, 0.0)))


def save_graph(graph: CouplingGraph, csv_path, descriptor_path=None):
    """Header-free adjacency CSV (17 significant digits) + JSON descriptor."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in graph.weights:
            writer.writerow([format(v, ".17g") for v in row])
    if descriptor_path is not None:
        descriptor = {
            "n": graph.n,
            "provenance": graph.provenance,
            "seed": graph.seed,
            "kernel": graph.kernel_meta,
        }
        with open(descriptor_path, "w") as fh:
            json.dump(descriptor, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_graph(csv_path, descriptor_path=None) -> CouplingGraph:
    with open(csv_path, newline="") as fh:
        rows = [[float(cell) for cell in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ParameterError(f"empty adjacency file {csv_path}")
    provenance, seed, meta = "explicit", None, None
    if descriptor_path is not None:
        with open(descriptor_path) as fh:
            d = json.load(fh)
        if d.get("n") != len(rows):
            raise ParameterError("descriptor n does not match adjacency size")
        provenance = d.get("provenance", "explicit")
        seed = d.get("seed")
        meta = d.get("kernel")
    return CouplingGraph(np.asarray(rows), provenance=provenance, seed=seed, kernel_meta=meta)

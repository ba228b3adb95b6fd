"""Exact integration of piecewise-constant profiles and step functions.

Everything in this module is closed-form: integrals are evaluated with
antiderivatives on the pieces of the integrand, never with quadrature
rules.  Profiles are piecewise-constant functions on [0, 1] given as
ascending (lo, hi, value) segments; they are read as 1-periodic wherever
an argument leaves [0, 1].  Step functions on [0, 1] are value arrays on
n uniform cells [k/n, (k+1)/n).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = [
    "segment_edges",
    "profile_value_at",
    "profile_integral",
    "profile_product_integral",
    "tent_integrals",
    "step_common_refinement",
    "step_l2_distance_1d",
    "series_l2_distance",
    "step_inner_2d",
    "step_profile_inner_2d",
    "wrapped_diagonal_sums",
]


def segment_edges(segments):
    """Edge array [e_0, ..., e_m] and value array of a segment list."""
    edges = np.empty(len(segments) + 1)
    values = np.empty(len(segments))
    for i, (lo, hi, v) in enumerate(segments):
        edges[i] = lo
        values[i] = v
        if hi <= lo:
            raise ParameterError("segments must have positive width")
    edges[-1] = segments[-1][1]
    if abs(edges[0]) > 1e-15 or abs(edges[-1] - 1.0) > 1e-15:
        raise ParameterError("segments must cover [0, 1]")
    return edges, values


def profile_value_at(segments, u):
    """Evaluate a 1-periodic piecewise-constant profile at u (array ok)."""
    edges, values = segment_edges(segments)
    uu = np.asarray(u, dtype=float)
    frac = uu - np.floor(uu)
    idx = np.searchsorted(edges, frac, side="right") - 1
    idx = np.clip(idx, 0, len(values) - 1)
    out = values[idx]
    return out if out.ndim else float(out)


def profile_integral(segments):
    return float(sum(v * (hi - lo) for lo, hi, v in segments))


def _merged(seg_a, seg_b):
    edges_a, vals_a = segment_edges(seg_a)
    edges_b, vals_b = segment_edges(seg_b)
    cuts = np.union1d(edges_a, edges_b)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    ia = np.clip(np.searchsorted(edges_a, mids, side="right") - 1, 0, len(vals_a) - 1)
    ib = np.clip(np.searchsorted(edges_b, mids, side="right") - 1, 0, len(vals_b) - 1)
    widths = np.diff(cuts)
    return widths, vals_a[ia], vals_b[ib]


def profile_product_integral(seg_a, seg_b):
    """Integral over [0, 1] of the product of two piecewise-constant profiles."""
    widths, va, vb = _merged(seg_a, seg_b)
    return float(np.dot(widths, va * vb))


def _extended(segments):
    """Segments tiled onto [-1, 2] for the 1-periodic extension."""
    out = []
    for shift in (-1.0, 0.0, 1.0):
        out.extend((lo + shift, hi + shift, v) for lo, hi, v in segments)
    return out


def tent_integrals(segments, n):
    """J[d] = integral of prof(u) * (h - |u - d h|) over [dh - h, dh + h].

    h = 1/n.  J[d] equals the integral of the 1-periodic difference
    profile over the square cell [k h, (k+1) h] x [l h, (l+1) h] whenever
    (k - l) mod n == d; the tent weight is the length of the diagonal
    fibre {x - y = u} inside the cell.  J is even: J[d] == J[n - d].
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    h = 1.0 / n
    ext = _extended(segments)
    edges = np.array([s[0] for s in ext] + [ext[-1][1]])
    vals = np.array([s[2] for s in ext])

    def _one(d):
        c = d * h
        a, b = c - h, c + h
        cuts = edges[(edges > a) & (edges < b)]
        pts = np.unique(np.concatenate(([a], cuts, [c], [b])))
        pts = pts[(pts >= a) & (pts <= b)]
        total = 0.0
        for u0, u1 in zip(pts[:-1], pts[1:]):
            if u1 <= u0:
                continue
            mid = 0.5 * (u0 + u1)
            i = np.searchsorted(edges, mid, side="right") - 1
            v = vals[min(max(i, 0), len(vals) - 1)]
            if mid <= c:
                # tent = h - c + u on [a, c]
                total += v * ((h - c) * (u1 - u0) + 0.5 * (u1 * u1 - u0 * u0))
            else:
                # tent = h + c - u on [c, b]
                total += v * ((h + c) * (u1 - u0) - 0.5 * (u1 * u1 - u0 * u0))
        return total

    half = n // 2
    J = np.empty(n)
    for d in range(half + 1):
        J[d] = _one(d)
    for d in range(half + 1, n):
        J[d] = J[n - d]  # evenness of the profile, exact symmetry
    return J


def step_common_refinement(n_a, n_b):
    """Common refinement of two uniform grids on [0, 1].

    Returns (widths, idx_a, idx_b): segment widths and, per segment, the
    source cell index in each grid.
    """
    edges = np.union1d(np.arange(n_a + 1) / n_a, np.arange(n_b + 1) / n_b)
    mids = 0.5 * (edges[:-1] + edges[1:])
    idx_a = np.minimum((mids * n_a).astype(int), n_a - 1)
    idx_b = np.minimum((mids * n_b).astype(int), n_b - 1)
    return np.diff(edges), idx_a, idx_b


def step_l2_distance_1d(a, b):
    """Exact L2(0, 1) distance between two step functions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape == b.shape:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    w, ia, ib = step_common_refinement(len(a), len(b))
    return float(np.sqrt(np.dot(w, (a[ia] - b[ib]) ** 2)))


def series_l2_distance(A, B):
    """Per-row L2(0, 1) distances between two step-function time series.

    A is (T, n_a), B is (T, n_b); rows are snapshots on uniform grids.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[0] != B.shape[0]:
        raise ParameterError("series must share their time grid")
    if A.shape == B.shape:
        return np.sqrt(np.mean((A - B) ** 2, axis=1))
    w, ia, ib = step_common_refinement(A.shape[1], B.shape[1])
    diff = A[:, ia] - B[:, ib]
    return np.sqrt(diff * diff @ w)


def step_inner_2d(A, B):
    """Exact integral over the unit square of the product of two step kernels."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape == B.shape:
        return float(np.sum(A * B)) / (A.shape[0] * A.shape[1])
    w, ia, ib = step_common_refinement(A.shape[0], B.shape[0])
    prod = A[np.ix_(ia, ia)] * B[np.ix_(ib, ib)]
    return float(w @ prod @ w)


def wrapped_diagonal_sums(values):
    """s[d] = sum of values[k, l] over (k - l) mod n == d."""
    values = np.asarray(values)
    n = values.shape[0]
    s = np.empty(n)
    for d in range(n):
        s[d] = values.diagonal(-d).sum()
        if d:
            s[d] += values.diagonal(n - d).sum()
    return s


def step_profile_inner_2d(values, segments):
    """Integral over the unit square of step_kernel(x, y) * prof(x - y).

    Exact: the profile integral over the cell with diagonal offset d is
    the tent integral J[d], so the double integral collapses to wrapped
    diagonal sums.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    J = tent_integrals(segments, n)
    return float(np.dot(J, wrapped_diagonal_sums(values)))

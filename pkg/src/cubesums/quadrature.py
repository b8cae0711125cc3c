"""Adaptive tensor-product quadrature for smooth compactly supported integrands.

Strategy: recursive bisection over axis-aligned cells with a fixed-order
Gauss-Legendre rule per cell; the error estimate for a cell is the difference
between a low- and a high-order rule.  Cells are split along their widest
axis until the total error estimate meets max(rel_tol * |value|, abs_floor).
Integrands are evaluated in batches (one call per refinement round), so the
callable must accept an (N, dim) array and return an (N,) array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadResult",
    "adaptive_integrate",
    "gauss_rule",
    "log_panel_rule",
    "scaled_gauss_nodes",
]

# seed-grid resolution per dimension; a too-coarse seed can miss thin support
_DEFAULT_SEED = {1: 32, 2: 16, 3: 8}


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1], read-only arrays."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _tensor_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on [0,1]^dim: points (order^dim, dim), weights."""
    x, w = gauss_rule(order)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wt = np.ones(order**dim)
    for axis in range(dim):
        wt *= np.meshgrid(*([w] * dim), indexing="ij")[axis].ravel()
    pts.setflags(write=False)
    wt.setflags(write=False)
    return pts, wt


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    n_evals: int
    n_cells: int


def _estimate(f, lows, highs, order):
    """Per-cell rule values: lows/highs (n, d) -> (n,) estimates."""
    ref, refw = _tensor_rule(order, lows.shape[1])
    widths = highs - lows
    pts = lows[:, None, :] + widths[:, None, :] * ref[None, :, :]
    vals = np.asarray(f(pts.reshape(-1, lows.shape[1])), dtype=float)
    vals = vals.reshape(lows.shape[0], -1)
    vol = np.prod(widths, axis=1)
    return (vals @ refw) * vol, vals.size


def adaptive_integrate(
    f,
    lo,
    hi,
    rel_tol: float = 1e-6,
    abs_floor: float = 1e-14,
    order: int = 8,
    order_hi: int | None = None,
    seed: int | None = None,
    max_evals: int = 80_000_000,
    max_rounds: int = 60,
) -> QuadResult:
    """Integrate f over the box [lo, hi] (dim 1..3) to the given tolerance.

    f maps an (N, dim) float array to an (N,) array.  Raises RuntimeError if
    the eval budget or round cap is hit before convergence.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    dim = lo.size
    if dim not in (1, 2, 3):
        raise ValueError(f"dimension {dim} not supported")
    if np.any(hi <= lo):
        raise ValueError("empty box")
    if order_hi is None:
        order_hi = order + 3
    n_seed = seed if seed is not None else _DEFAULT_SEED[dim]

    # seed grid: n_seed slices per axis
    edges = [np.linspace(lo[k], hi[k], n_seed + 1) for k in range(dim)]
    mesh_lo = np.meshgrid(*[e[:-1] for e in edges], indexing="ij")
    mesh_hi = np.meshgrid(*[e[1:] for e in edges], indexing="ij")
    lows = np.stack([m.ravel() for m in mesh_lo], axis=-1)
    highs = np.stack([m.ravel() for m in mesh_hi], axis=-1)

    n_evals = 0
    coarse, used = _estimate(f, lows, highs, order)
    n_evals += used
    fine, used = _estimate(f, lows, highs, order_hi)
    n_evals += used
    values = fine
    errors = np.abs(fine - coarse)

    for _ in range(max_rounds):
        total = math.fsum(values)
        tol = max(rel_tol * abs(total), abs_floor)
        total_err = float(np.sum(errors))
        if total_err <= tol:
            return QuadResult(total, total_err, n_evals, len(values))
        # split every cell holding more than its equidistributed share
        split = errors > tol / (2 * len(values))
        keep_v, keep_e = values[~split], errors[~split]
        keep_lo, keep_hi = lows[~split], highs[~split]
        s_lo, s_hi = lows[split], highs[split]
        widths = s_hi - s_lo
        axis = np.argmax(widths, axis=1)
        mid = s_lo.copy()
        mid[np.arange(len(s_lo)), axis] += widths[np.arange(len(s_lo)), axis] / 2
        left_hi = s_hi.copy()
        left_hi[np.arange(len(s_lo)), axis] = mid[np.arange(len(s_lo)), axis]
        new_lo = np.concatenate([s_lo, mid])
        new_hi = np.concatenate([left_hi, s_hi])
        if n_evals + 2 * len(new_lo) * (order**dim + order_hi**dim) > max_evals:
            raise RuntimeError(
                f"quadrature exceeded eval budget at error {total_err:.3e} (target {tol:.3e})"
            )
        coarse, used = _estimate(f, new_lo, new_hi, order)
        n_evals += used
        fine, used = _estimate(f, new_lo, new_hi, order_hi)
        n_evals += used
        lows = np.concatenate([keep_lo, new_lo])
        highs = np.concatenate([keep_hi, new_hi])
        values = np.concatenate([keep_v, fine])
        errors = np.concatenate([keep_e, np.abs(fine - coarse)])
    raise RuntimeError(f"quadrature failed to converge in {max_rounds} rounds")


@lru_cache(maxsize=None)
def log_panel_rule(lo: float, hi: float, panels: int, order: int):
    """Nodes r_j and weights w_j with sum w_j f(r_j) ~ int_lo^hi f(r) dr/r.

    Composite Gauss-Legendre in u = log r with `panels` equal panels.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    x, w = gauss_rule(order)
    u_edges = np.linspace(math.log(lo), math.log(hi), panels + 1)
    du = u_edges[1] - u_edges[0]
    u = (u_edges[:-1, None] + du * x[None, :]).ravel()
    wt = np.broadcast_to(w * du, (panels, order)).ravel().copy()
    r = np.exp(u)
    r.setflags(write=False)
    wt.setflags(write=False)
    return r, wt


def scaled_gauss_nodes(lo: np.ndarray, hi: np.ndarray, order: int):
    """Row-wise Gauss nodes: lo/hi (N,) -> nodes (N, order), weights (N, order).

    sum_j weights[i,j] f(nodes[i,j]) ~ int_{lo[i]}^{hi[i]} f.  Rows with
    hi <= lo get zero weights.
    """
    x, w = gauss_rule(order)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    span = np.maximum(hi - lo, 0.0)
    nodes = lo[:, None] + span[:, None] * x[None, :]
    weights = span[:, None] * w[None, :]
    return nodes, weights

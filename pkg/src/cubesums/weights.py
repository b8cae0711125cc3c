"""Smooth compactly supported weights on R^3 for cube-sum counting.

The basic cutoffs are exp-based smoothsteps: ramp(x) = exp(-1/x) for x > 0,
step = ramp(x)/(ramp(x)+ramp(1-x)), then

    w0(t) = step(3 - |t|)            (1 on [-2,2], 0 outside (-3,3))
    w2(t) = step(2t - 1) step(11 - t) (1 on [1,10], 0 outside (1/2,11))

The main weight family nu_star(R) integrates the product of w2 over the six
linear forms |y_l|, |y_i + y_j| against dr/r for r in [1, R], times w0(F0(y)).
Its support avoids all six hyperplanes y_l = 0, y_i + y_j = 0 (very clean),
is S3-symmetric and even, lies in 1/2 <= ||y||_inf <= 11R, and forces
|F0(y)| < 3.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .quadrature import gauss_rule

__all__ = [
    "BumpSpec",
    "DEFAULT_BUMPS",
    "Weight",
    "bump",
    "f0",
    "nu_star",
    "nu_star_support_volume",
    "ramp",
    "sample_support_candidates",
    "sobolev_estimate",
    "step",
]

_CHUNK = 16384


def f0(y: np.ndarray) -> np.ndarray:
    """Sum of cubes of the last axis.

    The cubes are added in increasing-magnitude order, which makes the float
    result exactly invariant under coordinate permutations and exactly odd
    under y -> -y (IEEE addition commutes with global negation).
    """
    arr = np.asarray(y, dtype=float)
    c = arr * arr * arr  # explicit multiplies: exactly odd, unlike pow()
    order = np.argsort(np.abs(c), axis=-1, kind="stable")
    d = np.take_along_axis(c, order, axis=-1)
    return (d[..., 0] + d[..., 1]) + d[..., 2]


def ramp(x):
    """exp(-1/x) for x > 0, else 0; smooth on all of R."""
    arr = np.asarray(x, dtype=float)
    out = np.zeros_like(arr)
    m = arr > 0
    out[m] = np.exp(-1.0 / arr[m])
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def step(x):
    """Smooth 0-to-1 transition on [0, 1]."""
    arr = np.asarray(x, dtype=float)
    out = _step_core(arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def _step_core(arr: np.ndarray) -> np.ndarray:
    out = np.empty_like(arr)
    lo = arr <= 0.0
    hi = arr >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if mid.any():
        xm = arr[mid]
        a = np.exp(-1.0 / xm)
        out[mid] = a / (a + np.exp(-1.0 / (1.0 - xm)))
    return out


@dataclass(frozen=True)
class BumpSpec:
    """Plateau and support intervals of the named cutoffs."""

    w0_plateau: tuple[float, float] = (-2.0, 2.0)
    w0_support: tuple[float, float] = (-3.0, 3.0)
    w2_plateau: tuple[float, float] = (1.0, 10.0)
    w2_support: tuple[float, float] = (0.5, 11.0)


DEFAULT_BUMPS = BumpSpec()


def bump(kind: str, t):
    """Evaluate a named cutoff; only the transition bands need any exp."""
    arr = np.asarray(t, dtype=float)
    scalar = np.isscalar(t) or arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.zeros_like(arr)
    if kind == "w0":
        at = np.abs(arr)
        out[at <= 2.0] = 1.0
        mid = (at > 2.0) & (at < 3.0)
        if mid.any():
            out[mid] = _step_core(3.0 - at[mid])
    elif kind == "w2":
        out[(arr >= 1.0) & (arr <= 10.0)] = 1.0
        rise = (arr > 0.5) & (arr < 1.0)
        if rise.any():
            out[rise] = _step_core(2.0 * arr[rise] - 1.0)
        fall = (arr > 10.0) & (arr < 11.0)
        if fall.any():
            out[fall] = _step_core(11.0 - arr[fall])
    else:
        raise ValueError(f"unknown bump kind {kind!r}")
    return float(out[0]) if scalar else out


@dataclass
class Weight:
    """A smooth weight nu: R^3 -> R_{>=0} with its support metadata.

    evaluate maps an (N, 3) float array to an (N,) array.  a_support bounds
    |F0| on the support (the w0 factor); B bounds ||y||_inf from above and
    1/B from below when very_clean.
    """

    name: str
    R: float
    B: int
    clean: bool
    very_clean: bool
    symmetric: bool
    a_support: float
    evaluate: Callable[[np.ndarray], np.ndarray]
    _sobolev: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, y):
        arr = np.asarray(y, dtype=float)
        if arr.ndim == 1:
            return float(self.evaluate(arr[None, :])[0])
        return self.evaluate(arr)

    def sobolev_est(self, k: int) -> float:
        """Sampled sup-norm estimate of all partials of order <= k (k <= 4)."""
        if k not in self._sobolev:
            self._sobolev[k] = sobolev_estimate(self, k)
        return self._sobolev[k]


def _six_forms(y: np.ndarray) -> np.ndarray:
    """|y_l| and |y_i+y_j|, sorted per row so the value is exactly invariant
    under coordinate permutations and global sign flips."""
    forms = np.empty((len(y), 6))
    forms[:, 0:3] = np.abs(y)
    forms[:, 3] = np.abs(y[:, 0] + y[:, 1])
    forms[:, 4] = np.abs(y[:, 0] + y[:, 2])
    forms[:, 5] = np.abs(y[:, 1] + y[:, 2])
    forms.sort(axis=1)
    return forms


def _r_integral_fixed(forms: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                      panels: int, order: int) -> np.ndarray:
    """int_{lo_i}^{hi_i} prod_k w2(forms[i,k]/r) dr/r, composite GL in log r."""
    x, w = gauss_rule(order)
    offs = ((np.arange(panels)[:, None] + x[None, :]) / panels).ravel()
    wts = np.tile(np.asarray(w), panels) / panels
    out = np.empty(len(forms))
    for start in range(0, len(forms), _CHUNK):
        sl = slice(start, start + _CHUNK)
        span = np.log(hi[sl]) - np.log(lo[sl])
        r = np.exp(np.log(lo[sl])[:, None] + span[:, None] * offs[None, :])
        prod = bump("w2", forms[sl, 0][:, None] / r)
        for k in range(1, 6):
            prod *= bump("w2", forms[sl, k][:, None] / r)
        out[sl] = (prod @ wts) * span
    return out


@lru_cache(maxsize=None)
def _r_rule_params(R: float) -> tuple[int, int]:
    """Panel count for the r-integral, validated by panel doubling on a
    deterministic probe set (target 1e-9 absolute-ish agreement)."""
    pts = sample_support_candidates(R, 512, seed=1234)
    forms = _six_forms(pts)
    lo = np.maximum(forms[:, 5] / 11.0, 1.0)
    hi = np.minimum(2.0 * forms[:, 0], R)
    live = hi > lo
    forms, lo, hi = forms[live], lo[live], hi[live]
    order = 8
    panels = 8
    while panels <= 64:
        a = _r_integral_fixed(forms, lo, hi, panels, order)
        b = _r_integral_fixed(forms, lo, hi, 2 * panels, order)
        if np.max(np.abs(a - b), initial=0.0) <= 1e-9:
            return panels, order
        panels *= 2
    return panels, order


def nu_star(R: float) -> Weight:
    """The cusp-parameter weight: w0(F0) times the dr/r average of the six
    w2-cutoff linear forms over r in [1, R]."""
    if R < 2:
        raise ValueError(f"R must be >= 2, got {R}")
    R = float(R)

    def evaluate(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(len(pts))
        w0v = bump("w0", f0(pts))
        alive = w0v > 0.0
        if not alive.any():
            return out
        y = pts[alive]
        forms = _six_forms(y)
        # integrand vanishes unless all forms lie in r*(1/2, 11)
        lo = np.maximum(forms[:, 5] / 11.0, 1.0)
        hi = np.minimum(2.0 * forms[:, 0], R)
        live = hi > lo
        if live.any():
            panels, order = _r_rule_params(R)
            vals = np.zeros(len(y))
            vals[live] = _r_integral_fixed(forms[live], lo[live], hi[live],
                                           panels, order)
            out[alive] = w0v[alive] * vals
        return out

    return Weight(
        name="nu_star",
        R=R,
        B=math.ceil(11 * R),
        clean=True,
        very_clean=True,
        symmetric=True,
        a_support=3.0,
        evaluate=evaluate,
    )


def sample_support_candidates(R: float, n: int, seed: int = 0) -> np.ndarray:
    """Random points concentrated where nu_star(R) can be nonzero.

    (y2, y3) are drawn log-uniformly on [1/2, 11R] with random signs; y1 is
    then drawn uniformly from the exact interval making |F0| < 3.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(math.log(0.5), math.log(11 * R), size=(n, 2))
    yz = np.exp(u) * rng.choice([-1.0, 1.0], size=(n, 2))
    s = yz[:, 0] ** 3 + yz[:, 1] ** 3
    lo = np.cbrt(-3.0 - s)
    hi = np.cbrt(3.0 - s)
    y1 = lo + (hi - lo) * rng.uniform(0.0, 1.0, size=n)
    return np.column_stack([y1, yz])


def nu_star_support_volume(R: float, n: int = 200_000, seed: int = 0,
                           y1_samples: int = 16) -> float:
    """Monte-Carlo volume of {y: nu_star(R)(y) > 0}.

    Importance-samples (y2, y3) log-uniformly, then measures the exact
    y1-interval where |F0| < 3 and the sampled fraction of it on which some
    r in [1, R] puts all six forms inside the w2 support.
    """
    rng = np.random.default_rng(seed)
    lo_u, hi_u = math.log(0.5), math.log(11 * R)
    du = hi_u - lo_u
    u = rng.uniform(lo_u, hi_u, size=(n, 2))
    yz = np.exp(u) * rng.choice([-1.0, 1.0], size=(n, 2))
    s = yz[:, 0] ** 3 + yz[:, 1] ** 3
    a1 = np.cbrt(-3.0 - s)
    b1 = np.cbrt(3.0 - s)
    length = b1 - a1
    t = (np.arange(y1_samples) + 0.5) / y1_samples
    y1 = a1[:, None] + length[:, None] * t[None, :]
    pts = np.empty((n * y1_samples, 3))
    pts[:, 0] = y1.ravel()
    pts[:, 1] = np.repeat(yz[:, 0], y1_samples)
    pts[:, 2] = np.repeat(yz[:, 1], y1_samples)
    forms = _six_forms(pts)
    ok = (np.minimum(2.0 * forms[:, 0], R)
          > np.maximum(forms[:, 5] / 11.0, 1.0)).reshape(n, y1_samples)
    frac = ok.mean(axis=1)
    # 4 sign quadrants; |y2 y3| du^2 undoes the log-uniform importance law
    est = 4.0 * du**2 * np.abs(yz[:, 0] * yz[:, 1]) * length * frac
    return float(est.mean())


# central finite-difference stencils per derivative order
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def sobolev_estimate(weight: Weight, k: int, n_points: int = 500,
                     h: float = 0.02, seed: int = 7) -> float:
    """Sampled max over |alpha| <= k of sup |partial^alpha nu|.

    Finite differences with spacing h at random near-support points; a
    heuristic report, not a certified bound.
    """
    if not 0 <= k <= 4:
        raise ValueError("k must be in 0..4")
    pts = sample_support_candidates(weight.R, n_points, seed=seed)
    best = 0.0
    for alpha in itertools.product(range(k + 1), repeat=3):
        if sum(alpha) > k:
            continue
        acc = np.zeros(len(pts))
        scale = h ** sum(alpha)
        for offs_coeffs in itertools.product(*(
                zip(*_STENCILS[a]) for a in alpha)):
            offset = np.array([oc[0] for oc in offs_coeffs], dtype=float)
            coeff = math.prod(oc[1] for oc in offs_coeffs)
            acc += coeff * weight.evaluate(pts + h * offset)
        best = max(best, float(np.max(np.abs(acc))) / scale)
    return best

"""Exact lattice-point counting for F0(y) = y1^3 + y2^3 + y3^3.

count_weighted enumerates the integer points of the weight's support box,
binning nu(y/X) by the exact integer value a = F0(y).  Enumeration runs over
(leading, second) coordinate pairs; the third coordinate is recovered from
the exact cube-root interval |F0| <= a_support * X^3, so the cost is
proportional to the slab volume, not the box volume.

Weighted masses are floats, but every mass is a dyadic rational, so exact
arithmetic is available on demand: each nu value converts losslessly to an
integer at scale 2^-EXACT_SHIFT, and fiber products / special counts then
compare as integers.  The brute-force pair oracles used in tests rely on
this to assert equality exactly rather than to within a tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import primes_below
from .weights import Weight

__all__ = [
    "CountTable",
    "PrimeDemo",
    "SpecialCount",
    "count_weighted",
    "pair_count",
    "pair_count_bruteforce",
    "prime_demo",
    "r3_nonneg",
    "special_count",
]

EXACT_SHIFT = 1100  # nu values have denominator at most 2^1074
_ENUM_BOUND = 10**5
_MAX_BINS = 1 << 27
_WITNESS_CAP = 1000


def _dyadic_int(v: float) -> int:
    """Exact integer numerator of v at scale 2^-EXACT_SHIFT (v >= 0)."""
    f = Fraction(v)
    return f.numerator << (EXACT_SHIFT - (f.denominator.bit_length() - 1))


def _band_values(X: int, weight: Weight) -> np.ndarray:
    """Ascending integer values one support coordinate can take.

    For nu*-type weights every support point has |y_l|/X > 1/2 (the first w2
    band), so |y_l| >= X//2 + 1; generic weights only guarantee y_l != 0.
    """
    hmin = X // 2 + 1 if weight.name == "nu_star" else 1
    hmax = weight.B * X
    pos = np.arange(hmin, hmax + 1, dtype=np.int64)
    return np.concatenate([-pos[::-1], pos])


def _ragged_arange(lo: np.ndarray, hi: np.ndarray):
    """Concatenate arange(lo_i, hi_i + 1) for every row; also row indices."""
    n = np.maximum(hi - lo + 1, 0)
    ends = np.cumsum(n)
    total = int(ends[-1]) if len(ends) else 0
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    t = np.arange(total, dtype=np.int64)
    row = np.searchsorted(ends, t, side="right")
    starts = ends - n
    return lo[row] + (t - starts[row]), row


def _iter_alive(X: int, weight: Weight, order=(0, 1, 2), block: int = 1 << 17):
    """Yield (a, nu_values, points) blocks over the support lattice points.

    order permutes which coordinate is enumerated as (leading, second,
    solved); the visited point set is identical for any order, which the
    loop-order oracle exploits.
    """
    if not weight.clean:
        raise ValueError("lattice enumeration requires a clean weight")
    band = _band_values(X, weight)
    a_cap = int(math.floor(weight.a_support * X**3))
    m = len(band)
    # the support splits into a negative and a positive coordinate band
    pieces = ((int(band[0]), int(band[m // 2 - 1])),
              (int(band[m // 2]), int(band[-1])))
    for i in range(m):
        u = int(band[i])
        u3 = u**3
        for start in range(0, m, block):
            v = band[start:start + block]
            s = u3 + v**3
            lo_f = np.cbrt(float(-a_cap) - s.astype(float))
            hi_f = np.cbrt(float(a_cap) - s.astype(float))
            lo_i = np.ceil(lo_f).astype(np.int64) - 1  # widen against
            hi_i = np.floor(hi_f).astype(np.int64) + 1  # cbrt rounding
            for blo, bhi in pieces:
                w, row = _ragged_arange(np.maximum(lo_i, blo),
                                        np.minimum(hi_i, bhi))
                if not len(w):
                    continue
                a = s[row] + w**3  # exact int64
                keep = np.abs(a) <= a_cap
                if not keep.any():
                    continue
                w, row, a = w[keep], row[keep], a[keep]
                pts = np.empty((len(w), 3), dtype=np.int64)
                pts[:, order[0]] = u
                pts[:, order[1]] = v[row]
                pts[:, order[2]] = w
                nu = weight.evaluate(pts.astype(float) / X)
                alive = nu > 0.0
                if alive.any():
                    yield a[alive], nu[alive], pts[alive]


@dataclass
class CountTable:
    """Dense fiber table a -> N_{a,nu}(X) plus exact dyadic masses."""

    X: int
    weight_name: str
    R: float
    offset: int  # index of a = 0; valid a are |a| <= offset
    bins: np.ndarray  # float64 masses N_{a,nu}(X)
    point_counts: np.ndarray  # int64 number of contributing lattice points
    n_alive: int
    witnesses: np.ndarray  # (k, 4) rows [y1, y2, y3, a]
    exact: dict  # a -> integer mass at scale 2^-EXACT_SHIFT

    def value(self, a: int) -> float:
        if abs(a) > self.offset:
            return 0.0
        return float(self.bins[a + self.offset])

    def nonzero_items(self):
        idx = np.nonzero(self.bins)[0]
        return idx - self.offset, self.bins[idx]

    def total_mass(self) -> float:
        return float(self.bins.sum())

    def total_mass_exact(self) -> int:
        return sum(self.exact.values())

    def export_csv(self, path) -> None:
        a_vals, masses = self.nonzero_items()
        with open(path, "w") as fh:
            fh.write("a,N\n")
            for a, v in zip(a_vals, masses):
                fh.write(f"{a},{v:.17g}\n")


def count_weighted(X: int, weight: Weight, order=(0, 1, 2),
                   exact: bool = True) -> CountTable:
    """Weighted count N_{a,nu}(X) = sum over y in Z^3 of nu(y/X), per a.

    Deterministic: blocks are enumerated and accumulated in a fixed order.
    exact=False skips the dyadic-integer ledger (faster at large X).
    """
    if X < 1:
        raise ValueError("X must be a positive integer")
    if weight.B * X > _ENUM_BOUND:
        raise ValueError(
            f"enumeration bound exceeded: B*X = {weight.B * X} > {_ENUM_BOUND}")
    a_cap = int(math.floor(weight.a_support * X**3))
    if 2 * a_cap + 1 > _MAX_BINS:
        raise ValueError(
            f"dense fiber table would need {2 * a_cap + 1} bins; "
            f"reduce X (limit {_MAX_BINS})")
    bins = np.zeros(2 * a_cap + 1)
    point_counts = np.zeros(2 * a_cap + 1, dtype=np.int64)
    n_alive = 0
    witnesses = []
    exact_map: dict = {}
    for a, nu, pts in _iter_alive(X, weight, order=order):
        idx = a + a_cap
        np.add.at(bins, idx, nu)
        np.add.at(point_counts, idx, 1)
        n_alive += len(a)
        if len(witnesses) < _WITNESS_CAP:
            take = min(_WITNESS_CAP - len(witnesses), len(a))
            witnesses.extend(
                np.column_stack([pts[:take], a[:take]]).tolist())
        if exact:
            for ai, vi in zip(a.tolist(), nu.tolist()):
                n = _dyadic_int(vi)
                exact_map[ai] = exact_map.get(ai, 0) + n
    return CountTable(
        X=X, weight_name=weight.name, R=weight.R, offset=a_cap, bins=bins,
        point_counts=point_counts, n_alive=n_alive,
        witnesses=np.array(witnesses, dtype=np.int64).reshape(-1, 4),
        exact=exact_map,
    )


def pair_count(X: int, d: int, weight: Weight,
               table: CountTable | None = None) -> float:
    """N_{nu x nu}(X; d) = sum over d | a of N_{a,nu}(X)^2."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    if table is None:
        table = count_weighted(X, weight, exact=False)
    a_vals, masses = table.nonzero_items()
    keep = a_vals % d == 0
    return float(np.dot(masses[keep], masses[keep]))


def pair_count_exact(table: CountTable, d: int) -> int:
    """Exact pair count as an integer at scale 2^-(2*EXACT_SHIFT)."""
    if not table.exact:
        raise ValueError("table was built with exact=False")
    return sum(n * n for a, n in table.exact.items() if a % d == 0)


def pair_count_bruteforce(X: int, d: int, weight: Weight) -> int:
    """Oracle: enumerate ordered pairs (y, z) with F0(y) = F0(z) = a, d | a.

    Re-enumerates the lattice independently of any CountTable, groups the
    contributing points by fiber, and sums nu(y/X) * nu(z/X) over every
    ordered pair within each fiber (all cross-fiber terms vanish).  Returns
    the exact integer at scale 2^-(2*EXACT_SHIFT).
    """
    fibers: dict = {}
    for a, nu, _pts in _iter_alive(X, weight, order=(2, 0, 1)):
        for ai, vi in zip(a.tolist(), nu.tolist()):
            if ai % d == 0:
                fibers.setdefault(ai, []).append(_dyadic_int(vi))
    total = 0
    for vals in fibers.values():
        for vi in vals:
            for vj in vals:
                total += vi * vj
    return total


def exact_to_float(n: int, scale: int = EXACT_SHIFT) -> float:
    """Correctly rounded float of n * 2^-scale."""
    return float(Fraction(n, 1 << scale))


@dataclass(frozen=True)
class SpecialCount:
    """Mass of the permutation-diagonal pairs (y, z) with z a permutation
    of y, F0(y) = F0(z) automatic, restricted to d | F0(y)."""

    X: int
    d: int
    weight_name: str
    diag: float  # sum over y of (#distinct permutations of y) * nu(y/X)^2
    formula_value: float  # 3! * sum over y of nu(y/X)^2
    correction: float  # mass the 3!-formula overcounts on repeated coords
    n_repeated: int  # contributing y with a repeated coordinate


def special_count(X: int, d: int, weight: Weight) -> SpecialCount:
    """Exact diagonal count; diag + correction = formula_value exactly.

    Each unordered orbit member is one pair partner, so y contributes
    orb(y) * nu^2 with orb = 6, 3, 1 for distinct, one-repeated, all-equal
    coordinates; the 3!-formula pretends orb = 6 always.
    """
    if not (weight.symmetric and weight.very_clean):
        raise ValueError("special_count requires a symmetric very-clean weight")
    if d < 1:
        raise ValueError("d must be a positive integer")
    diag_i = formula_i = corr_i = 0
    n_repeated = 0
    for a, nu, pts in _iter_alive(X, weight):
        keep = a % d == 0
        if not keep.any():
            continue
        nu, pts = nu[keep], pts[keep]
        eq12 = pts[:, 0] == pts[:, 1]
        eq13 = pts[:, 0] == pts[:, 2]
        eq23 = pts[:, 1] == pts[:, 2]
        n_eq = eq12.astype(int) + eq13.astype(int) + eq23.astype(int)
        orb = np.where(n_eq == 0, 6, np.where(n_eq == 1, 3, 1))
        n_repeated += int(np.count_nonzero(n_eq))
        for vi, oi in zip(nu.tolist(), orb.tolist()):
            sq = _dyadic_int(vi) ** 2
            diag_i += oi * sq
            formula_i += 6 * sq
            corr_i += (6 - oi) * sq
    assert diag_i + corr_i == formula_i  # exact integer identity
    return SpecialCount(
        X=X, d=d, weight_name=weight.name,
        diag=exact_to_float(diag_i, 2 * EXACT_SHIFT),
        formula_value=exact_to_float(formula_i, 2 * EXACT_SHIFT),
        correction=exact_to_float(corr_i, 2 * EXACT_SHIFT),
        n_repeated=n_repeated,
    )


def _pair_sums(limit: int) -> dict:
    """Multiset {x^3 + y^3 <= limit : x, y >= 0} as value -> multiplicity."""
    top = int(round(limit ** (1.0 / 3.0))) + 1
    while top**3 > limit:
        top -= 1
    while (top + 1) ** 3 <= limit:
        top += 1
    cubes = np.arange(top + 1, dtype=np.int64) ** 3
    sums = (cubes[:, None] + cubes[None, :]).ravel()
    sums = sums[sums <= limit]
    vals, cnt = np.unique(sums, return_counts=True)
    return dict(zip(vals.tolist(), cnt.tolist()))


def r3_nonneg(a: int, cap: int | None = None) -> int:
    """Ordered representations a = x^3 + y^3 + z^3 with x, y, z >= 0."""
    if a < 0:
        raise ValueError("a must be nonnegative")
    if cap is not None and a > 3 * cap**3:
        raise ValueError(f"a = {a} exceeds 3*cap^3 = {3 * cap**3}")
    pairs = _pair_sums(a)
    total = 0
    z = 0
    while z**3 <= a:
        total += pairs.get(a - z**3, 0)
        z += 1
    return total


@dataclass(frozen=True)
class PrimeDemo:
    A: int
    n_primes: int
    sum_r3: int
    sum_r3_sq: int
    n_admissible_represented: int  # p not == +-4 mod 9 with r3(p) > 0
    fitted_constant: float  # C in sum r3(p) ~ C * A / log A


def prime_demo(A: int) -> PrimeDemo:
    """Exact sum of r3(p) over primes p <= A (nonnegative cubes)."""
    if not 2 <= A <= 10**6:
        raise ValueError("require 2 <= A <= 10^6")
    pairs = _pair_sums(A)
    pair_vals = np.fromiter(pairs.keys(), dtype=np.int64)
    pair_cnt = np.fromiter(pairs.values(), dtype=np.int64)
    lookup = np.zeros(A + 1, dtype=np.int64)
    lookup[pair_vals] = pair_cnt
    ps = np.array(primes_below(A + 1), dtype=np.int64)
    top = int(round(A ** (1.0 / 3.0))) + 1
    r3 = np.zeros(len(ps), dtype=np.int64)
    for z in range(top + 1):
        rem = ps - z**3
        ok = rem >= 0
        r3[ok] += lookup[rem[ok]]
    sum_r3 = int(r3.sum())
    admissible = ps % 9
    adm = (admissible != 4) & (admissible != 5)
    return PrimeDemo(
        A=A, n_primes=len(ps), sum_r3=sum_r3,
        sum_r3_sq=int(np.dot(r3, r3)),
        n_admissible_represented=int(np.count_nonzero(adm & (r3 > 0))),
        fitted_constant=sum_r3 * math.log(A) / A,
    )

"""K-approximate variance of weighted counts, and its exact companions.

Var(X, K; d) = sum over a in dZ of [N_{a,nu}(X) - s_a(K) sigma_inf(a, X)]^2.
Expanding the square gives Sigma1 - 2 Sigma2 + Sigma3, where Sigma1 is the
pair count, Sigma2 the cross term over represented a, and Sigma3 the full
window scan; all three come from the same CountTable / SeriesWindow /
DensityTable, so the identity is assertable numerically.

nonarch_moment_check verifies, in exact rational arithmetic, that the
truncated pure and mixed moments of the normalized complete sums T_b regroup
by m = lcm(n, d) into sum of S+_0(m; d) / m^6: complete groups (m <= K)
match term by term, cross terms with mismatched lcm vanish, and the
leftover is exactly the enumerated partial groups with K < m <= K d.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import factor, mobius, primes_below
from .densities import density_table, pure_l2_moment, sigma_inf, weight_l2_norm_sq
from .expsums import (
    g_density,
    point_count_vector,
    s_plus_zero,
    singular_series_level_d,
    t_full,
)
from .lattice import CountTable, count_weighted, pair_count, special_count
from .series import series_window
from .weights import Weight, nu_star

__all__ = [
    "HLErrorReport",
    "HypothesisParams",
    "MomentCheckReport",
    "PipelineReport",
    "PipelineRow",
    "SievedReport",
    "VarianceReport",
    "hl_error",
    "hl_error_trend",
    "nonarch_moment_check",
    "pipeline_demo",
    "sieved_variance",
    "singular_series_positive_scan",
    "variance",
]


@dataclass(frozen=True)
class HypothesisParams:
    """Experiment configuration; the hypothesis itself is never asserted."""

    xi: int = 1
    delta: float = 0.1
    k: int = 3
    hbar: float = 0.045

    def __post_init__(self):
        if self.xi not in (0, 1):
            raise ValueError("xi must be 0 or 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < self.hbar <= 9 * self.delta / 20:
            raise ValueError("hbar must lie in (0, 9*delta/20]")


@dataclass(frozen=True)
class VarianceReport:
    X: int
    K: int
    d: int
    R: float
    var_direct: float
    sigma1: float
    sigma2: float
    sigma3: float
    main_term: float
    special_term: float
    residual: float  # sigma1 - main_term - special_term
    decomposition_rel_err: float
    wall_time: float


def _window_vectors(table: CountTable, K: int, d: int, dtable):
    """Aligned (a, N, s, sigma) vectors over a in dZ, |a| <= table.offset."""
    a_cap = table.offset
    i0 = a_cap % d  # a = -a_cap + i is divisible by d iff i = a_cap mod d
    win = series_window(K, -a_cap, a_cap)
    N = table.bins[i0::d]
    a_vec = -a_cap + i0 + d * np.arange(len(N), dtype=np.int64)
    s = win.s[i0::d]
    sig = dtable(a_vec / float(table.X) ** 3)
    return a_vec, N, s, sig


def variance(X: int, K: int, d: int, weight: Weight,
             table: CountTable | None = None,
             with_special: bool = True) -> VarianceReport:
    """K-approximate variance over the progression dZ, with decomposition."""
    if K < 1 or d < 1:
        raise ValueError("need K >= 1 and d >= 1")
    if K * d > X ** 0.9:
        warnings.warn(f"K*d = {K * d} exceeds X^(9/10) = {X ** 0.9:.1f}; "
                      "the variance asymptotic is not expected to apply")
    t0 = time.perf_counter()
    if table is None:
        table = count_weighted(X, weight, exact=False)
    dtab = density_table(weight)
    _a, N, s, sig = _window_vectors(table, K, d, dtab)
    ssig = s * sig
    diff = N - ssig
    var_direct = float(np.dot(diff, diff))
    sigma1 = pair_count(X, d, weight, table=table)
    mask = N > 0.0
    sigma2 = float(np.dot(N[mask], ssig[mask]))
    sigma3 = float(np.dot(ssig, ssig))
    decomposed = sigma1 - 2.0 * sigma2 + sigma3
    rel = abs(var_direct - decomposed) / max(var_direct, 1e-300)
    series = singular_series_level_d(d, n_max=48)
    main_term = series.euler * pure_l2_moment(weight) * float(X) ** 3
    if with_special:
        special = special_count(X, d, weight).diag
    else:
        special = 0.0
    return VarianceReport(
        X=X, K=K, d=d, R=weight.R, var_direct=var_direct, sigma1=sigma1,
        sigma2=sigma2, sigma3=sigma3, main_term=main_term,
        special_term=special, residual=sigma1 - main_term - special,
        decomposition_rel_err=rel, wall_time=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class HLErrorReport:
    X: int
    d: int
    pair: float
    main_term: float
    special_diag: float
    E: float
    E_over_X3: float


def hl_error(X: int, d: int, weight: Weight,
             table: CountTable | None = None) -> HLErrorReport:
    """E(X; d) = pair_count - singular_series * pure_moment * X^3 - special."""
    if table is None:
        table = count_weighted(X, weight, exact=False)
    pair = pair_count(X, d, weight, table=table)
    series = singular_series_level_d(d, n_max=48)
    main = series.euler * pure_l2_moment(weight) * float(X) ** 3
    diag = special_count(X, d, weight).diag
    E = pair - main - diag
    return HLErrorReport(X=X, d=d, pair=pair, main_term=main,
                         special_diag=diag, E=E, E_over_X3=E / float(X) ** 3)


def hl_error_trend(d: int, weight: Weight,
                   Xs: tuple[int, ...] = (20, 30, 40, 60)) -> list[HLErrorReport]:
    """|E|/X^3 across growing X; reported, never asserted (conjectural)."""
    return [hl_error(X, d, weight) for X in Xs]


def singular_series_positive_scan(d_max: int = 50) -> float:
    """Min of the level-d singular series over d <= d_max (all positive)."""
    vals = [singular_series_level_d(d, n_max=max(24, d)).euler
            for d in range(1, d_max + 1)]
    low = min(vals)
    if low <= 0.0:
        raise AssertionError(f"nonpositive singular series in d <= {d_max}")
    return low


# --------------------------------------------------------------------------
# exact truncated moment identities


@dataclass(frozen=True)
class MomentCheckReport:
    K: int
    d: int
    pure_lhs: Fraction
    mixed_lhs: Fraction
    head: Fraction  # sum of S+_0(m; d)/m^6 over m <= K, d | m
    tail_pure: Fraction  # pure_lhs - head, = enumerated partial groups
    tail_mixed: Fraction
    tail_bound: Fraction  # sum of |S+_0(m; d)|/m^6 over K < m <= K*d
    n_pairs_vanished: int  # (n1, n2) pairs with lcm mismatch (checked = 0)
    groups_checked: int  # complete m-groups matched against S+_0 exactly


def _s_plus_over_m6(m: int, d: int) -> Fraction:
    return Fraction(s_plus_zero(m, d), m**6)


def nonarch_moment_check(K: int, d: int) -> MomentCheckReport:
    """Exact finite-level regrouping of the pure and mixed T_b moments.

    pure LHS = sum_{n1,n2 <= K} (n1 n2 d)^-1 sum_{b in dZ/n1 n2 dZ}
               T_b(n1) T_b(n2) / (n1 n2)^3,
    mixed LHS = sum_{n <= K} (nd)^-3 sum_{e in (Z/nd)^3, d | F0(e)}
               T_{F0(e)}(n) / n^3.

    Both regroup by m = lcm(n, d); every identity below is exact in Q.
    """
    if not (1 <= K <= 48 and 1 <= d <= 8):
        raise ValueError("exact mode limited to K <= 48, d <= 8")
    t_vecs = {n: t_full(n) for n in range(1, K + 1)}
    pure_groups: dict[int, Fraction] = {}
    n_vanished = 0
    for n1 in range(1, K + 1):
        t1 = t_vecs[n1]
        m1 = math.lcm(n1, d)
        for n2 in range(1, K + 1):
            t2 = t_vecs[n2]
            m2 = math.lcm(n2, d)
            c = np.arange(n1 * n2, dtype=np.int64)
            b = d * c
            S = int(np.sum(t1[b % n1] * t2[b % n2]))
            # modulus collapse: averaging over dZ/n1 n2 dZ equals averaging
            # over dZ/mZ with m = lcm(n1, n2, d)
            m12 = math.lcm(n1, n2, d)
            bb = np.arange(0, m12, d, dtype=np.int64)
            S_m = int(np.sum(t_vecs[n1][bb % n1] * t_vecs[n2][bb % n2]))
            if Fraction(S, n1 * n2 * d) != Fraction(S_m, m12):
                raise AssertionError(f"modulus collapse failed at {(n1, n2, d)}")
            if m1 != m2:
                if S != 0:
                    raise AssertionError(
                        f"unbalanced pair ({n1}, {n2}) did not vanish")
                n_vanished += 1
                continue
            term = Fraction(S, (n1 * n2) ** 3 * n1 * n2 * d)
            pure_groups[m1] = pure_groups.get(m1, Fraction(0)) + term
    mixed_groups: dict[int, Fraction] = {}
    for n in range(1, K + 1):
        nd = n * d
        counts = point_count_vector(nd)
        bs = np.arange(0, nd, d, dtype=np.int64)
        S = int(np.sum(counts[bs].astype(object) * t_vecs[n][bs % n]))
        mixed_groups.setdefault(math.lcm(n, d), Fraction(0))
        mixed_groups[math.lcm(n, d)] += Fraction(S, nd**3 * n**3)
    # complete groups (m <= K) must match S+_0(m; d)/m^6 one by one
    groups_checked = 0
    head = Fraction(0)
    for m in range(1, K + 1):
        if m % d:
            continue
        ref = _s_plus_over_m6(m, d)
        head += ref
        for label, groups in (("pure", pure_groups), ("mixed", mixed_groups)):
            got = groups.get(m, Fraction(0))
            if got != ref:
                raise AssertionError(
                    f"{label} group m={m} is {got}, expected {ref}")
        groups_checked += 1
    pure_lhs = sum(pure_groups.values(), Fraction(0))
    mixed_lhs = sum(mixed_groups.values(), Fraction(0))
    top = max(list(pure_groups) + list(mixed_groups), default=1)
    if top > K * d:
        raise AssertionError("found a regrouped modulus beyond K*d")
    tail_bound = sum((abs(_s_plus_over_m6(m, d))
                      for m in range(K + 1, K * d + 1) if m % d == 0),
                     Fraction(0))
    for label, tail in (("pure", pure_lhs - head), ("mixed", mixed_lhs - head)):
        if abs(tail) > tail_bound:
            raise AssertionError(
                f"{label} truncation tail {tail} exceeds the S+ bound")
    return MomentCheckReport(
        K=K, d=d, pure_lhs=pure_lhs, mixed_lhs=mixed_lhs, head=head,
        tail_pure=pure_lhs - head, tail_mixed=mixed_lhs - head,
        tail_bound=tail_bound, n_pairs_vanished=n_vanished,
        groups_checked=groups_checked,
    )


# --------------------------------------------------------------------------
# sieved variance and the pipeline demo


_L2_MEMO: dict = {}


def _weight_l2(weight: Weight) -> float:
    key = (weight.name, weight.R)
    if key not in _L2_MEMO:
        _L2_MEMO[key] = weight_l2_norm_sq(weight, rel_tol=1e-4)
    return _L2_MEMO[key]


@dataclass(frozen=True)
class SievedReport:
    X: int
    K: int
    hbar: float
    threshold: float  # X^hbar
    P: int  # product of primes below the threshold
    filtered: float  # variance restricted to gcd(a, P) = 1
    unfiltered: float
    comparison: float  # X^3 ||nu||_{L^2}^2 / log X
    H: Fraction  # sum over squarefree d < X^hbar of prod g/(1-g)
    H_over_log: float
    wall_time: float


def sieved_variance(X: int, K: int, hparams: HypothesisParams,
                    weight: Weight,
                    table: CountTable | None = None) -> SievedReport:
    """Variance over a coprime to all primes below X^hbar (exact filter)."""
    t0 = time.perf_counter()
    threshold = float(X) ** hparams.hbar
    if threshold > 20.0:
        raise ValueError(f"X^hbar = {threshold:.2f} exceeds the filter cap 20")
    sieve_primes = [p for p in primes_below(21) if p < threshold]
    P = math.prod(sieve_primes) if sieve_primes else 1
    if table is None:
        table = count_weighted(X, weight, exact=False)
    dtab = density_table(weight)
    a_vec, N, s, sig = _window_vectors(table, K, 1, dtab)
    diff = N - s * sig
    sq = diff * diff
    unfiltered = float(np.sum(sq))
    mask = np.ones(len(a_vec), dtype=bool)
    for p in sieve_primes:
        mask &= a_vec % p != 0
    filtered = float(np.sum(sq[mask]))
    comparison = float(X) ** 3 * _weight_l2(weight) / math.log(X)
    # every p | dd with dd < X^hbar is itself below the threshold
    H = Fraction(0)
    for dd in range(1, math.ceil(threshold)):
        if mobius(dd) == 0:
            continue
        prod = Fraction(1)
        for p, _e in factor(dd).factors:
            g = g_density(p)
            prod *= g / (1 - g)
        H += prod
    h_norm = float(H) / math.log(threshold) if threshold > 1.0 else float(H)
    return SievedReport(
        X=X, K=K, hbar=hparams.hbar, threshold=threshold, P=P,
        filtered=filtered, unfiltered=unfiltered, comparison=comparison,
        H=H, H_over_log=h_norm, wall_time=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class PipelineRow:
    X: int
    R: float
    A: int
    K: int
    eta: float
    n_admissible: int
    n_unrepresented: int
    unrepresented_fraction: float
    n_exceptional: int  # admissible, unrepresented, and |s_a(K)| > eta
    sigma_min: float  # min density over the exceptional set (0 if empty)
    chebyshev_lhs: float  # n_exceptional * (eta * sigma_min)^2
    var: float
    chebyshev_ok: bool
    var_normalized: float  # var / (X^3 (c log R)^2)


@dataclass(frozen=True)
class PipelineReport:
    j: int
    calibration_c: float
    rows: list[PipelineRow] = field(default_factory=list)

    def fractions_non_increasing_in_R(self, X: int) -> bool:
        fr = [r.unrepresented_fraction for r in self.rows if r.X == X]
        return all(b <= a + 1e-15 for a, b in zip(fr, fr[1:]))


def pipeline_demo(R_list=(2.0, 4.0), X_list=(60,), j: int = 2) -> PipelineReport:
    """Desk-scale Chebyshev pipeline: exceptional sets vs the variance.

    For each X: A = X^3, K = floor(A^(1/(6j))), eta = (log R)^(-10/j).
    The Chebyshev inequality n_exc * (eta * sigma_min)^2 <= Var(X, K; 1)
    is exact given the computed quantities and is asserted.
    """
    if max(X_list) > 100 or max(R_list) > 8:
        raise ValueError("pipeline demo limited to X <= 100, R <= 8")
    c_cal = sigma_inf(0.0, 1.0, nu_star(2.0)) / math.log(2.0)
    rows = []
    for X in X_list:
        A = X**3
        K = int(math.floor(A ** (1.0 / (6 * j))))
        for R in R_list:
            eta = math.log(R) ** (-10.0 / j)
            nu = nu_star(R)
            table = count_weighted(X, nu, exact=False)
            dtab = density_table(nu)
            a_vec, N, s, sig = _window_vectors(table, K, 1, dtab)
            window = np.abs(a_vec) <= A
            a_w, N_w, s_w = a_vec[window], N[window], s[window]
            sig_w = sig[window]
            res9 = a_w % 9
            adm = (res9 != 4) & (res9 != 5)
            unrep = adm & (N_w == 0.0)
            exc = unrep & (np.abs(s_w) > eta)
            n_exc = int(np.count_nonzero(exc))
            sigma_min = float(sig_w[exc].min()) if n_exc else 0.0
            rep = variance(X, K, 1, nu, table=table, with_special=False)
            lhs = n_exc * (eta * sigma_min) ** 2
            ok = lhs <= rep.var_direct * (1.0 + 1e-12)
            if not ok:
                raise AssertionError(
                    f"Chebyshev inequality failed at X={X}, R={R}")
            rows.append(PipelineRow(
                X=X, R=R, A=A, K=K, eta=eta,
                n_admissible=int(np.count_nonzero(adm)),
                n_unrepresented=int(np.count_nonzero(unrep)),
                unrepresented_fraction=float(np.count_nonzero(unrep))
                / max(int(np.count_nonzero(adm)), 1),
                n_exceptional=n_exc, sigma_min=sigma_min,
                chebyshev_lhs=lhs, var=rep.var_direct, chebyshev_ok=ok,
                var_normalized=rep.var_direct
                / (float(X) ** 3 * (c_cal * math.log(R)) ** 2),
            ))
    return PipelineReport(j=j, calibration_c=c_cal, rows=rows)

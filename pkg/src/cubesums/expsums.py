"""Complete exponential sums and p-adic densities for the ternary cubic
F0(y) = y1^3 + y2^3 + y3^3.

Everything here is exact.  The vector of point counts N_a(m) = #{y in
(Z/m)^3 : F0(y) = a} is the triple cyclic self-convolution of the cube-count
histogram, and the unit-twisted sums

    T_a(n) = sum_{u in (Z/n)*} sum_{y in (Z/n)^3} e_n(u (F0(y) - a))

come out of point counts at consecutive prime-power levels:

    T_a(p^l) = p^l N_a(p^l) - p^{l-1} p^3 N_a(p^{l-1}),   N_a(p^0) := 1.

T_a(n) is multiplicative in n (for fixed a, via CRT), integer valued, and
|T_a(n)| <= n^4 always, so vectors occasionally leave int64 for very rough n;
those escalate to Python integers and are simply not disk-cached.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .arith import MAX_N, divisors, factor, lcm, v_p
from .cache import INT64_MAX, TVectorCache

log = logging.getLogger("cubesums.expsums")

# modulus above which triple convolution switches from direct O(m^2) numpy
# to the exact number-theoretic transform; both paths agree bit for bit
DIRECT_CONV_LIMIT = 4096

# largest supported modulus: y^3 must stay inside int64 during the histogram
MAX_MODULUS = (1 << 21) - 1

# NTT-friendly primes just under 2^63 with a primitive root each; the CRT
# reconstruction range p1*p2 > 2^122 dominates any attainable entry size
_NTT_PRIMES = ((4179340454199820289, 3), (1945555039024054273, 5))


def _check_modulus(m: int) -> int:
    m = int(m)
    if m < 1 or m > MAX_MODULUS:
        raise ValueError(f"modulus {m} outside [1, {MAX_MODULUS}]")
    return m


@lru_cache(maxsize=1024)
def cube_counts(m: int) -> np.ndarray:
    """Histogram counts[v] = #{y in Z/m : y^3 = v (mod m)}."""
    m = _check_modulus(m)
    y = np.arange(m, dtype=np.int64)
    counts = np.bincount((y * y % m) * y % m, minlength=m)
    counts.flags.writeable = False
    return counts


def _ntt(vec: list[int], prime: int, root: int, invert: bool) -> list[int]:
    n = len(vec)
    v = list(vec)
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            v[i], v[j] = v[j], v[i]
    length = 2
    while length <= n:
        w = pow(root, (prime - 1) // length, prime)
        if invert:
            w = pow(w, prime - 2, prime)
        half = length // 2
        for i in range(0, n, length):
            wn = 1
            for k in range(i, i + half):
                u = v[k]
                t = v[k + half] * wn % prime
                v[k] = (u + t) % prime
                v[k + half] = (u - t) % prime
                wn = wn * w % prime
        length <<= 1
    if invert:
        n_inv = pow(n, prime - 2, prime)
        v = [x * n_inv % prime for x in v]
    return v


def _cyclic_conv_ntt(a: np.ndarray, b: np.ndarray, m: int) -> list[int]:
    size = 1
    while size < 2 * m - 1:
        size <<= 1
    pa = [int(x) for x in a] + [0] * (size - m)
    pb = [int(x) for x in b] + [0] * (size - m)
    per_prime = []
    for prime, root in _NTT_PRIMES:
        fa = _ntt(pa, prime, root, False)
        fb = _ntt(pb, prime, root, False)
        per_prime.append(_ntt([x * y % prime for x, y in zip(fa, fb)], prime, root, True))
    p1, p2 = _NTT_PRIMES[0][0], _NTT_PRIMES[1][0]
    inv1 = pow(p1, -1, p2)
    out = [0] * m
    for i, (r1, r2) in enumerate(zip(*per_prime)):
        out[i % m] += r1 + ((r2 - r1) * inv1 % p2) * p1
    return out


def _cyclic_conv(a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    """Exact cyclic convolution of nonnegative int64 sequences of length m."""
    if m == 1:
        return np.array([int(a[0]) * int(b[0])], dtype=np.int64)
    if m <= DIRECT_CONV_LIMIT:
        # direct linear convolution folded back; intermediates bounded by
        # max(a) * max(b) * m which stays inside int64 for every m here
        assert int(a.max()) * int(b.max()) * m <= INT64_MAX
        lin = np.convolve(a, b)
        out = lin[:m].copy()
        out[: m - 1] += lin[m:]
        return out
    vals = _cyclic_conv_ntt(a, b, m)
    hi = max(vals)
    if hi <= INT64_MAX:
        return np.array(vals, dtype=np.int64)
    return np.array(vals, dtype=object)


@lru_cache(maxsize=512)
def point_count_vector(m: int) -> np.ndarray:
    """N_a(m) for all a mod m, as one array; sums to m^3."""
    m = _check_modulus(m)
    c = cube_counts(m)
    n = _cyclic_conv(_cyclic_conv(c, c, m), c, m)
    n.flags.writeable = False
    return n


def point_counts_bruteforce(m: int) -> np.ndarray:
    """Independent O(m^3) enumeration of N_a(m); only for small m."""
    m = _check_modulus(m)
    if m > 256:
        raise ValueError("brute-force point counts limited to m <= 256")
    y = np.arange(m, dtype=np.int64)
    cubes = (y * y % m) * y % m
    s = (cubes[:, None, None] + cubes[None, :, None] + cubes[None, None, :]) % m
    return np.bincount(s.ravel(), minlength=m)


# ---------------------------------------------------------------------------
# unit-twisted complete sums


_cache = TVectorCache(os.environ.get("CUBESUMS_CACHE_DIR"))


def configure_cache(directory: str | None) -> None:
    """Point the prime-power vector cache at a directory (None disables)."""
    global _cache
    _cache = TVectorCache(directory)
    t_prime_power.cache_clear()
    t_full.cache_clear()


def _t_prime_power_compute(p: int, l: int) -> np.ndarray:
    m = p**l
    n_l = point_count_vector(m)
    if l == 1:
        # N_a(p^0) = 1 for every a
        t = p * n_l.astype(object) - p**3
    else:
        n_prev = point_count_vector(p ** (l - 1))
        idx = np.arange(m) % (p ** (l - 1))
        t = p**l * n_l.astype(object) - p ** (l + 2) * n_prev.astype(object)[idx]
    hi = max(abs(int(t.min())), abs(int(t.max())))
    if hi <= INT64_MAX:
        return t.astype(np.int64)
    return t


@lru_cache(maxsize=512)
def t_prime_power(p: int, l: int) -> np.ndarray:
    """Vector of T_a(p^l) over a mod p^l; disk-cached when it fits int64."""
    if l < 1:
        raise ValueError("need l >= 1")
    arr = _cache.load(p, l)
    if arr is None:
        arr = _t_prime_power_compute(p, l)
        _cache.store(p, l, arr)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=512)
def t_full(n: int) -> np.ndarray:
    """Vector of T_a(n) over a mod n, assembled multiplicatively."""
    n = _check_modulus(n)
    if n == 1:
        one = np.array([1], dtype=np.int64)
        one.flags.writeable = False
        return one
    fac = factor(n).factors
    # |T_a(q)| <= q^4 per factor, so the product bound decides the dtype
    big = math.prod(int(p) ** (4 * e) for p, e in fac) > INT64_MAX
    out = np.ones(n, dtype=object if big else np.int64)
    idx = np.arange(n)
    for p, e in fac:
        q = p**e
        tq = t_prime_power(p, e)
        if big:
            out = out * tq.astype(object)[idx % q]
        else:
            out = out * tq[idx % q]
    out.flags.writeable = False
    return out


def t_single(a: int, n: int):
    """T_a(n) for one residue; int."""
    return int(t_full(n)[a % n])


def t_direct(n: int, a_values: np.ndarray | None = None) -> np.ndarray:
    """Definitional floating evaluation of T_a(n) (all a mod n by default).

    Enumerates the value histogram of F0 over (Z/n)^3 directly (no
    convolution) and sums unit characters in complex doubles.  Intended as an
    independent oracle for small n; error grows like n^3 * eps.
    """
    n = _check_modulus(n)
    if n > 128:
        raise ValueError("direct evaluation limited to n <= 128")
    y = np.arange(n, dtype=np.int64)
    cubes = (y * y % n) * y % n
    s = (cubes[:, None, None] + cubes[None, :, None] + cubes[None, None, :]) % n
    hist = np.bincount(s.ravel(), minlength=n).astype(float)
    units = np.array([u for u in range(n) if math.gcd(u, n) == 1]) if n > 1 else np.array([0])
    if a_values is None:
        a_values = np.arange(n)
    root = np.exp(2j * np.pi / n)
    # S_u = sum_t hist[t] e_n(u t);  T_a = Re sum_u S_u e_n(-u a)
    su = (root ** np.outer(units, np.arange(n))) @ hist
    return (su @ root ** (-np.outer(units, a_values))).real


# ---------------------------------------------------------------------------
# the twisted double sums S+_0(n; d)


def _s_plus_prime_power(p: int, e: int, f: int) -> int:
    """S+_0(p^f; p^e) for 0 <= e <= f, f >= 1."""
    m = p**f
    d = p**e
    if e == f:
        n0 = int(point_count_vector(m)[0])
        return m * n0 * n0
    t = t_prime_power(p, f)
    b = np.arange(0, m, d)
    total = sum(int(x) * int(x) for x in t[b])
    q, r = divmod(total, m)
    assert r == 0, "sum of T_b^2 over b in dZ/mZ must be divisible by m"
    return q


def s_plus_zero(n: int, d: int) -> int:
    """S+_0(n; d): the auxiliary double sum

        sum_{m : lcm(m,d) = n} sum_{u in (Z/m)*}
            sum_{x in (Z/n)^6 : d | F0(y), d | F0(z)} e_m(u F(x)),

    with x = (y, z) and F(x) = F0(y) - F0(z).  Vanishes unless d | n;
    multiplicative across coprime (n, d) blocks; always an integer.
    """
    if n < 1 or d < 1:
        raise ValueError("need n, d >= 1")
    if n % d != 0:
        return 0
    out = 1
    for p, f in factor(n).factors:
        out *= _s_plus_prime_power(p, v_p(d, p), f)
    return out


def s_plus_zero_bruteforce(n: int, d: int) -> tuple[int, float]:
    """Definitional evaluation of S+_0(n; d) in complex doubles.

    Enumerates y over (Z/n)^3 for the value histogram, then the outer sum
    over m with lcm(m, d) = n and units u.  Returns (rounded value, rounding
    residual).  Guarded to n * d <= 200.
    """
    if n % d != 0:
        return 0, 0.0
    if n * d > 200:
        raise ValueError("brute force limited to n * d <= 200")
    y = np.arange(n, dtype=np.int64)
    cubes = (y * y % n) * y % n
    s = (cubes[:, None, None] + cubes[None, :, None] + cubes[None, None, :]) % n
    hist = np.bincount(s.ravel(), minlength=n).astype(float)
    keep = np.arange(n) % d == 0
    total = 0.0
    for m in divisors(n):
        if lcm(m, d) != n:
            continue
        hm = np.zeros(m)
        np.add.at(hm, np.arange(n)[keep] % m, hist[keep])
        units = [u for u in range(m) if math.gcd(u, m) == 1] if m > 1 else [0]
        root = np.exp(2j * np.pi / m)
        for u in units:
            au = (root ** (u * np.arange(m))) @ hm
            total += abs(au) ** 2 / 1.0
    val = round(total)
    return val, abs(total - val)


# ---------------------------------------------------------------------------
# local densities


@dataclass(frozen=True)
class LocalDensity:
    """sigma_{p,a} = lim_l p^{-2l} N_a(p^l), with the certified level used."""

    p: int
    a: int
    value: Fraction
    level: int
    point_count: int


def sigma_p_a(p: int, a: int) -> LocalDensity:
    """Local density of F0 = a at p for a != 0.

    The level value p^{-2l} N_a(p^l) is constant from l = v_p(3a) + 1 on:
    past that level every solution lifts (the higher twisted sums vanish), so
    that level certifies the limit.  When the next level is still cheap the
    code recomputes it and checks equality anyway; disagreement past
    v_p(3a) + 3 would be an internal error.
    """
    if a == 0:
        raise ValueError("sigma_p_a needs a != 0; use sigma_p_zero_levels")
    certified = v_p(3 * a, p) + 1
    level = certified
    while True:
        if p**level > MAX_MODULUS:
            raise ValueError(f"level {level} at p={p} exceeds the convolution limit")
        count = int(point_count_vector(p**level)[a % p**level])
        here = Fraction(count, p ** (2 * level))
        if p ** (level + 1) > 2 * DIRECT_CONV_LIMIT:
            return LocalDensity(p, a, here, level, count)
        nxt = Fraction(
            int(point_count_vector(p ** (level + 1))[a % p ** (level + 1)]),
            p ** (2 * (level + 1)),
        )
        if here == nxt:
            return LocalDensity(p, a, here, level, count)
        level += 1
        if level > certified + 2:
            raise RuntimeError(f"local density failed to stabilize at p={p}, a={a}")


def sigma_p_zero_levels(p: int, l_max: int) -> list[tuple[int, Fraction]]:
    """Level sequence p^{-2l} N_0(p^l) for a = 0; no limit is claimed."""
    out = []
    for l in range(1, l_max + 1):
        if p**l > MAX_MODULUS:
            break
        out.append((l, Fraction(int(point_count_vector(p**l)[0]), p ** (2 * l))))
    return out


def g_density(n: int) -> Fraction:
    """g(n) = n^{-3} N_0(n); multiplicative."""
    if n < 1:
        raise ValueError("need n >= 1")
    out = Fraction(1)
    for p, e in factor(n).factors:
        q = p**e
        out *= Fraction(int(point_count_vector(q)[0]), q**3)
    return out


@dataclass(frozen=True)
class SingularSeriesValue:
    """Truncated level-d singular series with an Euler-product cross check."""

    d: int
    n_max: int
    series: Fraction
    series_float: float
    tail_heuristic: float
    euler: float
    p_max: int


def _sigma_p_of_d(p: int, e: int, rel_cut: float = 1e-12) -> float:
    """Local 6-variable density sum_j p^{-6j} S+_0(p^j; p^e).

    Truncated at the modulus cap or after two consecutive negligible terms
    (single zero terms are common: T_a(3) = 0 kills j = 1 at p = 3 while
    j = 2 contributes 0.74).  A geometric truncation tail of order the last
    term remains; the exact series value is the primary output elsewhere.
    """
    total = 0.0
    j = e
    small_run = 0
    while True:
        q = p**j
        if q > DIRECT_CONV_LIMIT:
            break
        term = (_s_plus_prime_power(p, e, j) if j else 1) / q**6
        total += term
        if j > e and abs(term) < rel_cut * max(abs(total), 1e-300):
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
        j += 1
    return total


def singular_series_level_d(d: int, n_max: int, p_max: int = 100) -> SingularSeriesValue:
    """Level-d singular series S(d) = sum_{d | n} n^{-6} S+_0(n; d), truncated
    at n <= n_max, plus the Euler-product form over p <= p_max."""
    if d < 1 or n_max < d:
        raise ValueError("need 1 <= d <= n_max")
    series = Fraction(0)
    band = Fraction(0)
    for n in range(d, n_max + 1, d):
        term = Fraction(s_plus_zero(n, d), n**6)
        series += term
        if n > n_max // 2:
            band += abs(term)
    euler = 1.0
    from .arith import primes_below

    for p in primes_below(p_max + 1):
        euler *= _sigma_p_of_d(p, v_p(d, p) if d % p == 0 else 0)
    return SingularSeriesValue(d, n_max, series, float(series), float(band), euler, p_max)

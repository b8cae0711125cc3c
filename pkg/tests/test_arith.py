import math
import random

import pytest
import sympy
from hypothesis import given, strategies as st

from cubesums import arith


def test_factor_examples():
    assert arith.factor(360).factors == ((2, 3), (3, 2), (5, 1))
    assert arith.factor(1).factors == ()
    assert arith.factor(2**62).factors == ((2, 62),)


def test_factor_rejects_bad_input():
    for bad in (0, -5, 1 << 63):
        with pytest.raises(ValueError):
            arith.factor(bad)
    with pytest.raises(ValueError):
        arith.factor(3.5)


def test_factor_matches_sympy_on_random_values():
    rng = random.Random(7)
    for _ in range(120):
        n = rng.randrange(2, 10**12)
        assert dict(arith.factor(n).factors) == sympy.factorint(n)
    # a few adversarial shapes: semiprimes with close factors, prime powers
    for n in [10**12 + 39, 999983**2, 2**61 - 1, 3**39, 600851475143]:
        assert dict(arith.factor(n).factors) == sympy.factorint(n)


@given(st.integers(min_value=1, max_value=10**9))
def test_factor_reconstructs(n):
    f = arith.factor(n)
    assert math.prod(p**e for p, e in f.factors) == n
    assert all(e >= 1 and sympy.isprime(p) for p, e in f.factors)


def test_sq_cub_examples():
    d = arith.sq_cub_parts(12)
    assert (d.square_full, d.cube_full) == (4, 1)
    d = arith.sq_cub_parts(8)
    assert (d.square_full, d.cube_full) == (8, 8)
    d = arith.sq_cub_parts(1)
    assert (d.square_full, d.cube_full) == (1, 1)


@given(st.integers(min_value=1, max_value=10**7))
def test_sq_cub_parts_divide_and_split(n):
    d = arith.sq_cub_parts(n)
    assert n % d.square_full == 0 and d.square_full % d.cube_full == 0
    # the complement n / sq is squarefree, and every prime in sq has v >= 2
    rest = n // d.square_full
    assert all(e == 1 for _, e in arith.factor(rest).factors)
    assert all(e >= 2 for _, e in arith.factor(d.square_full).factors)
    assert all(e >= 3 for _, e in arith.factor(d.cube_full).factors)
    assert math.gcd(rest, d.square_full) == 1


def test_crt_examples():
    assert arith.crt_combine([(1, 2), (2, 3)]) == (5, 6)
    assert arith.crt_combine([(0, 4), (3, 7)]) == (24, 28)
    assert arith.crt_combine([]) == (0, 1)


def test_crt_rejects_shared_factor_with_message():
    with pytest.raises(ValueError, match=r"4 and 6"):
        arith.crt_combine([(1, 4), (3, 6)])


@given(st.lists(st.tuples(st.integers(0, 10**6), st.sampled_from([2, 3, 5, 7, 11, 13])), max_size=4))
def test_crt_solves_all_congruences(pairs):
    mods = [m for _, m in pairs]
    if len(set(mods)) < len(mods):
        return  # duplicated primes are legitimately rejected
    r, m = arith.crt_combine(pairs)
    assert m == math.prod(mods) if pairs else m == 1
    assert 0 <= r < m
    for ri, mi in pairs:
        assert (r - ri) % mi == 0


def test_multiplicative_helpers_match_sympy():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randrange(1, 10**6)
        assert arith.phi(n) == sympy.totient(n)
        assert arith.mobius(n) == sympy.mobius(n)
        assert arith.tau(n) == sympy.divisor_count(n)
        assert arith.omega(n) == len(sympy.factorint(n))
        assert arith.rad(n) == math.prod(sympy.primefactors(n))


def test_v_p():
    assert arith.v_p(360, 2) == 3
    assert arith.v_p(360, 7) == 0
    assert arith.v_p(-24, 2) == 3
    with pytest.raises(ValueError):
        arith.v_p(0, 2)


def test_divisors():
    assert arith.divisors(28) == [1, 2, 4, 7, 14, 28]
    assert arith.divisors(1) == [1]


def test_admissible_classes():
    # obstruction is exactly a = +-4 mod 9
    bad = [a for a in range(-20, 21) if not arith.admissible(a)]
    assert bad == [a for a in range(-20, 21) if a % 9 in (4, 5)]
    assert arith.admissible(0) and arith.admissible(3) and not arith.admissible(-4)


def test_square_full_family_membership():
    assert arith.in_square_full_family(6, 1)        # squarefree
    assert not arith.in_square_full_family(12, 2)   # sq part 4 > 2
    assert arith.in_square_full_family(12, 4)
    assert not arith.in_square_full_family(0, 100)  # zero excluded


def test_primes_below():
    assert arith.primes_below(20) == [2, 3, 5, 7, 11, 13, 17, 19]
    assert len(arith.primes_below(10**5)) == 9592

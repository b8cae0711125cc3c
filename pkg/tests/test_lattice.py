"""Lattice-point counting, pair counts, special counts, and r3 demos."""

import numpy as np
import pytest

from cubesums.lattice import (
    EXACT_SHIFT,
    count_weighted,
    exact_to_float,
    pair_count,
    pair_count_bruteforce,
    pair_count_exact,
    prime_demo,
    r3_nonneg,
    special_count,
)
from cubesums.arith import primes_below
from cubesums.weights import Weight, nu_star


@pytest.fixture(scope="module")
def nu2():
    return nu_star(2.0)


@pytest.fixture(scope="module")
def tab10(nu2):
    return count_weighted(10, nu2)


def test_r3_frozen_values():
    assert r3_nonneg(0) == 1
    assert r3_nonneg(1) == 3
    assert r3_nonneg(2) == 3
    assert r3_nonneg(3) == 1
    assert r3_nonneg(1729) == 12


def test_r3_obstructed_classes():
    # cubes are 0, +-1 mod 9, so sums of three avoid 4, 5 mod 9
    for a in (4, 5, 13, 31, 49, 76, 851):
        assert a % 9 in (4, 5)
        assert r3_nonneg(a) == 0


def test_r3_cap_guard():
    with pytest.raises(ValueError):
        r3_nonneg(100, cap=2)
    assert r3_nonneg(24, cap=2) == r3_nonneg(24)


def test_r3_orbit_identity():
    # ordered count = 6*(distinct) + 3*(two equal) + (all equal)
    top = 17  # covers all a <= 5000
    ordered = np.zeros(5001, dtype=np.int64)
    for x in range(top + 1):
        for y in range(x, top + 1):
            for z in range(y, top + 1):
                a = x**3 + y**3 + z**3
                if a > 5000:
                    break
                if x < y < z:
                    ordered[a] += 6
                elif x == y == z:
                    ordered[a] += 1
                else:
                    ordered[a] += 3
    for a in range(0, 5001, 7):
        assert r3_nonneg(a) == ordered[a]


def test_count_weighted_X1(nu2):
    tab = count_weighted(1, nu2)
    a_vals, masses = tab.nonzero_items()
    # the only representations inside the bands are the signed permutations
    # of (9,10,-12), (6,8,-9) -> +-1 and (5,6,-7) -> +-2
    assert list(a_vals) == [-2, -1, 1, 2]
    assert tab.n_alive == 36
    assert np.all(masses > 0.0)
    assert np.all(np.abs(a_vals) <= 3)
    assert np.abs(tab.witnesses[:, :3]).min() >= 1


def test_count_table_symmetry_and_mass(tab10):
    # nu is even and F0 odd, so the table is symmetric under a -> -a
    assert np.array_equal(tab10.point_counts, tab10.point_counts[::-1])
    assert np.allclose(tab10.bins, tab10.bins[::-1], rtol=1e-12, atol=0)
    ex = exact_to_float(tab10.total_mass_exact())
    assert abs(ex - tab10.total_mass()) <= 1e-12 * ex


def test_count_weighted_deterministic(nu2, tab10):
    again = count_weighted(10, nu2)
    assert np.array_equal(tab10.bins, again.bins)
    assert tab10.exact == again.exact


def test_loop_order_oracle(nu2, tab10):
    for order in ((1, 2, 0), (2, 0, 1)):
        other = count_weighted(10, nu2, order=order)
        assert np.array_equal(tab10.point_counts, other.point_counts)
        assert tab10.exact == other.exact
        assert np.allclose(tab10.bins, other.bins, rtol=1e-12, atol=1e-18)


def test_witnesses_satisfy_F0(tab10):
    w = tab10.witnesses
    assert len(w) > 0
    assert np.array_equal(w[:, 0] ** 3 + w[:, 1] ** 3 + w[:, 2] ** 3, w[:, 3])


def test_count_weighted_guards(nu2):
    with pytest.raises(ValueError):
        count_weighted(0, nu2)
    with pytest.raises(ValueError):
        count_weighted(5000, nu2)  # B*X = 110000 over the bound
    dirty = Weight(name="d", R=2.0, B=4, clean=False, very_clean=False,
                   symmetric=True, a_support=3.0,
                   evaluate=lambda y: np.ones(len(y)))
    with pytest.raises(ValueError):
        count_weighted(2, dirty)


def test_count_table_csv(tab10, tmp_path):
    path = tmp_path / "counts.csv"
    tab10.export_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "a,N"
    assert len(lines) == 1 + len(tab10.nonzero_items()[0])


def test_pair_count_matches_brute(nu2, tab10):
    for d in (1, 2, 3):
        ex = pair_count_exact(tab10, d)
        assert ex == pair_count_bruteforce(10, d, nu2)
        fl = pair_count(10, d, nu2, table=tab10)
        assert abs(exact_to_float(ex, 2 * EXACT_SHIFT) - fl) <= 1e-12 * fl


def test_pair_count_d1_is_sum_of_squares(tab10):
    _a, masses = tab10.nonzero_items()
    direct = float(np.dot(masses, masses))
    assert pair_count(10, 1, None, table=tab10) == direct


def test_pair_count_huge_modulus(nu2, tab10):
    # only a = 0 survives, and x^3+y^3 = -z^3 has no clean solutions
    assert pair_count(10, 10**15, nu2, table=tab10) == 0.0
    assert tab10.value(0) == 0.0


def test_special_count_identity(nu2):
    sc = special_count(10, 1, nu2)
    assert sc.n_repeated > 0
    assert sc.diag > 0.0
    assert abs(sc.diag + sc.correction - sc.formula_value) \
        <= 1e-12 * sc.formula_value
    sc2 = special_count(10, 2, nu2)
    assert sc2.formula_value <= sc.formula_value


def test_special_count_rejects_asymmetric():
    w = Weight(name="asym", R=2.0, B=4, clean=True, very_clean=True,
               symmetric=False, a_support=3.0,
               evaluate=lambda y: np.ones(len(y)))
    with pytest.raises(ValueError):
        special_count(2, 1, w)


def test_prime_demo_against_r3_oracle():
    demo = prime_demo(100)
    ps = primes_below(101)
    vals = [r3_nonneg(p) for p in ps]
    assert demo.n_primes == len(ps)
    assert demo.sum_r3 == sum(vals)
    assert demo.sum_r3_sq == sum(v * v for v in vals)
    assert demo.n_admissible_represented == sum(
        1 for p, v in zip(ps, vals) if p % 9 not in (4, 5) and v > 0)
    assert demo.fitted_constant > 0.0


def test_prime_demo_monotone():
    assert prime_demo(1000).sum_r3 >= prime_demo(100).sum_r3 > 0

"""Exact combinatorics: enumeration, multinomials, moment constants."""

import math
from fractions import Fraction

import pytest

from centroidkit import multiindices as mi


def test_enumeration_small():
    got = set(mi.enumerate_multiindices(3, 2))
    assert got == {(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)}
    assert all(sum(a) == 2 for a in got)


@pytest.mark.parametrize("dim", [1, 2, 3, 5])
@pytest.mark.parametrize("degree", [0, 1, 2, 4, 6])
def test_count_matches_enumeration(dim, degree):
    listed = list(mi.enumerate_multiindices(dim, degree))
    assert len(listed) == mi.multiindex_count(dim, degree)
    assert mi.multiindex_count(dim, degree) == math.comb(dim + degree - 1, degree)
    assert len(set(listed)) == len(listed)


def test_multinomial_values():
    assert mi.multinomial(2, (1, 1)) == 2
    assert mi.multinomial(4, (2, 1, 1)) == 12
    assert mi.multinomial(5, (5, 0)) == 1
    # sum over the layer must hit the full power count
    for n, k in [(2, 5), (3, 4), (4, 3)]:
        total = sum(mi.multinomial(k, a) for a in mi.enumerate_multiindices(n, k))
        assert total == n**k


def test_odd_double_factorial():
    # (2m-1)!! convention, so index m=2 is 3!!
    assert [mi.odd_double_factorial(m) for m in range(5)] == [1, 1, 3, 15, 105]


def test_constant_hand_values():
    # single coordinate: the defining sum collapses to one term equal to 1
    for k in range(1, 8):
        frac, root = mi.even_moment_constant(1, k)
        assert frac == 1
        assert root == 1.0
    # k=1: each unit multiindex contributes 1^2/C(2,2)=1, so c^2 = n
    for n in range(1, 9):
        frac, root = mi.even_moment_constant(n, 1)
        assert frac == Fraction(n)
        assert abs(root - math.sqrt(n)) < 1e-12
    # n=2, k=2 by hand: 1 + 2^2/6 + 1 = 8/3
    frac, root = mi.even_moment_constant(2, 2)
    assert frac == Fraction(8, 3)
    assert abs(root - (8 / 3) ** 0.25) < 1e-12


def test_root_of_fraction():
    assert abs(mi.root_of_fraction(Fraction(8, 3), 4) - (8 / 3) ** 0.25) < 1e-14
    assert mi.root_of_fraction(Fraction(16), 4) == 2.0


@pytest.mark.parametrize("dim", [1, 2, 4, 6])
@pytest.mark.parametrize("degree", [1, 2, 3, 5])
def test_bounds_bracket_constant(dim, degree):
    lo, hi = mi.even_moment_constant_bounds(dim, degree)
    _, root = mi.even_moment_constant(dim, degree)
    assert lo <= root <= hi
    assert lo > 0


@pytest.mark.parametrize("dim", [1, 3, 6, 10])
@pytest.mark.parametrize("degree", [1, 4, 7, 10])
def test_central_sandwich_exact(dim, degree):
    # c^{2k} sits within a 4^k factor of C(n+k-1, k), checked in rationals
    frac, _ = mi.even_moment_constant(dim, degree)
    central = math.comb(dim + degree - 1, degree)
    assert Fraction(central, 4**degree) <= frac <= Fraction(central * 4**degree)

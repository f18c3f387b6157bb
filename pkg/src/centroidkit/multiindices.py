"""Exact combinatorics over multiindices.

A multiindex is a tuple of nonnegative ints.  Everything here is integer or
Fraction arithmetic; floats only appear when a caller asks for a root of an
exact value, and that root is taken in the log domain so arbitrarily large
rationals are safe.

The central object is the constant

    c(n, k)^(2k) = sum over |alpha| = k of  multinomial(k, alpha)^2
                                            / binomial(2k, 2*alpha)

which controls even moments of dual norms of isotropic vectors.  It has a
second, equivalent form

    c(n, k)^(2k) = binomial(2k, k)^(-1) * sum over |alpha| = k of
                   prod_i binomial(2*alpha_i, alpha_i)

and both are computed and compared term-for-term cheaply; a mismatch means a
bug, so it raises.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Sequence

# Hard cap on the number of enumerated multiindices, so a bad (n, k) request
# fails fast instead of thrashing.
MAX_TERMS = 10**8


def multiindex_count(dim: int, degree: int) -> int:
    """Number of multiindices of length dim summing to degree."""
    if dim < 1 or degree < 0:
        raise ValueError("need dim >= 1 and degree >= 0")
    return math.comb(dim + degree - 1, degree)


def enumerate_multiindices(dim: int, degree: int) -> Iterator[tuple[int, ...]]:
    """Yield all multiindices of length dim with sum degree, in colex order.

    Colex order: the last coordinate varies slowest, i.e. for dim=2, degree=2
    the order is (2,0), (1,1), (0,2).  The count is multiindex_count(dim, degree).
    """
    if multiindex_count(dim, degree) > MAX_TERMS:
        raise ValueError(
            f"{multiindex_count(dim, degree)} multiindices exceeds cap {MAX_TERMS}"
        )
    yield from _enumerate(dim, degree)


def _enumerate(dim: int, degree: int) -> Iterator[tuple[int, ...]]:
    if dim == 1:
        yield (degree,)
        return
    # Recurse on the tail: for each value of the last coordinate, enumerate
    # the remaining mass over the first dim-1 coordinates.
    for last in range(degree + 1):
        for head in _enumerate(dim - 1, degree - last):
            yield head + (last,)


def multinomial(degree: int, alpha: Sequence[int]) -> int:
    """Exact multinomial coefficient degree! / prod(alpha_i!)."""
    if any(a < 0 for a in alpha):
        raise ValueError("multiindex entries must be nonnegative")
    if sum(alpha) != degree:
        raise ValueError(f"multiindex sums to {sum(alpha)}, expected {degree}")
    out = 1
    rest = degree
    for a in alpha:
        out *= math.comb(rest, a)
        rest -= a
    return out


def odd_double_factorial(m: int) -> int:
    """(2m-1)!! = (2m)! / (2^m m!), the m-th even Gaussian moment."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return math.factorial(2 * m) // (2**m * math.factorial(m))


def root_of_fraction(value: Fraction, root: int) -> float:
    """Float value**(1/root) via the log domain; exact for huge rationals."""
    if value < 0:
        raise ValueError("value must be nonnegative")
    if value == 0:
        return 0.0
    log_val = math.log(value.numerator) - math.log(value.denominator)
    return math.exp(log_val / root)


def even_moment_constant(dim: int, degree: int) -> tuple[Fraction, float]:
    """The constant c(dim, degree): returns (exact c^(2k) as Fraction, float c).

    Both closed forms are evaluated and compared exactly; degree is the k in
    the 2k-th moment.  Raises if the enumeration would exceed MAX_TERMS or if
    the two forms disagree (which would mean corrupted arithmetic).
    """
    k = degree
    sum_def = Fraction(0)
    sum_alt = 0
    for alpha in enumerate_multiindices(dim, k):
        m = multinomial(k, alpha)
        two_alpha = tuple(2 * a for a in alpha)
        sum_def += Fraction(m * m, multinomial(2 * k, two_alpha))
        prod = 1
        for a in alpha:
            prod *= math.comb(2 * a, a)
        sum_alt += prod
    alt = Fraction(sum_alt, math.comb(2 * k, k))
    if sum_def != alt:
        raise ArithmeticError(
            f"even-moment constant mismatch for dim={dim}, degree={k}: "
            f"{sum_def} vs {alt}"
        )
    return sum_def, root_of_fraction(sum_def, 2 * k)


def even_moment_constant_bounds(dim: int, degree: int) -> tuple[float, float]:
    """Sandwich for c(dim, degree): (lower, upper) floats.

    4^(-k) * binomial(dim+k-1, k) <= c^(2k) <= 4^k * binomial(dim+k-1, k),
    reported as 2k-th roots.
    """
    k = degree
    count = Fraction(multiindex_count(dim, k))
    lo = root_of_fraction(count / 4**k, 2 * k)
    hi = root_of_fraction(count * 4**k, 2 * k)
    return lo, hi

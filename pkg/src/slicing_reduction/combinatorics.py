"""Exact integer and rational evaluation of the binomial/Catalan quantities
behind the constant D_n.

Every inequality here is decided in exact arithmetic: fractional powers are
first cleared by raising both sides to an integer power, so no float ever
enters a yes/no answer. Floats (via mpmath) only report magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import DomainError

# bits of working precision for the reported D_n magnitude
DN_PRECISION = 128


def binom_int(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"binom_int requires 0 <= k <= n, got n={n}, k={k}")
    return math.comb(n, k)


def catalan(n: int) -> int:
    if n < 1:
        raise DomainError("catalan is defined here for n >= 1")
    c, r = divmod(math.comb(2 * n, n), n + 1)
    assert r == 0
    return c


@dataclass(frozen=True)
class DnValue:
    n: int
    value: mpmath.mpf
    certificate: bool

    def __float__(self):
        return float(self.value)


def dn_squared_parts(n: int) -> tuple[int, int]:
    """(C(2n,n), C(2n+2,n)) -- the two binomials D_n is built from."""
    return math.comb(2 * n, n), math.comb(2 * n + 2, n)


def dn_le_sqrt2_exact(n: int) -> bool:
    """Decide D_n <= sqrt(2) exactly.

    D_n^2 <= 2  <=>  C(2n,n)^(1+2/n) <= 4 C(2n+2,n)  <=>  C(2n,n)^(n+2) <= 4^n C(2n+2,n)^n.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    a, b = dn_squared_parts(n)
    return a ** (n + 2) <= 4 ** n * b ** n


def dn(n: int) -> DnValue:
    if n < 1:
        raise DomainError("n must be >= 1")
    a, b = dn_squared_parts(n)
    with mpmath.workprec(DN_PRECISION):
        log_d = (-mpmath.log(2) / 2
                 + (mpmath.mpf(1) / 2 + mpmath.mpf(1) / n) * mpmath.log(a)
                 - mpmath.log(b) / 2)
        value = mpmath.exp(log_d)
    return DnValue(n, value, dn_le_sqrt2_exact(n))


def dn_table(n_max: int) -> list[DnValue]:
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    return [dn(n) for n in range(1, n_max + 1)]


def lemma41_lhs(n: int) -> Fraction:
    """4n/(n+2) * (n(n+1)/((n-1)(n+2)))^(n-1) * n^2/(2n-1)^2 as an exact rational.

    For n = 1 the middle factor has exponent 0 and is taken as 1.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    head = Fraction(4 * n, n + 2) * Fraction(n * n, (2 * n - 1) ** 2)
    if n == 1:
        return head
    return head * Fraction(n * (n + 1), (n - 1) * (n + 2)) ** (n - 1)


def lemma41_holds(n: int) -> bool:
    return lemma41_lhs(n) >= 1


def lemma42_holds(n: int) -> bool:
    """(16n/(n+2))^n >= (n+1)^2 C_n^2, compared after clearing denominators."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return (16 * n) ** n >= (n + 2) ** n * (n + 1) ** 2 * catalan(n) ** 2


def limit_quantity(n: int) -> mpmath.mpf:
    """2 C(2n+2,n) / C(2n,n)^(1+2/n); equals 1/D_n^2 and tends to 1/2."""
    a, b = dn_squared_parts(n)
    with mpmath.workprec(DN_PRECISION):
        return 2 * mpmath.mpf(b) / mpmath.power(a, 1 + mpmath.mpf(2) / n)


def volume_bound(n: int) -> float:
    """C(2n,n) / C(2n+2,n)^(n/(n+2)): the largest possible |K_{n+2}(g_K)| for |K| = 1."""
    a, b = dn_squared_parts(n)
    with mpmath.workprec(DN_PRECISION):
        return float(mpmath.mpf(a) / mpmath.power(b, mpmath.mpf(n) / (n + 2)))

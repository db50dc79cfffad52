"""Exact arithmetic over Q(sqrt 2)[i].

Machine amplitudes are literals of the form ``a/b + (c/d) i`` where each
rational term may carry a factor 2^(-1/2).  Sums and products of such
numbers stay inside the field Q(sqrt 2)[i], so row norms, row inner
products and the separability sums can be checked with no rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Surd:
    """The real number ``rat + surd / sqrt(2)`` with rational parts."""

    rat: Fraction = Fraction(0)
    surd: Fraction = Fraction(0)

    def __add__(self, other: Surd) -> Surd:
        return Surd(self.rat + other.rat, self.surd + other.surd)

    def __sub__(self, other: Surd) -> Surd:
        return Surd(self.rat - other.rat, self.surd - other.surd)

    def __neg__(self) -> Surd:
        return Surd(-self.rat, -self.surd)

    def __mul__(self, other: Surd) -> Surd:
        # (1/sqrt2)^2 = 1/2
        return Surd(
            self.rat * other.rat + self.surd * other.surd / 2,
            self.rat * other.surd + self.surd * other.rat,
        )

    def is_zero(self) -> bool:
        return self.rat == 0 and self.surd == 0

    def sign(self) -> int:
        """Exact sign of the number (-1, 0 or 1)."""
        a, b = self.rat, self.surd
        if a >= 0 and b >= 0:
            return 0 if (a == 0 and b == 0) else 1
        if a <= 0 and b <= 0:
            return -1
        # opposite signs: compare a^2 with b^2 / 2
        lhs, rhs = a * a, b * b / 2
        if lhs == rhs:
            return 0
        return (1 if a > 0 else -1) if lhs > rhs else (1 if b > 0 else -1)

    def __float__(self) -> float:
        return float(self.rat) + float(self.surd) * _INV_SQRT2


ZERO = Surd()
ONE = Surd(Fraction(1))


@dataclass(frozen=True)
class ExactComplex:
    re: Surd = ZERO
    im: Surd = ZERO

    def __add__(self, other: ExactComplex) -> ExactComplex:
        return ExactComplex(self.re + other.re, self.im + other.im)

    def __mul__(self, other: ExactComplex) -> ExactComplex:
        return ExactComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def conj(self) -> ExactComplex:
        return ExactComplex(self.re, -self.im)

    def abs2(self) -> Surd:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))


EXACT_ZERO = ExactComplex()

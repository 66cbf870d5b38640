"""Exact complex scalars with rational real and imaginary parts.

All symbolic coefficients in the hierarchy pipeline are of this form
(dyadic rationals times powers of i), so plain Fraction arithmetic keeps
everything exact end to end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class QC:
    """Gaussian rational: re + i*im with re, im exact fractions."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @staticmethod
    def of(re=0, im=0) -> "QC":
        return QC(_frac(re), _frac(im))

    def __add__(self, other) -> "QC":
        other = _coerce(other)
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "QC":
        other = _coerce(other)
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other) -> "QC":
        return _coerce(other) - self

    def __neg__(self) -> "QC":
        return QC(-self.re, -self.im)

    def __mul__(self, other) -> "QC":
        other = _coerce(other)
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "QC":
        other = _coerce(other)
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero QC")
        return QC(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __pow__(self, n: int) -> "QC":
        if not isinstance(n, int) or n < 0:
            raise TypeError("QC powers must be nonnegative integers")
        acc = ONE
        base = self
        while n:
            if n & 1:
                acc = acc * base
            base = base * base
            n >>= 1
        return acc

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    @property
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"


def _coerce(x) -> QC:
    if isinstance(x, QC):
        return x
    if isinstance(x, (int, Fraction, Rational)):
        return QC(_frac(x), Fraction(0))
    raise TypeError(f"cannot coerce {x!r} to QC")


ZERO = QC()
ONE = QC.of(1)
I = QC.of(0, 1)

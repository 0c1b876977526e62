"""Exact combinatorial kernels: dyadic rationals, binomials, walk transition kernel."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["Dyadic", "Site", "binomial", "p", "return_prob", "first_return_prob"]

_DYADIC_RE = re.compile(r"^\s*(-?\d+)\s*/\s*2\^(\d+)\s*$")


class Dyadic:
    """Exact rational ``numerator / 2**exponent``, kept in canonical form.

    Canonical form means the numerator is odd, or the value is zero with
    exponent 0. Instances are immutable and hashable; two equal values
    always have identical fields.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int = 0, exponent: int = 0):
        numerator = int(numerator)
        exponent = int(exponent)
        if numerator == 0:
            exponent = 0
        else:
            if exponent < 0:
                numerator <<= -exponent
                exponent = 0
            tz = (numerator & -numerator).bit_length() - 1
            shift = min(tz, exponent)
            numerator >>= shift
            exponent -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not dyadic")
            return cls(value.numerator, den.bit_length() - 1)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Inverse of ``str()``: accepts ``"num/2^e"``."""
        m = _DYADIC_RE.match(text)
        if not m:
            raise ValueError(f"malformed dyadic {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    # arithmetic

    def _align(self, other: "Dyadic"):
        e = max(self.exponent, other.exponent)
        return self.numerator << (e - self.exponent), other.numerator << (e - other.exponent), e

    def __add__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return Dyadic(self.numerator * other.numerator, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.numerator, self.exponent)

    def __abs__(self):
        return Dyadic(abs(self.numerator), self.exponent)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers leave the dyadic ring")
        return Dyadic(self.numerator**k, self.exponent * k)

    def half(self) -> "Dyadic":
        return Dyadic(self.numerator, self.exponent + 1)

    def scale2(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` (``k`` may be negative)."""
        return Dyadic(self.numerator, self.exponent - k)

    # comparison / conversion

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __float__(self):
        # int / int true division is correctly rounded
        return self.numerator / (1 << self.exponent)

    def __bool__(self):
        return self.numerator != 0

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.numerator == other.numerator and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        other = other.to_fraction() if isinstance(other, Dyadic) else other
        return self.to_fraction() < other

    def __le__(self, other):
        other = other.to_fraction() if isinstance(other, Dyadic) else other
        return self.to_fraction() <= other

    def __gt__(self, other):
        other = other.to_fraction() if isinstance(other, Dyadic) else other
        return self.to_fraction() > other

    def __ge__(self, other):
        other = other.to_fraction() if isinstance(other, Dyadic) else other
        return self.to_fraction() >= other

    def __str__(self):
        return f"{self.numerator}/2^{self.exponent}"

    def __repr__(self):
        return f"Dyadic({self.numerator}, {self.exponent})"


ZERO = Dyadic(0)
ONE = Dyadic(1)


@dataclass(frozen=True, order=True)
class Site:
    """Lattice point ``(x, y)``: time ``x >= 0``, position ``y`` with ``|y| <= x`` and ``x + y`` even."""

    x: int
    y: int

    def __post_init__(self):
        if self.x < 0 or abs(self.y) > self.x or (self.x + self.y) % 2:
            raise ValueError(f"({self.x}, {self.y}) is not a lattice site")

    def in_index_set(self, n: int) -> bool:
        return self.x < n

    def index(self) -> int:
        """Row-major position in the triangular array (x ascending, then y ascending)."""
        return self.x * (self.x + 1) // 2 + (self.y + self.x) // 2

    @classmethod
    def from_index(cls, i: int) -> "Site":
        x = 0
        while (x + 1) * (x + 2) // 2 <= i:
            x += 1
        j = i - x * (x + 1) // 2
        return cls(x, 2 * j - x)


def binomial(a: int, b: int) -> int:
    """``C(a, b)`` by the running product; 0 outside ``0 <= b <= a``."""
    if b < 0 or b > a:
        return 0
    b = min(b, a - b)
    result = 1
    for i in range(1, b + 1):
        result = result * (a - b + i) // i
    return result


def p(x: int, y: int) -> Dyadic:
    """Probability that a simple random walk started at 0 is at ``y`` after ``x`` steps.

    Total: returns exact zero when ``|y| > x`` or ``x + y`` is odd.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    if abs(y) > x or (x + y) % 2:
        return ZERO
    return Dyadic(binomial(x, (x + y) // 2), x)


def return_prob(k: int) -> Dyadic:
    """``p(2k, 0)``: the walk sits at the origin after ``2k`` steps."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return Dyadic(binomial(2 * k, k), 2 * k)


def first_return_prob(j: int) -> Dyadic:
    """Gap law ``g(j) = p(2j-2, 0) - p(2j, 0)`` for ``j >= 1``."""
    if j < 1:
        raise ValueError("gap must be at least 1")
    return return_prob(j - 1) - return_prob(j)

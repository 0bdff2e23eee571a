"""Exact Gaussian rationals and multi-index helpers."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence, Union

Rational = Union[int, Fraction]


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, str)):
        return Fraction(v)
    if isinstance(v, float):
        raise TypeError("floats are not exact; pass a Fraction or a 'p/q' string")
    raise TypeError(f"cannot interpret {v!r} as a rational")


class GaussianRational:
    """An exact complex number ``re + i*im`` with rational parts.

    Instances are immutable and hashable, so they can key dicts and be shared
    between threads.
    """

    __slots__ = ("re", "im")

    def __init__(self, re: Rational | str = 0, im: Rational | str = 0):
        object.__setattr__(self, "re", _as_fraction(re))
        object.__setattr__(self, "im", _as_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def coerce(cls, v) -> "GaussianRational":
        if isinstance(v, GaussianRational):
            return v
        if isinstance(v, complex):
            raise TypeError("complex floats are not exact")
        return cls(v, 0)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return GaussianRational(self.re * other, self.im * other)
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return GaussianRational(self.re / other, self.im / other)
        o = GaussianRational.coerce(other)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero")
        return GaussianRational((self.re * o.re + self.im * o.im) / n,
                                (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return GaussianRational(1) / self**(-n)
        result = GaussianRational(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def times_i_power(self, k: int) -> "GaussianRational":
        """Multiply by ``i**k`` without a general multiplication."""
        k %= 4
        if k == 0:
            return self
        if k == 1:
            return GaussianRational(-self.im, self.re)
        if k == 2:
            return GaussianRational(-self.re, -self.im)
        return GaussianRational(self.im, -self.re)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    # predicates -----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if self.im == 0:
            return f"GaussianRational({self.re})"
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def fraction_to_str(q: Fraction) -> str:
    return str(q)


# multi-indices -------------------------------------------------------------

@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


def multi_factorial(alpha: Sequence[int]) -> int:
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def norm(alpha: Sequence[int]) -> int:
    return sum(alpha)


def multi_binomial(alpha: Sequence[int], beta: Sequence[int]) -> int:
    out = 1
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


def multi_indices_of_norm(total: int, length: int) -> Iterator[tuple[int, ...]]:
    """All ``alpha`` in N^length with ``|alpha| == total``."""
    if length == 0:
        if total == 0:
            yield ()
        return
    if length == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in multi_indices_of_norm(total - first, length - 1):
            yield (first,) + rest


def multi_indices_below(bound: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All ``alpha`` with ``0 <= alpha <= bound`` componentwise."""
    return product(*(range(b + 1) for b in bound))

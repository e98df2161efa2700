"""Exact dyadic rationals m / 2**e and square matrices over them.

Kraft matrices only ever contain sums of powers of two, so every entry of
every power is dyadic.  Matrices keep a single shared exponent and a grid of
Python integers, which makes multiplication a plain integer matmul followed by
a cheap renormalisation.
"""

from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._budget import BudgetExceeded

DEFAULT_MAX_BITS = 1 << 20


def _trailing_zeros(m: int) -> int:
    return (m & -m).bit_length() - 1


class Dyadic:
    """A non-negative dyadic rational ``mantissa / 2**exponent``.

    Canonical form: the mantissa is odd, or zero with exponent 0.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int, exponent: int = 0):
        mantissa = int(mantissa)
        exponent = int(exponent)
        if mantissa < 0:
            raise ValueError("Dyadic values are non-negative")
        if mantissa == 0:
            exponent = 0
        elif exponent < 0:
            mantissa <<= -exponent
            exponent = 0
        else:
            tz = min(_trailing_zeros(mantissa), exponent)
            mantissa >>= tz
            exponent -= tz
        self.mantissa = mantissa
        self.exponent = exponent

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """2**k for any integer k."""
        return cls(1, -k)

    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, numbers.Integral):
            return cls(int(value))
        frac = Fraction(value)
        den = frac.denominator
        if den & (den - 1):
            raise ValueError(f"{value!r} is not a dyadic rational")
        return cls(frac.numerator, den.bit_length() - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.exponent)

    def __float__(self) -> float:
        if self.exponent < 1000 and self.mantissa.bit_length() < 1000:
            return self.mantissa / (1 << self.exponent)
        return float(self.to_fraction())

    def __repr__(self) -> str:
        if self.exponent == 0:
            return f"Dyadic({self.mantissa})"
        return f"Dyadic({self.mantissa}/2^{self.exponent})"

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.mantissa)
        return f"{self.mantissa}/{1 << self.exponent}" if self.exponent < 64 else f"{self.mantissa}/2^{self.exponent}"

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def _other(self, other):
        if isinstance(other, Dyadic):
            return other.to_fraction()
        if isinstance(other, (numbers.Rational, float)):
            return Fraction(other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self.to_fraction() == o

    def __lt__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self.to_fraction() < o

    def __le__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self.to_fraction() <= o

    def __gt__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self.to_fraction() > o

    def __ge__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self.to_fraction() >= o

    def __add__(self, other):
        if not isinstance(other, Dyadic):
            try:
                other = Dyadic.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        e = max(self.exponent, other.exponent)
        return Dyadic((self.mantissa << (e - self.exponent)) + (other.mantissa << (e - other.exponent)), e)

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, Dyadic):
            try:
                other = Dyadic.coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"m": self.mantissa, "e": self.exponent}

    @classmethod
    def from_json(cls, obj: dict) -> "Dyadic":
        return cls(obj["m"], obj["e"])


ZERO = Dyadic(0)
ONE = Dyadic(1)


class DyadicMatrix:
    """Square non-negative matrix with exact dyadic entries.

    Stored as ``numerators / 2**exponent`` with one shared exponent, reduced
    so that the exponent is as small as possible.
    """

    __slots__ = ("numerators", "exponent")

    def __init__(self, numerators: Sequence[Sequence[int]], exponent: int = 0):
        rows = tuple(tuple(int(v) for v in row) for row in numerators)
        s = len(rows)
        if any(len(r) != s for r in rows):
            raise ValueError("DyadicMatrix must be square")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("DyadicMatrix entries must be non-negative")
        exponent = int(exponent)
        if exponent < 0:
            rows = tuple(tuple(v << -exponent for v in r) for r in rows)
            exponent = 0
        nz = [v for r in rows for v in r if v]
        if not nz:
            exponent = 0
        elif exponent:
            tz = min(exponent, min(_trailing_zeros(v) for v in nz))
            if tz:
                rows = tuple(tuple(v >> tz for v in r) for r in rows)
                exponent -= tz
        self.numerators = rows
        self.exponent = exponent

    @classmethod
    def from_entries(cls, entries: Iterable[Iterable]) -> "DyadicMatrix":
        grid = [[Dyadic.coerce(v) for v in row] for row in entries]
        e = max((d.exponent for row in grid for d in row), default=0)
        return cls([[d.mantissa << (e - d.exponent) for d in row] for row in grid], e)

    @classmethod
    def identity(cls, s: int) -> "DyadicMatrix":
        return cls([[int(i == j) for j in range(s)] for i in range(s)])

    @classmethod
    def zeros(cls, s: int) -> "DyadicMatrix":
        return cls([[0] * s for _ in range(s)])

    @property
    def s(self) -> int:
        return len(self.numerators)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.s, self.s)

    def __getitem__(self, idx: tuple[int, int]) -> Dyadic:
        i, j = idx
        return Dyadic(self.numerators[i][j], self.exponent)

    def rows(self) -> list[list[Dyadic]]:
        return [[Dyadic(v, self.exponent) for v in row] for row in self.numerators]

    def to_fractions(self) -> list[list[Fraction]]:
        den = 1 << self.exponent
        return [[Fraction(v, den) for v in row] for row in self.numerators]

    def to_float(self) -> np.ndarray:
        if self.exponent < 1000 and self.max_bits() < 1000:
            scale = float(1 << self.exponent)
            return np.array([[v / scale for v in row] for row in self.numerators], dtype=float).reshape(self.s, self.s)
        return np.array([[float(f) for f in row] for row in self.to_fractions()], dtype=float).reshape(self.s, self.s)

    def max_bits(self) -> int:
        return max((v.bit_length() for row in self.numerators for v in row), default=0)

    def row_sums(self) -> list[Dyadic]:
        return [Dyadic(sum(row), self.exponent) for row in self.numerators]

    def col_sums(self) -> list[Dyadic]:
        return [Dyadic(sum(col), self.exponent) for col in zip(*self.numerators)]

    def total(self) -> Dyadic:
        return Dyadic(sum(map(sum, self.numerators)), self.exponent)

    def max_entry(self) -> tuple[Dyadic, tuple[int, int]]:
        best, where = -1, (0, 0)
        for i, row in enumerate(self.numerators):
            for j, v in enumerate(row):
                if v > best:
                    best, where = v, (i, j)
        return Dyadic(best, self.exponent), where

    def matvec(self, vec: Sequence) -> list[Dyadic]:
        v = [Dyadic.coerce(x) for x in vec]
        out = []
        for row in self.numerators:
            acc = ZERO
            for a, b in zip(row, v):
                if a:
                    acc = acc + Dyadic(a, self.exponent) * b
            out.append(acc)
        return out

    def __matmul__(self, other: "DyadicMatrix") -> "DyadicMatrix":
        if not isinstance(other, DyadicMatrix):
            return NotImplemented
        if other.s != self.s:
            raise ValueError("dimension mismatch")
        cols = list(zip(*other.numerators))
        # fixed summation order keeps results bit-identical
        prod = [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in self.numerators]
        return DyadicMatrix(prod, self.exponent + other.exponent)

    def scale(self, factor) -> "DyadicMatrix":
        f = Dyadic.coerce(factor)
        return DyadicMatrix([[v * f.mantissa for v in row] for row in self.numerators], self.exponent + f.exponent)

    def __eq__(self, other) -> bool:
        if isinstance(other, DyadicMatrix):
            return self.numerators == other.numerators and self.exponent == other.exponent
        try:
            other = DyadicMatrix.from_entries(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self == other

    def __hash__(self) -> int:
        return hash((self.numerators, self.exponent))

    def __le__(self, other: "DyadicMatrix") -> bool:
        """Entrywise comparison."""
        e = max(self.exponent, other.exponent)
        return all(
            (a << (e - self.exponent)) <= (b << (e - other.exponent))
            for ra, rb in zip(self.numerators, other.numerators)
            for a, b in zip(ra, rb)
        )

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(d) for d in row) + "]" for row in self.rows())
        return f"DyadicMatrix([{body}])"

    def to_json(self) -> list[list[dict]]:
        return [[d.to_json() for d in row] for row in self.rows()]

    @classmethod
    def from_json(cls, obj) -> "DyadicMatrix":
        return cls.from_entries([[Dyadic.from_json(d) for d in row] for row in obj])


def matrix_power(K: DyadicMatrix, n: int, max_bits: int = DEFAULT_MAX_BITS) -> DyadicMatrix:
    """Exact K**n by repeated squaring; K**0 is the identity.

    Raises BudgetExceeded when an intermediate numerator exceeds ``max_bits``
    bits, in which case callers should switch to floating point.
    """
    if n < 0:
        raise ValueError("power must be non-negative")
    result = DyadicMatrix.identity(K.s)
    base = K
    while n:
        if n & 1:
            result = result @ base
            if result.max_bits() > max_bits:
                raise BudgetExceeded(f"exact power exceeds {max_bits}-bit budget")
        n >>= 1
        if n:
            base = base @ base
            if base.max_bits() > max_bits:
                raise BudgetExceeded(f"exact power exceeds {max_bits}-bit budget")
    return result

"""Floating-point numbers with an ell-bit mantissa and truncated arithmetic.

A value is ``m * 2**e`` with ``0 <= m < 2**ell``.  Every nonzero value is
stored with the top mantissa bit set, so structural equality is value
equality.  All bound checks are done on exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass(frozen=True, order=False)
class FloatL:
    mantissa: int
    exponent: int
    ell: int

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("precision must be at least 1")
        if self.mantissa == 0:
            if self.exponent != 0:
                raise ValueError("zero must be stored with exponent 0")
        elif not (1 << (self.ell - 1)) <= self.mantissa < (1 << self.ell):
            raise ValueError(f"mantissa {self.mantissa} is not normalised to {self.ell} bits")

    @classmethod
    def zero(cls, ell: int) -> "FloatL":
        return cls(0, 0, ell)

    @classmethod
    def exact(cls, x, ell: int) -> "FloatL":
        """The float equal to ``x``; raises if ``x`` is not representable."""
        x = Fraction(x)
        if x == 0:
            return cls.zero(ell)
        y = truncate(x, ell)
        if y.value != x:
            raise ValueError(f"{x} is not representable with {ell} bits")
        return y

    @property
    def value(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def size(self) -> int:
        """Bits of the representation: bit(m) + bit(|e|)."""
        return self.mantissa.bit_length() + abs(self.exponent).bit_length()

    def to_json(self) -> dict:
        return {"m": str(self.mantissa), "e": str(self.exponent), "ell": self.ell}

    @classmethod
    def from_json(cls, doc) -> "FloatL":
        return cls(int(doc["m"]), int(doc["e"]), int(doc["ell"]))

    def __repr__(self):
        return f"FloatL({self.mantissa}*2^{self.exponent}, ell={self.ell})"


def truncate(x, ell: int) -> FloatL:
    """Largest ell-bit float not exceeding the positive rational ``x``."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("truncate needs a positive value")
    if ell < 1:
        raise ValueError("precision must be at least 1")
    p, q = x.numerator, x.denominator
    # k = floor(log2(x))
    k = p.bit_length() - q.bit_length()
    if (p << max(0, -k)) < (q << max(0, k)):
        k -= 1
    e = k - (ell - 1)
    m = (p << -e) // q if e < 0 else p // (q << e)
    return FloatL(m, e, ell)


def _round_result(x: Fraction, ell: int) -> FloatL:
    return FloatL.zero(ell) if x == 0 else truncate(x, ell)


def _same_precision(a: FloatL, b: FloatL) -> int:
    if a.ell != b.ell:
        raise ValueError(f"precision mismatch: {a.ell} vs {b.ell}")
    return a.ell


def fp_add(a: FloatL, b: FloatL) -> FloatL:
    return _round_result(a.value + b.value, _same_precision(a, b))


def fp_sub(a: FloatL, b: FloatL) -> FloatL:
    ell = _same_precision(a, b)
    diff = a.value - b.value
    if diff < 0:
        raise ValueError("truncated subtraction would be negative")
    return _round_result(diff, ell)


def fp_mul(a: FloatL, b: FloatL) -> FloatL:
    return _round_result(a.value * b.value, _same_precision(a, b))


def fp_div(a: FloatL, b: FloatL) -> FloatL:
    ell = _same_precision(a, b)
    if b.mantissa == 0:
        raise ZeroDivisionError("truncated division by zero")
    return _round_result(a.value / b.value, ell)


def rel(x, y) -> Fraction:
    """Relative distance max(x/y, y/x) - 1 of two positive rationals."""
    x, y = Fraction(x), Fraction(y)
    if x <= 0 or y <= 0:
        raise ValueError("relative distance needs positive arguments")
    return max(x / y, y / x) - 1


def closeness_threshold(ell: int, i: int) -> Fraction:
    """(1 - 2^(1-ell))^(-i) - 1, exactly."""
    if ell < 2:
        raise ValueError("closeness needs ell >= 2")
    if i < 0:
        raise ValueError("closeness order must be nonnegative")
    base = 1 - Fraction(1, 1 << (ell - 1))
    return 1 / base**i - 1


def is_close(x, y, ell: int, i: int) -> bool:
    return rel(x, y) <= closeness_threshold(ell, i)


def rel_dist(mu: Sequence, nu: Sequence) -> Fraction:
    """Largest entrywise relative distance of two distributions with equal support."""
    if len(mu) != len(nu):
        raise ValueError("distributions differ in length")
    worst = Fraction(0)
    for a, b in zip(mu, nu):
        a, b = Fraction(a), Fraction(b)
        if a == 0 and b == 0:
            continue
        worst = max(worst, rel(a, b))
    return worst


@dataclass(frozen=True)
class FloatDist:
    """Distribution given by nonnegative ell-bit weights, normalised."""

    weights: tuple[FloatL, ...]

    @property
    def ell(self) -> int:
        return self.weights[0].ell

    @property
    def total(self) -> Fraction:
        return sum((w.value for w in self.weights), Fraction(0))

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        total = self.total
        return tuple(w.value / total for w in self.weights)


def round_distribution(mu: Sequence, ell: int) -> FloatDist:
    """Floating-point approximation of an exact distribution.

    Each entry is truncated to ell bits, the truncated entries are summed
    with truncated addition, and each entry is divided by that sum with
    truncated division.  Those quotients are the weights.
    """
    mu = [Fraction(x) for x in mu]
    if not mu:
        raise ValueError("empty distribution")
    if ell < 2:
        raise ValueError("rounding needs ell >= 2")
    if any(x <= 0 for x in mu):
        raise ValueError("zero or negative probability inside the declared support")
    if sum(mu) != 1:
        raise ValueError(f"distribution sums to {sum(mu)}")
    xs = [truncate(x, ell) for x in mu]
    acc = xs[0]
    for x in xs[1:]:
        acc = fp_add(acc, x)
    return FloatDist(tuple(fp_div(x, acc) for x in xs))


def is_dl_member(d: FloatDist) -> bool:
    """Whether the weights certify a floating-point distribution of their precision."""
    ws = d.weights
    if not ws:
        return False
    ell = ws[0].ell
    if any(w.ell != ell for w in ws):
        return False
    total = d.total
    if total <= 0:
        return False
    if ell == 1:
        return True
    return is_close(total, 1, ell, len(ws))

"""
Interval Module
Certified probability intervals [lo, hi] and the interval arithmetic the DP
engine needs. Every result encloses the exact result of its operands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional

import numpy as np

from errors import DomainError
from fpround import (
    Precision,
    active_precision,
    add_down,
    add_up,
    div_down,
    div_up,
    enclose,
    format_hex,
    mul_down,
    mul_up,
    parse_hex,
    sub_down,
    sub_up,
)


@dataclass(frozen=True)
class IntervalProb:
    """Closed interval of representable numbers enclosing a probability."""

    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise DomainError("interval endpoint is NaN", invariant="lo <= hi")
        if self.lo > self.hi:
            raise DomainError(
                f"empty interval [{self.lo!r}, {self.hi!r}]", invariant="lo <= hi"
            )
        if self.lo < 0:
            raise DomainError(f"negative lower bound {self.lo!r}", invariant="0 <= lo")

    @classmethod
    def from_exact(cls, value: Fraction) -> "IntervalProb":
        """Tightest enclosure of an exact rational in the active precision."""
        return cls(*enclose(Fraction(value)))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value) -> bool:
        value = Fraction(value)
        return Fraction(self.lo) <= value <= Fraction(self.hi)

    def intersects(self, other: "IntervalProb") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_json(self, precision: Optional[Precision] = None) -> Dict[str, str]:
        """
        Serialize as {"lo_hex", "hi_hex", "lo_dec", "hi_dec"}.

        Hex fields are authoritative; decimal fields are shortest
        round-trip decimals for display only.
        """
        precision = precision or active_precision()
        return {
            "lo_hex": format_hex(self.lo, precision),
            "hi_hex": format_hex(self.hi, precision),
            "lo_dec": shortest_decimal(self.lo, precision),
            "hi_dec": shortest_decimal(self.hi, precision),
        }

    @classmethod
    def from_json(
        cls, data: Dict[str, str], precision: Optional[Precision] = None
    ) -> "IntervalProb":
        return cls(
            parse_hex(data["lo_hex"], precision), parse_hex(data["hi_hex"], precision)
        )


ZERO = IntervalProb(0.0, 0.0)
ONE = IntervalProb(1.0, 1.0)


def shortest_decimal(x: float, precision: Optional[Precision] = None) -> str:
    precision = precision or active_precision()
    if precision is Precision.BINARY32:
        return np.format_float_scientific(np.float32(x), unique=True, trim="-")
    return repr(float(x))


def iv_add(a: IntervalProb, b: IntervalProb) -> IntervalProb:
    return IntervalProb(add_down(a.lo, b.lo).value, add_up(a.hi, b.hi).value)


def iv_mul(a: IntervalProb, b: IntervalProb) -> IntervalProb:
    return IntervalProb(mul_down(a.lo, b.lo).value, mul_up(a.hi, b.hi).value)


def iv_sub(a: IntervalProb, b: IntervalProb) -> IntervalProb:
    """
    Enclose a - b where the exact difference is known to be nonnegative
    (for instance 1 - p). A negative lower bound is lifted to 0.
    """
    lo = sub_down(a.lo, b.hi).value
    hi = sub_up(a.hi, b.lo).value
    if hi < 0:
        raise DomainError(
            "difference of intervals is certainly negative", invariant="a >= b"
        )
    return IntervalProb(max(lo, 0.0), hi)


def iv_div(a: IntervalProb, b: IntervalProb) -> IntervalProb:
    """Enclose a / b for nonnegative a and a strictly positive divisor."""
    if b.lo <= 0:
        raise DomainError(
            f"divisor interval [{b.lo!r}, {b.hi!r}] reaches 0", invariant="b.lo > 0"
        )
    return IntervalProb(div_down(a.lo, b.hi).value, div_up(a.hi, b.lo).value)


def iv_clamp_unit(a: IntervalProb) -> IntervalProb:
    """Replace hi by min(hi, 1); the exact value is a probability."""
    if a.lo > 1:
        raise DomainError(f"lower bound {a.lo!r} exceeds 1", invariant="lo <= 1")
    return IntervalProb(a.lo, min(a.hi, 1.0))


def iv_complement(a: IntervalProb) -> IntervalProb:
    """Enclose 1 - p as [sub_down(1, hi), sub_up(1, lo)]."""
    return iv_sub(ONE, a)


def iv_sum(intervals: Iterable[IntervalProb]) -> IntervalProb:
    """Sum in iteration order (the order is part of the result)."""
    total = ZERO
    for interval in intervals:
        total = iv_add(total, interval)
    return total

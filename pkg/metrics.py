"""
Metrics Module
Absolute and relative errors of point and interval approximations of
probabilities, optimal approximators, maximal representable accuracy and the
display forms used in reports (3-significant-digit bounds, T notation).

Errors are evaluated exactly on rationals and reported rounded up, so every
reported error is an upper bound.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

from errors import DomainError
from fpround import (
    Direction,
    Precision,
    RoundingMode,
    active_precision,
    enclose,
    round_exact,
)

Number = Union[Fraction, float, int]
Exact = Union[Fraction, float]  # float only for math.inf

HALF = Fraction(1, 2)
MIN_T_DIGITS = 7
T_TAIL_DIGITS = 5


def _exact(x: Number, name: str = "p") -> Fraction:
    value = Fraction(x)
    if not 0 <= value <= 1:
        raise DomainError(f"{name}={x!r} outside [0, 1]", invariant="0 <= p <= 1")
    return value


def _up(value: Exact) -> float:
    if value == math.inf:
        return math.inf
    return round_exact(value, Direction.UP)


def _nearest(value: Fraction) -> float:
    down, up = enclose(value, mode=RoundingMode.STRONG)
    if down == up:
        return up
    return down if value - Fraction(down) <= Fraction(up) - value else up


def _rel(p: Fraction, approx: Fraction) -> Exact:
    error = abs(p - approx)
    scale = min(p, 1 - p)
    if error == 0:
        return Fraction(0)
    if scale == 0:
        return math.inf
    return error / scale


# ============ POINT ERRORS ============


def e_abs_point(p: Number, approx: Number) -> float:
    """|p - approx| rounded up."""
    return _up(abs(_exact(p) - _exact(approx, "approx")))


def e_rel_point(p: Number, approx: Number) -> float:
    """|p - approx| / min(p, 1 - p) rounded up, with 0/0 = 0 and x/0 = inf."""
    return _up(_rel(_exact(p), _exact(approx, "approx")))


# ============ INTERVAL ERRORS ============


def _check_interval(a: Number, b: Number) -> Tuple[Fraction, Fraction]:
    lo, hi = _exact(a, "a"), _exact(b, "b")
    if lo > hi:
        raise DomainError(f"empty interval [{a!r}, {b!r}]", invariant="a <= b")
    return lo, hi


def _rel_at(lo: Fraction, hi: Fraction, approx: Fraction) -> Exact:
    # the worst point of [lo, hi] is an endpoint when approx lies inside
    return max(_rel(lo, approx), _rel(hi, approx))


def e_rel_interval_at(a: Number, b: Number, approx: Number) -> float:
    """Worst relative error of approx over all p in [a, b]."""
    lo, hi = _check_interval(a, b)
    guess = Fraction(approx)
    if not lo <= guess <= hi:
        raise DomainError(
            f"approximation {approx!r} outside [{a!r}, {b!r}]",
            invariant="a <= approx <= b",
        )
    return _up(_rel_at(lo, hi, guess))


@dataclass(frozen=True)
class Optimum:
    """A minimax error, its best approximator and how it was found."""

    value: float
    approximator: float
    exact: Exact
    numeric: bool = False


def _ordinal(x: float, precision: Precision) -> int:
    if precision is Precision.BINARY64:
        return struct.unpack(">Q", struct.pack(">d", x))[0]
    return struct.unpack(">I", struct.pack(">f", x))[0]


def _from_ordinal(i: int, precision: Precision) -> float:
    if precision is Precision.BINARY64:
        return struct.unpack(">d", struct.pack(">Q", i))[0]
    return struct.unpack(">f", struct.pack(">I", i))[0]


def _bisect_straddling(lo: Fraction, hi: Fraction) -> Optimum:
    """
    Minimize max(e_rel(lo, x), e_rel(hi, x)) over representable x in
    [lo, hi]; the first term grows and the second shrinks with x.
    """
    precision = active_precision()
    left = enclose(lo)[1]
    right = enclose(hi)[0]
    if left > right:
        left = right = _nearest((lo + hi) / 2)

    def rising(x: float) -> Exact:
        return _rel(lo, Fraction(x))

    def falling(x: float) -> Exact:
        return _rel(hi, Fraction(x))

    i, j = _ordinal(left, precision), _ordinal(right, precision)
    if rising(right) <= falling(right):
        i = j
    else:
        while j - i > 1:
            middle = (i + j) // 2
            if rising(_from_ordinal(middle, precision)) <= falling(
                _from_ordinal(middle, precision)
            ):
                i = middle
            else:
                j = middle
    best, best_value = None, None
    for candidate in (i, j):
        x = _from_ordinal(candidate, precision)
        value = max(rising(x), falling(x))
        if best_value is None or value < best_value:
            best, best_value = x, value
    return Optimum(_up(best_value), best, best_value, numeric=True)


def e_rel_interval_detail(a: Number, b: Number) -> Optimum:
    """
    Minimax relative error over [a, b] and its optimizing approximator.

    Closed forms cover [a, b] within [0, 1/2] or within [1/2, 1]; an
    interval straddling 1/2 is solved by bisection over representable
    approximators and flagged numeric.
    """
    lo, hi = _check_interval(a, b)
    if lo == hi:
        return Optimum(0.0, _nearest(lo), Fraction(0))
    if hi <= HALF:
        value = (hi - lo) / (hi + lo)
        best = 2 * lo * hi / (lo + hi)
    elif lo >= HALF:
        value = (hi - lo) / (2 - lo - hi)
        best = (lo + hi - 2 * lo * hi) / (2 - lo - hi)
    else:
        return _bisect_straddling(lo, hi)
    return Optimum(_up(value), _nearest(best), value)


def e_rel_interval(a: Number, b: Number) -> Tuple[float, float]:
    """(minimax relative error rounded up, best approximator)."""
    optimum = e_rel_interval_detail(a, b)
    return optimum.value, optimum.approximator


def e_abs_interval(a: Number, b: Number) -> Tuple[float, float]:
    """((b - a) / 2 rounded up, midpoint)."""
    lo, hi = _check_interval(a, b)
    return _up((hi - lo) / 2), _nearest((lo + hi) / 2)


# ============ MAXIMAL ACCURACY ============


def max_accuracy(p: Number, precision: Optional[Precision] = None) -> float:
    """
    Relative error of the tightest representable enclosure I(p).

    0 for representable p, infinity when I(p) touches 0 or 1.
    """
    value = _exact(p)
    lo, hi = enclose(value, precision, RoundingMode.STRONG)
    if lo == hi:
        return 0.0
    if lo == 0 or hi == 1:
        return math.inf
    low, high = Fraction(lo), Fraction(hi)
    if high <= HALF:
        return _up((high - low) / (high + low))
    return _up((high - low) / (2 - low - high))


def max_accuracy_complement(p: Number, precision: Optional[Precision] = None) -> float:
    """Accuracy needed for both p and 1 - p: max(e_rel(p), e_rel(1 - p))."""
    value = _exact(p)
    return max(max_accuracy(value, precision), max_accuracy(1 - value, precision))


# ============ DISPLAY FORMS ============


def _floor_log10(x: Fraction) -> int:
    k = len(str(x.numerator)) - len(str(x.denominator))
    while Fraction(10) ** k > x:
        k -= 1
    while Fraction(10) ** (k + 1) <= x:
        k += 1
    return k


def display_bound_3sig(x: Number) -> str:
    """
    Smallest c * 10^k >= x with c of exactly three significant digits,
    rendered as "2.01e-11". 0 gives "0" and infinity gives "inf".
    """
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    value = Fraction(x)
    if value < 0:
        raise DomainError(f"cannot display negative bound {x!r}", invariant="x >= 0")
    if value == 0:
        return "0"
    k = _floor_log10(value)
    scaled = value / Fraction(10) ** (k - 2)
    mantissa = -(-scaled.numerator // scaled.denominator)
    if mantissa == 1000:
        mantissa, k = 100, k + 1
    return f"{mantissa // 100}.{mantissa % 100:02d}e{k}"


def _leading_run(value: Fraction) -> Optional[int]:
    """Leading decimal zeros of value (v < 1/2) or nines (v >= 1/2)."""
    distance = value if value < HALF else 1 - value
    if distance == 0:
        return None
    run = 0
    while distance * Fraction(10) ** (run + 1) < 1:
        run += 1
    return run


def _t_length(value: Fraction) -> Optional[int]:
    run = _leading_run(value)
    if run is None:
        return None
    return max(MIN_T_DIGITS, run + T_TAIL_DIGITS)


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + HALF)


def _t_digits(value: Fraction, length: int) -> str:
    """Decimals of value rounded to length places, ties away from the run."""
    scale = 10**length
    if value < HALF:
        return str(_round_half_up(value * scale)).zfill(length)
    complement = _round_half_up((1 - value) * scale)
    if complement == 0:
        return "9" * length
    return str(scale - complement).zfill(length)


def _compress(digits: str) -> str:
    if not digits:
        return ""
    lead = digits[0]
    if lead not in "09":
        return digits
    run = len(digits) - len(digits.lstrip(lead))
    if run < 3:
        return digits
    exponent = f"{{{run}}}" if run >= 10 else str(run)
    return f"{lead}^{exponent}{digits[run:]}"


def _shared_prefix(first: str, second: str) -> str:
    for index, (x, y) in enumerate(zip(first, second)):
        if x != y:
            return first[:index]
    return first[: min(len(first), len(second))]


def format_T(a: Number, b: Number) -> str:
    """
    Known digits of the T-value nearest to a probability in [a, b].

    Each endpoint is rounded to its own T precision (7 decimals, or the
    leading run of 0s or 9s plus 5 digits). The digits both images share
    are printed, followed by "?" at the first disagreement. Runs of three
    or more leading 0s or 9s are compressed, e.g. ".0^377957" or ".9^{10}?".
    """
    lo, hi = _check_interval(a, b)
    if lo == hi == 0:
        return "0"
    if lo == hi == 1:
        return "1"
    lo_length, hi_length = _t_length(lo), _t_length(hi)
    if lo_length is None and hi_length is None:
        return ".?"
    lo_digits = _t_digits(lo, lo_length or hi_length)
    hi_digits = _t_digits(hi, hi_length or lo_length)
    if lo_digits == hi_digits:
        return f".{_compress(lo_digits)}"
    return f".{_compress(_shared_prefix(lo_digits, hi_digits))}?"


def t_image(p: Number) -> str:
    """T notation of a single probability."""
    return format_T(p, p)


# ============ REPORT ============


@dataclass(frozen=True)
class ErrorReport:
    """Accuracy summary of one certified interval."""

    lo: float
    hi: float
    e_abs_opt: float
    e_rel_opt: float
    e_abs_display: str
    e_rel_display: str
    best_abs_approximator: float
    best_rel_approximator: float
    numeric: bool
    approx: str

    def to_json(self) -> dict:
        return {
            "e_abs": self.e_abs_display,
            "e_rel": self.e_rel_display,
            "best_abs_approximator": repr(self.best_abs_approximator),
            "best_rel_approximator": repr(self.best_rel_approximator),
            "numeric": self.numeric,
            "approx": self.approx,
        }


def error_report(lo: Number, hi: Number) -> ErrorReport:
    """
    Bundle the accuracy figures of [lo, hi].

    The relative error of a nondegenerate interval touching 0 or 1 is
    reported as infinity.
    """
    low, high = _check_interval(lo, hi)
    half_width = (high - low) / 2
    abs_value, abs_best = e_abs_interval(lo, hi)
    if low < high and (low == 0 or high == 1):
        relative = Optimum(math.inf, _nearest((low + high) / 2), math.inf)
    else:
        relative = e_rel_interval_detail(lo, hi)
    return ErrorReport(
        lo=float(lo),
        hi=float(hi),
        e_abs_opt=abs_value,
        e_rel_opt=relative.value,
        e_abs_display=display_bound_3sig(half_width),
        e_rel_display=display_bound_3sig(relative.exact),
        best_abs_approximator=abs_best,
        best_rel_approximator=relative.approximator,
        numeric=relative.numeric,
        approx=format_T(lo, hi),
    )

"""
Directed Rounding Module
Floating-point operations rounded up or down, for binary64 and binary32,
and the hex-float text format used to publish certified bounds.

Scalar operations compare the nearest-rounded result with the exact rational
result, so they always return the optimal directed neighbour (STRONG) or the
one-ulp-wider symmetric enclosure (FALLBACK). Array operations use error-free
transformations (two-sum, Dekker two-product, exact division remainder).
"""

from __future__ import annotations

import contextvars
import math
import re
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from errors import DomainError, HexParseError

Number = Union[float, int, Fraction]

HEX_SEPARATOR = "·"
ASCII_HEX_SEPARATOR = "*"


class Precision(Enum):
    """Supported IEEE-754 number systems."""

    BINARY64 = "binary64"
    BINARY32 = "binary32"

    @property
    def dtype(self):
        return np.float64 if self is Precision.BINARY64 else np.float32

    @property
    def mantissa_bits(self) -> int:
        return 52 if self is Precision.BINARY64 else 23

    @property
    def hex_digits(self) -> int:
        return 13 if self is Precision.BINARY64 else 6

    @property
    def min_normal_exponent(self) -> int:
        return -1022 if self is Precision.BINARY64 else -126

    @property
    def max_exponent(self) -> int:
        return 1023 if self is Precision.BINARY64 else 127

    @property
    def max_value(self) -> float:
        return float(np.finfo(self.dtype).max)


class RoundingMode(Enum):
    """STRONG returns optimal directed results, FALLBACK may be one ulp wider."""

    STRONG = "strong"
    FALLBACK = "fallback"


class Direction(Enum):
    UP = "up"
    DOWN = "down"


class Flag(Enum):
    EXACT = "exact"
    ROUNDED_UP = "rounded-up"
    ROUNDED_DOWN = "rounded-down"
    INVALID = "invalid"


@dataclass(frozen=True)
class RoundResult:
    """Outcome of one directed operation. value is None when invalid."""

    value: Optional[float]
    flag: Flag

    @property
    def is_invalid(self) -> bool:
        return self.flag is Flag.INVALID


# ============ ROUNDING SESSION ============

_SESSION: contextvars.ContextVar = contextvars.ContextVar(
    "rigscan_rounding_session",
    default=(RoundingMode.STRONG, Precision.BINARY64),
)


@contextmanager
def rounding_session(
    mode: Optional[RoundingMode] = None, precision: Optional[Precision] = None
) -> Iterator[None]:
    """
    Install a rounding mode and precision for the current context.

    Each thread starts from the defaults (STRONG, binary64), so a session
    opened in one thread never leaks into another.

    Args:
        mode: Rounding mode to use, or None to keep the current one
        precision: Number system to use, or None to keep the current one
    """
    current_mode, current_precision = _SESSION.get()
    token = _SESSION.set((mode or current_mode, precision or current_precision))
    try:
        yield
    finally:
        _SESSION.reset(token)


def active_mode() -> RoundingMode:
    return _SESSION.get()[0]


def active_precision() -> Precision:
    return _SESSION.get()[1]


# ============ REPRESENTABLE NUMBERS ============


def _clean(x: float) -> float:
    # -0.0 -> 0.0
    return x + 0.0


def next_up(x: float, precision: Optional[Precision] = None) -> float:
    precision = precision or active_precision()
    if precision is Precision.BINARY64:
        return _clean(math.nextafter(x, math.inf))
    return _clean(float(np.nextafter(np.float32(x), np.float32(np.inf))))


def next_down(x: float, precision: Optional[Precision] = None) -> float:
    precision = precision or active_precision()
    if precision is Precision.BINARY64:
        return _clean(math.nextafter(x, -math.inf))
    return _clean(float(np.nextafter(np.float32(x), np.float32(-np.inf))))


def ulp(x: float, precision: Optional[Precision] = None) -> float:
    """Gap between |x| and the next representable number above it."""
    x = abs(x)
    return next_up(x, precision) - x


def is_representable(x: float, precision: Optional[Precision] = None) -> bool:
    precision = precision or active_precision()
    if math.isnan(x):
        return False
    if precision is Precision.BINARY64 or math.isinf(x):
        return True
    with np.errstate(over="ignore"):
        return float(np.float32(x)) == x


def _nearest(exact: Fraction, precision: Precision) -> float:
    try:
        z = float(exact)
    except OverflowError:
        return math.copysign(math.inf, exact)
    if precision is Precision.BINARY32:
        with np.errstate(over="ignore"):
            z = float(np.float32(z))
    return z


def enclose(
    exact: Number,
    precision: Optional[Precision] = None,
    mode: Optional[RoundingMode] = None,
) -> Tuple[float, float]:
    """
    Return representable (down, up) with down <= exact <= up.

    In STRONG mode this is the minimal enclosing interval I(exact); in
    FALLBACK mode inexact values are widened one step on both sides of the
    nearest representable number.

    Args:
        exact: Exact rational (floats and ints are taken at face value)
        precision: Number system, defaults to the active session
        mode: Rounding mode, defaults to the active session

    Returns:
        Tuple (down, up)
    """
    precision = precision or active_precision()
    mode = mode or active_mode()
    exact = Fraction(exact)
    z = _nearest(exact, precision)
    if math.isinf(z):
        if z > 0:
            return precision.max_value, math.inf
        return -math.inf, -precision.max_value
    near = Fraction(z)
    if near == exact:
        return _clean(z), _clean(z)
    if mode is RoundingMode.STRONG:
        if near < exact:
            return _clean(z), next_up(z, precision)
        return next_down(z, precision), _clean(z)
    down, up = next_down(z, precision), next_up(z, precision)
    if exact >= 0:
        down = max(down, 0.0)
    if exact <= 0:
        up = min(up, 0.0)
    return down, up


def round_exact(
    exact: Number, direction: Direction, precision: Optional[Precision] = None
) -> float:
    """Round an exact rational in one direction."""
    down, up = enclose(exact, precision)
    return up if direction is Direction.UP else down


# ============ SCALAR OPERATIONS ============


def _check_operand(x: float, precision: Precision) -> None:
    if not is_representable(x, precision):
        raise DomainError(
            f"{x!r} is not representable in {precision.value}",
            invariant="operand representable",
        )


def _special(op: str, x: float, y: float) -> Optional[float]:
    """Float result for operands involving infinities, NaN for invalid forms."""
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    return x / y


def _directed(op: str, x: float, y: float, direction: Direction) -> RoundResult:
    precision = active_precision()
    x, y = float(x), float(y)
    _check_operand(x, precision)
    _check_operand(y, precision)
    if op == "div" and y == 0:
        raise DomainError("division by zero", invariant="divisor nonzero")

    if math.isinf(x) or math.isinf(y):
        value = _special(op, x, y)
        if math.isnan(value):
            return RoundResult(None, Flag.INVALID)
        return RoundResult(_clean(value), Flag.EXACT)

    fx, fy = Fraction(x), Fraction(y)
    if op == "add":
        exact = fx + fy
    elif op == "sub":
        exact = fx - fy
    elif op == "mul":
        exact = fx * fy
    else:
        exact = fx / fy

    down, up = enclose(exact, precision)
    if down == up:
        return RoundResult(up, Flag.EXACT)
    if direction is Direction.UP:
        return RoundResult(up, Flag.ROUNDED_UP)
    return RoundResult(down, Flag.ROUNDED_DOWN)


def add_up(x: float, y: float) -> RoundResult:
    return _directed("add", x, y, Direction.UP)


def add_down(x: float, y: float) -> RoundResult:
    return _directed("add", x, y, Direction.DOWN)


def sub_up(x: float, y: float) -> RoundResult:
    return _directed("sub", x, y, Direction.UP)


def sub_down(x: float, y: float) -> RoundResult:
    return _directed("sub", x, y, Direction.DOWN)


def mul_up(x: float, y: float) -> RoundResult:
    return _directed("mul", x, y, Direction.UP)


def mul_down(x: float, y: float) -> RoundResult:
    return _directed("mul", x, y, Direction.DOWN)


def div_up(x: float, y: float) -> RoundResult:
    return _directed("div", x, y, Direction.UP)


def div_down(x: float, y: float) -> RoundResult:
    return _directed("div", x, y, Direction.DOWN)


SCALAR_OPERATIONS = {
    ("add", Direction.UP): add_up,
    ("add", Direction.DOWN): add_down,
    ("sub", Direction.UP): sub_up,
    ("sub", Direction.DOWN): sub_down,
    ("mul", Direction.UP): mul_up,
    ("mul", Direction.DOWN): mul_down,
    ("div", Direction.UP): div_up,
    ("div", Direction.DOWN): div_down,
}


# ============ ARRAY OPERATIONS ============


@dataclass(frozen=True)
class _EftLimits:
    split: float
    operand_max: float
    product_min: float


_LIMITS = {
    np.dtype(np.float64): _EftLimits(
        split=2.0**27 + 1.0, operand_max=2.0**990, product_min=2.0**-960
    ),
    np.dtype(np.float32): _EftLimits(
        split=2.0**12 + 1.0, operand_max=2.0**110, product_min=2.0**-96
    ),
}


def _as_array(a, dtype) -> np.ndarray:
    return np.asarray(a, dtype=dtype)


def _two_sum(a: np.ndarray, b: np.ndarray):
    s = a + b
    bp = s - a
    ap = s - bp
    err = (a - ap) + (b - bp)
    return s, err, np.isfinite(s)


def _split(a: np.ndarray, factor):
    c = factor * a
    hi = c - (c - a)
    return hi, a - hi


def _product_error(a: np.ndarray, b: np.ndarray, limits: _EftLimits):
    p = a * b
    factor = a.dtype.type(limits.split)
    ah, al = _split(a, factor)
    bh, bl = _split(b, factor)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _two_prod(a: np.ndarray, b: np.ndarray, limits: _EftLimits):
    p, err = _product_error(a, b, limits)
    zero = (a == 0) | (b == 0)
    valid = (
        np.isfinite(p)
        & (np.abs(a) < limits.operand_max)
        & (np.abs(b) < limits.operand_max)
        & (zero | (np.abs(p) >= limits.product_min))
    )
    err = np.where(zero, 0, err)
    return p, err, valid | zero


def _select(z, err_sign, valid, nonneg, nonpos, direction: Direction, mode: RoundingMode):
    inf = z.dtype.type(np.inf)
    if mode is RoundingMode.STRONG:
        if direction is Direction.UP:
            step = valid & (err_sign > 0)
        else:
            step = valid & (err_sign < 0)
    else:
        step = valid & (err_sign != 0)
    step = step | ~valid
    if direction is Direction.UP:
        out = np.where(step, np.nextafter(z, inf), z)
        out = np.where(nonpos, np.minimum(out, 0), out)
    else:
        out = np.where(step, np.nextafter(z, -inf), z)
        out = np.where(nonneg, np.maximum(out, 0), out)
    return out + z.dtype.type(0)


def _step_nonnegative(z, err, step_anyway, direction: Direction, mode: RoundingMode):
    if mode is RoundingMode.STRONG:
        step = err > 0 if direction is Direction.UP else err < 0
    else:
        step = err != 0
    if step_anyway is not None:
        step = step | step_anyway
    target = z.dtype.type(np.inf if direction is Direction.UP else 0)
    return np.where(step, np.nextafter(z, target), z) + z.dtype.type(0)


def _resolve(a, b, mode):
    precision = active_precision()
    dtype = np.dtype(precision.dtype)
    return (
        _as_array(a, dtype),
        _as_array(b, dtype),
        mode or active_mode(),
        _LIMITS[dtype],
    )


def vadd(
    a,
    b,
    direction: Direction,
    mode: Optional[RoundingMode] = None,
    nonnegative: bool = False,
) -> np.ndarray:
    """
    Elementwise directed addition of arrays in the active precision.

    With nonnegative=True the caller promises finite operands >= 0 below
    the overflow range (probability masses); sign and overflow handling is
    skipped and the results are the same.

    Args:
        a: First operand array
        b: Second operand array
        direction: Direction.UP or Direction.DOWN
        mode: Overrides the session rounding mode
        nonnegative: Operands are known finite and >= 0

    Returns:
        Array of directed sums
    """
    a, b, mode, _ = _resolve(a, b, mode)
    with np.errstate(all="ignore"):
        if nonnegative:
            s, err, _ = _two_sum(a, b)
            return _step_nonnegative(s, err, None, direction, mode)
        s, err, valid = _two_sum(a, b)
        nonneg = (a >= 0) & (b >= 0)
        nonpos = (a <= 0) & (b <= 0)
        return _select(s, np.sign(err), valid, nonneg, nonpos, direction, mode)


def vsub(a, b, direction: Direction, mode: Optional[RoundingMode] = None) -> np.ndarray:
    return vadd(a, -np.asarray(b), direction, mode)


def vmul(
    a,
    b,
    direction: Direction,
    mode: Optional[RoundingMode] = None,
    nonnegative: bool = False,
) -> np.ndarray:
    """Elementwise directed multiplication (see vadd)."""
    a, b, mode, limits = _resolve(a, b, mode)
    if nonnegative and a.size and b.size and max(a.max(), b.max()) < limits.operand_max:
        with np.errstate(all="ignore"):
            p, err = _product_error(a, b, limits)
            tiny = p < limits.product_min
            if tiny.any():
                # the error term is unreliable once the product underflows
                tiny &= (a != 0) & (b != 0)
            else:
                tiny = None
            return _step_nonnegative(p, err, tiny, direction, mode)
    with np.errstate(all="ignore"):
        p, err, valid = _two_prod(a, b, limits)
        nonneg = np.sign(a) * np.sign(b) >= 0
        nonpos = np.sign(a) * np.sign(b) <= 0
        return _select(p, np.sign(err), valid, nonneg, nonpos, direction, mode)


def vdiv(a, b, direction: Direction, mode: Optional[RoundingMode] = None) -> np.ndarray:
    """Elementwise directed division; divisors must be nonzero."""
    a, b, mode, limits = _resolve(a, b, mode)
    if np.any(b == 0):
        raise DomainError("division by zero", invariant="divisor nonzero")
    with np.errstate(all="ignore"):
        q = a / b
        h, low, valid = _two_prod(q, b, limits)
        r = (a - h) - low
        valid = valid & np.isfinite(q) & ((q != 0) | (a == 0))
        valid = valid & ((a == 0) | (np.abs(a) >= limits.product_min))
        nonneg = np.sign(a) * np.sign(b) >= 0
        nonpos = np.sign(a) * np.sign(b) <= 0
        return _select(q, np.sign(r) * np.sign(b), valid, nonneg, nonpos, direction, mode)


# ============ HEX FORMAT ============


def _decompose(x: float, precision: Precision) -> Tuple[str, int, int]:
    if precision is Precision.BINARY64:
        bits = struct.unpack(">Q", struct.pack(">d", x))[0]
        biased = (bits >> 52) & 0x7FF
        mantissa = bits & ((1 << 52) - 1)
        bias = 1023
    else:
        bits = struct.unpack(">I", struct.pack(">f", x))[0]
        biased = (bits >> 23) & 0xFF
        # 23 fraction bits padded to six hex digits
        mantissa = (bits & ((1 << 23) - 1)) << 1
        bias = 127
    if biased == 0:
        return "0", precision.min_normal_exponent, mantissa
    return "1", biased - bias, mantissa


def format_hex(
    x: float,
    precision: Optional[Precision] = None,
    separator: str = HEX_SEPARATOR,
) -> str:
    """
    Format a nonnegative representable number bit-exactly.

    Normal numbers render as ``1.<hex digits>·2^<e>``, subnormals as
    ``0.<hex digits>·2^<emin>``; 0 and 1 render as ``0`` and ``1``.

    Args:
        x: Value to format
        precision: Number system, defaults to the active session
        separator: Multiplication sign between significand and power

    Returns:
        Lossless text form
    """
    precision = precision or active_precision()
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"cannot hex-format {x!r}", invariant="finite and >= 0")
    if not is_representable(x, precision):
        raise DomainError(f"{x!r} is not representable in {precision.value}")
    if x == 0:
        return "0"
    if x == 1:
        return "1"
    lead, exponent, mantissa = _decompose(x, precision)
    digits = f"{mantissa:0{precision.hex_digits}x}"
    return f"{lead}.{digits}{separator}2^{exponent}"


_SIGNIFICAND = re.compile(r"[01]\.[0-9a-f]+")
_EXPONENT = re.compile(r"[+-]?[0-9]+")


def parse_hex(text: str, precision: Optional[Precision] = None) -> float:
    """
    Parse the format produced by format_hex (either separator accepted).

    Args:
        text: Hex-float text
        precision: Number system the digits were written for

    Returns:
        The exact representable value

    Raises:
        HexParseError: Naming the token that breaks the grammar
    """
    precision = precision or active_precision()
    stripped = text.strip()
    if stripped == "0":
        return 0.0
    if stripped == "1":
        return 1.0

    for separator in (HEX_SEPARATOR, ASCII_HEX_SEPARATOR):
        if separator in stripped:
            significand, _, power = stripped.partition(separator)
            break
    else:
        raise HexParseError(text, stripped)

    if not _SIGNIFICAND.fullmatch(significand):
        raise HexParseError(text, significand)
    lead, digits = significand.split(".")
    if len(digits) != precision.hex_digits:
        raise HexParseError(text, digits)
    if not power.startswith("2^"):
        raise HexParseError(text, power[:2] or power)
    exponent_text = power[2:]
    if not _EXPONENT.fullmatch(exponent_text):
        raise HexParseError(text, exponent_text)
    exponent = int(exponent_text)

    if lead == "0" and exponent != precision.min_normal_exponent:
        raise HexParseError(text, exponent_text)
    # normalized notation may also spell a subnormal value
    if lead == "1" and not (
        precision.min_normal_exponent - precision.mantissa_bits
        <= exponent
        <= precision.max_exponent
    ):
        raise HexParseError(text, exponent_text)

    scaled = Fraction(int(lead + digits, 16), 16 ** len(digits))
    value = scaled * Fraction(2) ** exponent
    result = _nearest(value, precision)
    if Fraction(result) != value:
        raise HexParseError(text, digits)
    return result

"""
Test Suite for Directed Rounding Module
Tests scalar and array directed operations, enclosures, rounding sessions
and the hex-float format.
"""

import math
import os
import random
import threading
import unittest
from fractions import Fraction

import numpy as np

from errors import DomainError, HexParseError
from fpround import (
    SCALAR_OPERATIONS,
    Direction,
    Flag,
    Precision,
    RoundingMode,
    active_mode,
    active_precision,
    add_down,
    add_up,
    div_up,
    enclose,
    format_hex,
    mul_down,
    mul_up,
    next_down,
    next_up,
    parse_hex,
    rounding_session,
    ulp,
    vadd,
    vdiv,
    vmul,
    vsub,
)

TINY = 2.0**-1074
SLOW = os.environ.get("RIGSCAN_SLOW") == "1"
SOUNDNESS_PAIRS = 100_000 if SLOW else 1_500


def random_operand(rng: random.Random) -> float:
    """Operands from the subnormal, normal and near-overflow ranges, either sign."""
    kind = rng.random()
    if kind < 0.1:
        value = rng.randint(1, 2**52 - 1) * TINY
    elif kind < 0.2:
        value = float(rng.randint(0, 50))
    elif kind < 0.3:
        value = math.ldexp(rng.getrandbits(52) | 1 << 52, rng.randint(970, 971))
    elif kind < 0.4:
        value = math.ldexp(rng.getrandbits(52) | 1 << 52, rng.randint(-1074, -1000))
    else:
        value = math.ldexp(rng.getrandbits(52) | 1 << 52, rng.randint(-200, 100))
    return -value if rng.random() < 0.25 else value


def exact_result(op: str, x: float, y: float) -> Fraction:
    fx, fy = Fraction(x), Fraction(y)
    return {"add": fx + fy, "sub": fx - fy, "mul": fx * fy, "div": fx / fy}[op]


class TestScalarOperations(unittest.TestCase):
    """Test the eight scalar directed operations."""

    def test_non_associativity_example(self):
        """Grouping changes a down-rounded sum."""
        with rounding_session(RoundingMode.STRONG):
            inner = add_down(1.0, 2.0**-53).value
            self.assertEqual(inner, 1.0)
            self.assertEqual(add_down(-1.0, inner).value, 0.0)
            first = add_down(-1.0, 1.0).value
            self.assertEqual(first, 0.0)
            self.assertEqual(add_down(first, 2.0**-53).value, 2.0**-53)

    def test_exact_sum_flag(self):
        """Test representable sums are exact."""
        result = add_up(0.5, 0.25)
        self.assertEqual(result.value, 0.75)
        self.assertEqual(result.flag, Flag.EXACT)

    def test_mul_up_is_smallest_upper_bound(self):
        """Test mul_up(0.1, 0.1) against the exact product."""
        exact = Fraction(0.1) * Fraction(0.1)
        up = mul_up(0.1, 0.1)
        down = mul_down(0.1, 0.1)
        self.assertEqual(up.flag, Flag.ROUNDED_UP)
        self.assertGreaterEqual(Fraction(up.value), exact)
        self.assertLess(Fraction(next_down(up.value)), exact)
        self.assertLessEqual(Fraction(down.value), exact)
        self.assertGreater(Fraction(next_up(down.value)), exact)
        self.assertEqual(next_up(down.value), up.value)

    def test_random_soundness_and_optimality(self):
        """Test containment and optimality against rational arithmetic."""
        rng = random.Random(20240501)
        for mode in RoundingMode:
            with rounding_session(mode):
                for _ in range(SOUNDNESS_PAIRS):
                    x, y = random_operand(rng), random_operand(rng)
                    for (op, direction), operation in SCALAR_OPERATIONS.items():
                        if op == "div" and y == 0:
                            continue
                        exact = exact_result(op, x, y)
                        z = operation(x, y).value
                        if math.isinf(z) or math.isinf(next_up(abs(z))):
                            self.assertGreater(abs(exact), Fraction(Precision.BINARY64.max_value) / 2)
                            continue
                        if direction is Direction.UP:
                            self.assertGreaterEqual(Fraction(z), exact)
                            if mode is RoundingMode.STRONG:
                                self.assertLess(Fraction(next_down(z)), exact)
                        else:
                            self.assertLessEqual(Fraction(z), exact)
                            if mode is RoundingMode.STRONG:
                                self.assertGreater(Fraction(next_up(z)), exact)

    def test_fallback_is_at_most_one_ulp_wider(self):
        """Test FALLBACK widens inexact results by one step."""
        strong = mul_up(0.1, 0.3).value
        with rounding_session(RoundingMode.FALLBACK):
            fallback = mul_up(0.1, 0.3).value
            self.assertEqual(active_mode(), RoundingMode.FALLBACK)
        self.assertIn(fallback, (strong, next_up(strong)))

    def test_division_by_zero(self):
        """Test division by zero raises DomainError."""
        with self.assertRaises(DomainError):
            div_up(1.0, 0.0)

    def test_invalid_forms(self):
        """Test 0 * inf and inf + (-inf) are flagged invalid."""
        self.assertTrue(mul_up(0.0, math.inf).is_invalid)
        self.assertTrue(add_down(math.inf, -math.inf).is_invalid)
        self.assertIsNone(add_up(math.inf, -math.inf).value)

    def test_overflow_saturates(self):
        """Test overflow rounds up to infinity and down to the maximum."""
        self.assertEqual(mul_up(1e308, 10.0).value, math.inf)
        self.assertEqual(mul_down(1e308, 10.0).value, Precision.BINARY64.max_value)


class TestEnclose(unittest.TestCase):
    """Test tightest enclosures of exact rationals."""

    def test_representable_value(self):
        self.assertEqual(enclose(Fraction(1, 2)), (0.5, 0.5))

    def test_one_third(self):
        """Test I(1/3) has adjacent endpoints."""
        down, up = enclose(Fraction(1, 3))
        self.assertLess(Fraction(down), Fraction(1, 3))
        self.assertGreater(Fraction(up), Fraction(1, 3))
        self.assertEqual(next_up(down), up)

    def test_fallback_enclosure(self):
        """Test FALLBACK steps both sides of the nearest value."""
        down, up = enclose(Fraction(1, 3), mode=RoundingMode.FALLBACK)
        self.assertEqual(next_up(next_up(down)), up)

    def test_below_smallest_subnormal(self):
        """Test 2^-1075 encloses as [0, 2^-1074]."""
        self.assertEqual(enclose(Fraction(1, 2**1075)), (0.0, TINY))

    def test_fallback_stays_nonnegative(self):
        down, _ = enclose(Fraction(1, 2**1075), mode=RoundingMode.FALLBACK)
        self.assertEqual(down, 0.0)

    def test_binary32(self):
        """Test binary32 enclosure of 1/10."""
        down, up = enclose(Fraction(1, 10), Precision.BINARY32)
        self.assertEqual(float(np.float32(down)), down)
        self.assertEqual(next_up(down, Precision.BINARY32), up)
        self.assertLess(Fraction(down), Fraction(1, 10))
        self.assertGreater(Fraction(up), Fraction(1, 10))


class TestArrayOperations(unittest.TestCase):
    """Test error-free-transformation array operations."""

    def setUp(self):
        rng = np.random.default_rng(7)
        self.a = rng.uniform(1e-3, 1.0, 400)
        self.b = rng.uniform(1e-3, 1.0, 400)

    def assert_matches_scalar(self, vector, op, direction):
        scalar = SCALAR_OPERATIONS[(op, direction)]
        expected = [scalar(float(x), float(y)).value for x, y in zip(self.a, self.b)]
        self.assertEqual(list(vector(self.a, self.b, direction)), expected)

    def test_strong_add_matches_scalar(self):
        for direction in Direction:
            self.assert_matches_scalar(vadd, "add", direction)

    def test_strong_sub_matches_scalar(self):
        for direction in Direction:
            self.assert_matches_scalar(vsub, "sub", direction)

    def test_strong_mul_matches_scalar(self):
        for direction in Direction:
            self.assert_matches_scalar(vmul, "mul", direction)

    def test_strong_div_matches_scalar(self):
        for direction in Direction:
            self.assert_matches_scalar(vdiv, "div", direction)

    def test_fallback_contains_exact(self):
        """Test FALLBACK array results still bound the exact values."""
        up = vmul(self.a, self.b, Direction.UP, RoundingMode.FALLBACK)
        down = vmul(self.a, self.b, Direction.DOWN, RoundingMode.FALLBACK)
        for x, y, hi, lo in zip(self.a, self.b, up, down):
            exact = Fraction(float(x)) * Fraction(float(y))
            self.assertLessEqual(Fraction(float(lo)), exact)
            self.assertGreaterEqual(Fraction(float(hi)), exact)

    def test_underflowing_product(self):
        """Test products below the subnormal range round to [0, 2^-1074]."""
        a = np.array([2.0**-600])
        self.assertEqual(vmul(a, a, Direction.DOWN)[0], 0.0)
        self.assertEqual(vmul(a, a, Direction.UP)[0], TINY)

    def test_zero_operands(self):
        a = np.array([0.0, 0.5])
        b = np.array([0.3, 0.0])
        self.assertEqual(list(vmul(a, b, Direction.UP)), [0.0, 0.0])
        self.assertEqual(list(vmul(a, b, Direction.DOWN)), [0.0, 0.0])

    def test_nonnegative_path_matches_general(self):
        """Test the probability-mass path gives the general results bit for bit."""
        rng = np.random.default_rng(11)
        a = rng.uniform(0.0, 1.0, 2000) * 2.0 ** rng.integers(-1074, 1, 2000)
        b = rng.uniform(0.0, 1.0, 2000) * 2.0 ** rng.integers(-600, 1, 2000)
        a[::97] = 0.0
        b[::89] = 0.0
        a[5], b[5] = 2.0**-600, 2.0**-600
        a[6], b[6] = TINY, 0.5
        for mode in RoundingMode:
            for direction in Direction:
                with self.subTest(mode=mode, direction=direction):
                    fast = vmul(a, b, direction, mode, nonnegative=True)
                    self.assertEqual(fast.tobytes(), vmul(a, b, direction, mode).tobytes())
                    fast = vadd(a, b, direction, mode, nonnegative=True)
                    self.assertEqual(fast.tobytes(), vadd(a, b, direction, mode).tobytes())

    def test_nonnegative_path_large_operands(self):
        a = np.array([2.0**1000, 0.5])
        b = np.array([2.0**20, 0.25])
        fast = vmul(a, b, Direction.UP, nonnegative=True)
        self.assertEqual(fast.tobytes(), vmul(a, b, Direction.UP).tobytes())

    def test_array_division_by_zero(self):
        with self.assertRaises(DomainError):
            vdiv(np.array([1.0]), np.array([0.0]), Direction.UP)

    def test_binary32_dtype(self):
        """Test binary32 sessions compute in float32."""
        with rounding_session(precision=Precision.BINARY32):
            out = vadd(np.float32([0.1]), np.float32([0.2]), Direction.UP)
            self.assertEqual(out.dtype, np.float32)
            exact = Fraction(float(np.float32(0.1))) + Fraction(float(np.float32(0.2)))
            self.assertGreaterEqual(Fraction(float(out[0])), exact)


class TestRoundingSession(unittest.TestCase):
    """Test scoped rounding mode and precision."""

    def test_defaults(self):
        self.assertEqual(active_mode(), RoundingMode.STRONG)
        self.assertEqual(active_precision(), Precision.BINARY64)

    def test_nesting_restores(self):
        with rounding_session(RoundingMode.FALLBACK, Precision.BINARY32):
            with rounding_session(precision=Precision.BINARY64):
                self.assertEqual(active_mode(), RoundingMode.FALLBACK)
                self.assertEqual(active_precision(), Precision.BINARY64)
            self.assertEqual(active_precision(), Precision.BINARY32)
        self.assertEqual(active_mode(), RoundingMode.STRONG)

    def test_threads_start_from_defaults(self):
        """Test a session does not leak into another thread."""
        seen = []
        with rounding_session(RoundingMode.FALLBACK):
            worker = threading.Thread(target=lambda: seen.append(active_mode()))
            worker.start()
            worker.join()
        self.assertEqual(seen, [RoundingMode.STRONG])


class TestHexFormat(unittest.TestCase):
    """Test bit-exact hex-float text."""

    def test_published_bound_value(self):
        """Test a published upper bound parses to its exact decimal."""
        value = parse_hex("1.fef956911fe58·2^-1")
        self.assertEqual(
            Fraction(value),
            Fraction("0.99799604913273309847454584087245166301727294921875"),
        )

    def test_ascii_separator(self):
        self.assertEqual(
            parse_hex("1.fef95690c7eda*2^-1"), parse_hex("1.fef95690c7eda·2^-1")
        )

    def test_format(self):
        self.assertEqual(format_hex(0.75), "1.8000000000000·2^-1")
        self.assertEqual(format_hex(0.0), "0")
        self.assertEqual(format_hex(1.0), "1")
        self.assertEqual(format_hex(TINY), "0.0000000000001·2^-1022")
        self.assertEqual(format_hex(0.75, separator="*"), "1.8000000000000*2^-1")

    def test_round_trip(self):
        for text in ("1.1c5df1e171043·2^-178", "1.ffffffffd392a·2^-1", "1.0f0230ce40e15·2^-4"):
            with self.subTest(text=text):
                self.assertEqual(format_hex(parse_hex(text)), text)

    def test_binary32(self):
        text = "1.bcc5a4·2^-67"
        value = parse_hex(text, Precision.BINARY32)
        self.assertEqual(format_hex(value, Precision.BINARY32), text)
        subnormal = parse_hex("1.974c00*2^-135", Precision.BINARY32)
        self.assertEqual(Fraction(subnormal), Fraction(0x1974C00, 16**6) * Fraction(2) ** -135)
        self.assertEqual(format_hex(0.5, Precision.BINARY32), "1.000000·2^-1")

    def test_parse_errors_name_the_token(self):
        cases = {
            "1.fef9·2^-1": "fef9",
            "2.fef956911fe58·2^-1": "2.fef956911fe58",
            "1.fef956911fe58·3^-1": "3^",
            "1.fef956911fe58·2^x": "x",
        }
        for text, token in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(HexParseError) as caught:
                    parse_hex(text)
                self.assertEqual(caught.exception.token, token)

    def test_negative_rejected(self):
        with self.assertRaises(DomainError):
            format_hex(-0.5)


class TestHelpers(unittest.TestCase):
    def test_ulp(self):
        self.assertEqual(ulp(1.0), 2.0**-52)
        self.assertEqual(next_up(1.0, Precision.BINARY32), 1.0 + 2.0**-23)
        self.assertEqual(next_down(0.0), 0.0 - TINY)


if __name__ == "__main__":
    unittest.main()

"""
Test Suite for Interval Module
Tests probability intervals, their arithmetic and JSON form.
"""

import unittest
from fractions import Fraction

from errors import DomainError
from fpround import Precision, RoundingMode, next_up, rounding_session
from interval import (
    ONE,
    ZERO,
    IntervalProb,
    iv_add,
    iv_clamp_unit,
    iv_complement,
    iv_div,
    iv_mul,
    iv_sub,
    iv_sum,
)


class TestIntervalProb(unittest.TestCase):
    """Test construction and queries."""

    def test_invalid_intervals(self):
        with self.assertRaises(DomainError):
            IntervalProb(0.5, 0.25)
        with self.assertRaises(DomainError):
            IntervalProb(-0.1, 0.25)
        with self.assertRaises(DomainError):
            IntervalProb(float("nan"), 0.25)

    def test_from_exact(self):
        third = IntervalProb.from_exact(Fraction(1, 3))
        self.assertTrue(third.contains(Fraction(1, 3)))
        self.assertLess(third.lo, third.hi)
        quarter = IntervalProb.from_exact(Fraction(1, 4))
        self.assertEqual(quarter.lo, quarter.hi)

    def test_intersects(self):
        a = IntervalProb(0.1, 0.3)
        self.assertTrue(a.intersects(IntervalProb(0.3, 0.4)))
        self.assertFalse(a.intersects(IntervalProb(0.31, 0.4)))

    def test_json(self):
        """Test hex fields are authoritative and round-trip."""
        value = IntervalProb(0.75, 1.0)
        data = value.to_json()
        self.assertEqual(data["lo_hex"], "1.8000000000000·2^-1")
        self.assertEqual(data["hi_hex"], "1")
        self.assertEqual(data["lo_dec"], "0.75")
        self.assertEqual(IntervalProb.from_json(data), value)

    def test_json_binary32(self):
        with rounding_session(precision=Precision.BINARY32):
            data = IntervalProb(0.5, 0.75).to_json()
        self.assertEqual(data["lo_hex"], "1.000000·2^-1")
        self.assertEqual(data["hi_hex"], "1.800000·2^-1")


class TestIntervalArithmetic(unittest.TestCase):
    """Test outward-rounded interval operations."""

    def setUp(self):
        self.third = IntervalProb.from_exact(Fraction(1, 3))
        self.tenth = IntervalProb.from_exact(Fraction(1, 10))

    def test_add_contains_sum(self):
        self.assertTrue(iv_add(self.third, self.tenth).contains(Fraction(13, 30)))

    def test_mul_contains_product(self):
        self.assertTrue(iv_mul(self.third, self.tenth).contains(Fraction(1, 30)))

    def test_div_contains_quotient(self):
        self.assertTrue(iv_div(self.tenth, self.third).contains(Fraction(3, 10)))

    def test_div_rejects_zero_divisor(self):
        with self.assertRaises(DomainError):
            iv_div(self.tenth, IntervalProb(0.0, 0.5))

    def test_sub_lifts_negative_lower_bound(self):
        """Test a difference whose exact value is 0 stays nonnegative."""
        difference = iv_sub(self.third, self.third)
        self.assertEqual(difference.lo, 0.0)
        self.assertGreater(difference.hi, 0.0)

    def test_sub_certainly_negative(self):
        with self.assertRaises(DomainError):
            iv_sub(self.tenth, self.third)

    def test_complement(self):
        self.assertEqual(iv_complement(ONE), ZERO)
        self.assertEqual(iv_complement(ZERO), ONE)
        self.assertTrue(iv_complement(self.third).contains(Fraction(2, 3)))

    def test_complement_loses_small_values(self):
        """Test 1 - [1 - 2^-53, 1] cannot resolve values below 2^-53."""
        near_one = IntervalProb(1.0 - 2.0**-53, 1.0)
        complement = iv_complement(near_one)
        self.assertEqual(complement, IntervalProb(0.0, 2.0**-53))

    def test_clamp(self):
        self.assertEqual(iv_clamp_unit(IntervalProb(0.5, next_up(1.0))), IntervalProb(0.5, 1.0))
        with self.assertRaises(DomainError):
            iv_clamp_unit(IntervalProb(next_up(1.0), 2.0))

    def test_sum_order(self):
        parts = [self.third, self.third, self.third]
        total = iv_sum(parts)
        self.assertTrue(total.contains(1))

    def test_fallback_is_wider(self):
        strong = iv_mul(self.third, self.tenth)
        with rounding_session(RoundingMode.FALLBACK):
            fallback = iv_mul(self.third, self.tenth)
        self.assertLessEqual(fallback.lo, strong.lo)
        self.assertGreaterEqual(fallback.hi, strong.hi)


if __name__ == "__main__":
    unittest.main()

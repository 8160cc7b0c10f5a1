"""
Test Suite for Metrics Module
Tests error measures, optimal approximators and the report display forms.
"""

import math
import random
import re
import unittest
from fractions import Fraction

from errors import DomainError
from fpround import Precision, enclose
from metrics import (
    display_bound_3sig,
    e_abs_interval,
    e_abs_point,
    e_rel_interval,
    e_rel_interval_at,
    e_rel_interval_detail,
    e_rel_point,
    error_report,
    format_T,
    max_accuracy,
    max_accuracy_complement,
    t_image,
)
from reference_bounds import (
    HYPERGEOMETRIC_CDF,
    MULTINOMIAL_CDF,
    MULTINOMIAL_TAIL,
    TABLES,
    expected_t_form,
)


def known_digits(form: str) -> int:
    """Number of decimals a T form states."""
    body = form.lstrip(".").rstrip("?")
    match = re.fullmatch(r"([09])\^(?:\{(\d+)\}|(\d))(.*)", body)
    if match:
        return int(match.group(2) or match.group(3)) + len(match.group(4))
    return len(body)


class TestPointErrors(unittest.TestCase):
    """Test errors of a single approximation."""

    def test_absolute(self):
        self.assertEqual(e_abs_point(0.25, 0.5), 0.25)
        self.assertEqual(e_abs_point(Fraction(1, 3), Fraction(1, 3)), 0.0)

    def test_relative(self):
        self.assertEqual(e_rel_point(0.75, 0.5), 1.0)
        self.assertEqual(e_rel_point(Fraction(1, 3), 0.5), 0.5)
        self.assertEqual(e_rel_point(0, 0), 0.0)
        self.assertEqual(e_rel_point(0, 0.1), math.inf)
        self.assertEqual(e_rel_point(1, 0.9), math.inf)

    def test_domain(self):
        with self.assertRaises(DomainError):
            e_abs_point(1.5, 0.5)
        with self.assertRaises(DomainError):
            e_rel_point(0.5, -0.1)


class TestIntervalErrors(unittest.TestCase):
    """Test minimax errors of intervals and their approximators."""

    def setUp(self):
        self.lo = Fraction("0.02")
        self.hi = Fraction("0.03")

    def test_absolute(self):
        self.assertEqual(e_abs_interval(self.lo, self.hi), (0.005, 0.025))

    def test_relative_low_half(self):
        self.assertEqual(e_rel_interval(self.lo, self.hi), (0.2, 0.024))

    def test_relative_high_half(self):
        self.assertEqual(e_rel_interval(Fraction("0.97"), Fraction("0.98")), (0.2, 0.976))

    def test_point_interval(self):
        self.assertEqual(e_rel_interval(0.25, 0.25), (0.0, 0.25))

    def test_straddling_half(self):
        optimum = e_rel_interval_detail(Fraction(2, 5), Fraction(3, 5))
        self.assertTrue(optimum.numeric)
        self.assertEqual(optimum.approximator, 0.5)
        self.assertEqual(optimum.value, 0.25)

    def test_error_at_given_approximation(self):
        self.assertEqual(e_rel_interval_at(self.lo, self.hi, Fraction("0.025")), 0.25)
        with self.assertRaises(DomainError):
            e_rel_interval_at(self.lo, self.hi, 0.5)

    def test_empty_interval(self):
        with self.assertRaises(DomainError) as caught:
            e_abs_interval(0.5, 0.25)
        self.assertEqual(caught.exception.invariant, "a <= b")

    def test_endpoints_dominate(self):
        """Test no grid point of [a, b] has a larger error than the endpoints."""
        rng = random.Random(7)
        for _ in range(200):
            a, b = sorted(Fraction(rng.randint(1, 9999), 10000) for _ in range(2))
            guess = a + (b - a) * Fraction(rng.randint(0, 100), 100)
            bound = e_rel_interval_at(a, b, guess)
            for step in range(21):
                p = a + (b - a) * Fraction(step, 20)
                self.assertLessEqual(e_rel_point(p, guess), bound)

    def test_best_approximator_is_optimal(self):
        rng = random.Random(11)
        for _ in range(100):
            a, b = sorted(Fraction(rng.randint(1, 9999), 10000) for _ in range(2))
            if a == b:
                continue
            value, best = e_rel_interval(a, b)
            at_best = e_rel_interval_at(a, b, best)
            for step in range(11):
                guess = a + (b - a) * Fraction(step, 10)
                self.assertLessEqual(at_best, e_rel_interval_at(a, b, guess) * (1 + 1e-12))
            self.assertLessEqual(abs(at_best - value), value * 1e-12)


class TestMaxAccuracy(unittest.TestCase):
    """Test the best accuracy representable numbers allow."""

    def test_representable(self):
        self.assertEqual(max_accuracy(0.5), 0.0)
        self.assertEqual(max_accuracy(Fraction(1, 2**60)), 0.0)

    def test_not_representable(self):
        accuracy = max_accuracy(Fraction(1, 3))
        self.assertGreater(accuracy, 0.0)
        self.assertLessEqual(accuracy, 2.0**-52)
        self.assertGreater(max_accuracy(Fraction(1, 3), Precision.BINARY32), accuracy)

    def test_enclosure_touching_bounds(self):
        self.assertEqual(max_accuracy(Fraction(1, 2**1075)), math.inf)
        self.assertEqual(max_accuracy(1 - Fraction(1, 2**54)), math.inf)

    def test_random_representable(self):
        rng = random.Random(17)
        for _ in range(1000):
            if rng.random() < 0.1:
                p = rng.randint(1, 2**52 - 1) * 2.0**-1074
            else:
                p = math.ldexp(rng.getrandbits(52) | 1 << 52, rng.randint(-1074, -53))
            self.assertEqual(max_accuracy(p), 0.0)

    def test_random_rationals(self):
        """Test non-representable normal probabilities up to 1/2."""
        _, bound = enclose(Fraction(1, 2**53 + 1))
        rng = random.Random(19)
        for _ in range(1000):
            p = Fraction(rng.randint(1, 10**6), rng.randint(2 * 10**6, 10**7)) / 2 ** rng.randint(0, 990)
            self.assertGreaterEqual(p, Fraction(1, 2**1022))
            self.assertLessEqual(max_accuracy(p), bound)

    def test_complement(self):
        """Test 2^-60 is exact but its complement is not resolvable."""
        self.assertEqual(max_accuracy_complement(Fraction(1, 2**60)), math.inf)
        self.assertEqual(max_accuracy_complement(0.25), 0.0)


class TestDisplayBound(unittest.TestCase):
    """Test three significant digit upper bounds."""

    def test_examples(self):
        self.assertEqual(display_bound_3sig(Fraction(201, 10**13)), "2.01e-11")
        self.assertEqual(display_bound_3sig(Fraction(1, 200)), "5.00e-3")
        self.assertEqual(display_bound_3sig(Fraction(2001, 10**14)), "2.01e-11")
        self.assertEqual(display_bound_3sig(Fraction(9995, 10**6)), "1.00e-2")
        self.assertEqual(display_bound_3sig(123), "1.23e2")
        self.assertEqual(display_bound_3sig(0), "0")
        self.assertEqual(display_bound_3sig(math.inf), "inf")

    def test_binary64_argument(self):
        """Test the double nearest 0.005 lies above 5/1000 and rounds up."""
        self.assertGreater(Fraction(0.005), Fraction(5, 1000))
        self.assertEqual(display_bound_3sig(0.005), "5.01e-3")
        self.assertEqual(display_bound_3sig(Fraction(5, 1000)), "5.00e-3")

    def test_negative(self):
        with self.assertRaises(DomainError):
            display_bound_3sig(-1e-3)

    def test_bound_is_tight(self):
        rng = random.Random(3)
        for _ in range(300):
            x = Fraction(rng.randint(1, 10**9), 10 ** rng.randint(1, 30))
            text = display_bound_3sig(x)
            mantissa, exponent = text.split("e")
            shown = Fraction(mantissa) * Fraction(10) ** int(exponent)
            self.assertGreaterEqual(shown, x)
            lower = (Fraction(mantissa) - Fraction(1, 100)) * Fraction(10) ** int(exponent)
            self.assertLess(lower, x)


class TestTForm(unittest.TestCase):
    """Test the known digits of the nearest T value."""

    def test_degenerate(self):
        self.assertEqual(format_T(0, 0), "0")
        self.assertEqual(format_T(1, 1), "1")
        self.assertEqual(format_T(0, 1), ".?")

    def test_single_values(self):
        self.assertEqual(t_image(Fraction(1, 3)), ".3333333")
        self.assertEqual(t_image(0.5), ".5000000")
        self.assertEqual(t_image(Fraction(1, 1000)), ".0010000")
        self.assertEqual(t_image(Fraction(1, 10**6)), ".0^510000")

    def test_unresolved_digits(self):
        self.assertEqual(format_T(0, Fraction(1, 10**20)), ".0^{19}?")

    def test_shared_digits_only(self):
        """Test the printed digits are a prefix of both endpoint images."""
        self.assertEqual(format_T(Fraction(63, 10**11), Fraction(67, 10**11)), ".0^96?")
        self.assertEqual(format_T(Fraction(99999917562, 10**11), Fraction(99999917567, 10**11)), ".9^61756?")
        self.assertEqual(format_T(Fraction(3, 10), Fraction(1)), ".?")
        row = HYPERGEOMETRIC_CDF[19].interval()
        self.assertEqual(format_T(row.lo, row.hi), ".9^78?")
        row = MULTINOMIAL_TAIL[25].interval()
        self.assertEqual(format_T(row.lo, row.hi), ".0^96?")

    def test_reference_rows(self):
        for name, table in TABLES.items():
            for t, row in table.items():
                with self.subTest(table=name, t=t):
                    interval = row.interval()
                    self.assertEqual(format_T(interval.lo, interval.hi), expected_t_form(name, row))

    def test_widening_never_adds_digits(self):
        for t in (8, 9, 16, 21):
            interval = MULTINOMIAL_CDF[t].interval()
            lo, hi = Fraction(interval.lo), Fraction(interval.hi)
            middle = (lo + hi) / 2
            previous = None
            for scale in range(0, 46, 3):
                a = max(Fraction(0), middle - (middle - lo) * 2**scale)
                b = min(Fraction(1), middle + (hi - middle) * 2**scale)
                digits = known_digits(format_T(a, b))
                if previous is not None:
                    self.assertLessEqual(digits, previous)
                previous = digits


class TestErrorReport(unittest.TestCase):
    """Test the bundled accuracy summary."""

    def test_small_interval(self):
        report = error_report(0.02, 0.03)
        self.assertEqual(report.e_abs_display, "5.00e-3")
        self.assertEqual(report.e_rel_display, "2.00e-1")
        self.assertAlmostEqual(report.best_abs_approximator, 0.025)
        self.assertAlmostEqual(report.best_rel_approximator, 0.024)
        self.assertFalse(report.numeric)

    def test_zero_interval(self):
        report = error_report(0, 0)
        self.assertEqual((report.e_abs_display, report.e_rel_display, report.approx), ("0", "0", "0"))

    def test_touching_one(self):
        report = error_report(1 - 2.0**-53, 1)
        self.assertEqual(report.e_rel_opt, math.inf)
        self.assertEqual(report.e_rel_display, "inf")
        self.assertEqual(report.to_json()["e_rel"], "inf")

    def test_published_displays(self):
        """Test error displays of the published multinomial bounds."""
        for table, skipped in ((MULTINOMIAL_CDF, ()), (MULTINOMIAL_TAIL, (8, 24))):
            for t, row in table.items():
                if t in skipped:
                    continue
                with self.subTest(t=t):
                    interval = row.interval()
                    report = error_report(interval.lo, interval.hi)
                    self.assertEqual(report.e_rel_display, row.e_rel)
                    if row.e_abs != "1-lo":
                        self.assertEqual(report.e_abs_display, row.e_abs)


if __name__ == "__main__":
    unittest.main()

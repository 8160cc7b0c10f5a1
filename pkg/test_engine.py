"""
Test Suite for Engine Module
Tests the forward recursion on small hand-checkable Markov models.
"""

import unittest
from fractions import Fraction
from itertools import product

import numpy as np

from engine import (
    DPLayer,
    Grouping,
    TransitionModel,
    as_constraint,
    dp_init,
    dp_step,
    rectangle_probability,
)
from errors import DomainError
from fpround import RoundingMode, rounding_session
from interval import ZERO, IntervalProb


class CoinModel(TransitionModel):
    """Partial sums of d independent 0/1 increments with P(1) = p."""

    def __init__(self, d: int, p: Fraction = Fraction(1, 2), blocked=()):
        self.d = d
        self.p = p
        self.blocked = set(blocked)

    @property
    def length(self) -> int:
        return self.d

    def _increment(self, a: int) -> IntervalProb:
        if a == 1:
            return IntervalProb.from_exact(self.p)
        if a == 0:
            return IntervalProb.from_exact(1 - self.p)
        return ZERO

    def initial(self, x: int) -> IntervalProb:
        return self._increment(x)

    def initial_states(self, constraint):
        return [x for x in (0, 1) if x in constraint]

    def step(self, k, y, x):
        if x in self.blocked:
            return ZERO
        return self._increment(x - y)

    def successors(self, k, y, constraint):
        return [(y + a, a) for a in constraint if a in (0, 1)]


def exact_rectangle(d: int, p: Fraction, constraints) -> Fraction:
    total = Fraction(0)
    for increments in product((0, 1), repeat=d):
        if all(a in allowed for a, allowed in zip(increments, constraints)):
            ones = sum(increments)
            total += p**ones * (1 - p) ** (d - ones)
    return total


class TestGrouping(unittest.TestCase):
    """Test how contributions are split into accumulation rounds."""

    def test_build(self):
        grouping = Grouping.build(np.array([0, 1, 1, 2]))
        self.assertEqual(list(grouping.keys), [0, 1, 2])
        self.assertEqual(list(grouping.order), [0, 1, 3, 2])
        self.assertEqual(list(grouping.group_of), [0, 1, 2, 1])
        self.assertEqual(list(grouping.bounds), [0, 3, 4])

    def test_empty(self):
        grouping = Grouping.build(np.zeros(0, dtype=np.int64))
        self.assertEqual(len(grouping.keys), 0)
        self.assertEqual(list(grouping.bounds), [0])


class TestLayers(unittest.TestCase):
    """Test DP layers and single steps."""

    def setUp(self):
        self.model = CoinModel(3)

    def test_as_constraint(self):
        self.assertEqual(as_constraint([3, 1, 1, 2]), (1, 2, 3))

    def test_initial_layer(self):
        layer = dp_init(self.model, {0, 1})
        self.assertEqual(list(layer.keys), [0, 1])
        self.assertEqual(layer[1], IntervalProb(0.5, 0.5))
        self.assertEqual(layer[7], ZERO)
        self.assertEqual(layer.total(), IntervalProb(1.0, 1.0))

    def test_expansion_order(self):
        """Test contributions come by ascending predecessor, then increment."""
        layer = dp_init(self.model, {0, 1})
        expansion = self.model.expand(2, layer.keys, (0, 1))
        self.assertEqual(list(expansion.pred_index), [0, 0, 1, 1])
        self.assertEqual(list(expansion.succ_keys), [0, 1, 1, 2])

    def test_step(self):
        layer = dp_step(self.model, dp_init(self.model, {0, 1}), {0, 1})
        self.assertEqual(layer.step, 2)
        self.assertEqual(dict((k, v.hi) for k, v in layer.items()), {0: 0.25, 1: 0.5, 2: 0.25})

    def test_zero_states_are_pruned(self):
        model = CoinModel(3, blocked={2})
        layer = dp_step(model, dp_init(model, {0, 1}), {0, 1})
        self.assertEqual(list(layer.keys), [0, 1])

    def test_empty_layer(self):
        empty = DPLayer.empty(1)
        self.assertEqual(len(dp_step(self.model, empty, {0})), 0)
        self.assertEqual(empty.total(), ZERO)


class TestRectangleProbability(unittest.TestCase):
    """Test complete recursions against enumeration."""

    def test_exact_cases(self):
        model = CoinModel(4)
        self.assertEqual(rectangle_probability(model, [{0, 1}] * 4), IntervalProb(1.0, 1.0))
        self.assertEqual(rectangle_probability(model, [{0}] * 4), IntervalProb(1 / 16, 1 / 16))
        self.assertEqual(
            rectangle_probability(CoinModel(3), [{1}, {0, 1}, {0}]), IntervalProb(0.25, 0.25)
        )

    def test_contains_enumeration(self):
        p = Fraction(1, 3)
        model = CoinModel(5, p)
        for constraints in (
            [{0, 1}] * 5,
            [{1}, {0}, {0, 1}, {1}, {0, 1}],
            [{0}, {0}, {0}, {0}, {1}],
        ):
            for mode in RoundingMode:
                with self.subTest(constraints=constraints, mode=mode):
                    with rounding_session(mode):
                        result = rectangle_probability(model, constraints)
                    self.assertTrue(result.contains(exact_rectangle(5, p, constraints)))
                    self.assertLessEqual(result.hi, 1.0)

    def test_unreachable_first_set(self):
        self.assertEqual(rectangle_probability(CoinModel(2), [{5}, {0, 1}]), ZERO)
        self.assertEqual(rectangle_probability(CoinModel(2), [{0}, {3}]), ZERO)

    def test_constraint_count(self):
        with self.assertRaises(DomainError) as caught:
            rectangle_probability(CoinModel(3), [{0, 1}] * 2)
        self.assertEqual(caught.exception.invariant, "len(A) == d")


if __name__ == "__main__":
    unittest.main()

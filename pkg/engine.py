"""
Engine Module
Forward dynamic programming over a discrete Markov model: computes the
rectangle probability P(Y_1 in A_1, ..., Y_d in A_d) as a certified interval.

Layers hold p(k, x) = P(X_k = x, Y_1 in A_1, ..., Y_k in A_k) for every
reachable state x. Contributions to a successor are accumulated in the
order (ascending predecessor, ascending increment); directed addition is not
associative, so this order is part of the result.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import DomainError
from fpround import Direction, active_precision, vadd, vmul
from interval import ZERO, IntervalProb, iv_add, iv_clamp_unit

logger = logging.getLogger(__name__)

Constraint = Tuple[int, ...]


def as_constraint(values: Iterable[int]) -> Constraint:
    """Normalize a finite integer set to a sorted tuple."""
    return tuple(sorted({int(v) for v in values}))


@dataclass
class Grouping:
    """
    How contributions map onto successor states.

    ``order`` permutes contributions so that round r holds the r-th
    contribution of every successor; ``group_of`` names the successor of
    each permuted contribution.
    """

    keys: np.ndarray
    order: np.ndarray
    group_of: np.ndarray
    bounds: np.ndarray

    @classmethod
    def build(cls, succ_keys: np.ndarray) -> "Grouping":
        by_key = np.argsort(succ_keys, kind="stable")
        sorted_keys = succ_keys[by_key]
        keys, starts, counts = np.unique(
            sorted_keys, return_index=True, return_counts=True
        )
        group = np.repeat(np.arange(len(keys)), counts)
        rank = np.arange(len(sorted_keys)) - np.repeat(starts, counts)
        by_rank = np.argsort(rank, kind="stable")
        rounds = int(rank.max()) + 1 if len(rank) else 0
        bounds = np.searchsorted(rank[by_rank], np.arange(rounds + 1))
        return cls(
            keys=keys,
            order=by_key[by_rank],
            group_of=group[by_rank],
            bounds=bounds,
        )


@dataclass
class Expansion:
    """Every (predecessor, successor, kernel) triple of one DP step."""

    pred_index: np.ndarray
    succ_keys: np.ndarray
    kernel_lo: np.ndarray
    kernel_hi: np.ndarray
    grouping: Optional[Grouping] = None

    def __len__(self) -> int:
        return len(self.pred_index)


@dataclass(frozen=True)
class DPLayer:
    """p(k, x) for the reachable states x, keys strictly ascending."""

    step: int
    keys: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __len__(self) -> int:
        return len(self.keys)

    def __getitem__(self, state: int) -> IntervalProb:
        index = int(np.searchsorted(self.keys, state))
        if index < len(self.keys) and self.keys[index] == state:
            return IntervalProb(float(self.lo[index]), float(self.hi[index]))
        return ZERO

    def items(self) -> Iterator[Tuple[int, IntervalProb]]:
        for key, lo, hi in zip(self.keys, self.lo, self.hi):
            yield int(key), IntervalProb(float(lo), float(hi))

    def total(self) -> IntervalProb:
        """Sum over states in ascending state order."""
        total = ZERO
        for _, value in self.items():
            total = iv_add(total, value)
        return total

    @classmethod
    def empty(cls, step: int) -> "DPLayer":
        dtype = active_precision().dtype
        return cls(
            step,
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=dtype),
            np.zeros(0, dtype=dtype),
        )


class TransitionModel(ABC):
    """
    A Markov chain (X_1..X_d) with increments Y_k and kernels
    P(X_k = to | X_{k-1} = from), over integer-keyed states.

    Subclasses implement the scalar interface; initial_layer and expand
    derive the vectorized form from it and may be overridden for speed.
    Steps are numbered 1..length; step 1 is the initial distribution.
    """

    @property
    @abstractmethod
    def length(self) -> int:
        pass

    @abstractmethod
    def initial(self, x: int) -> IntervalProb:
        """Enclosure of P(X_1 = x)."""
        pass

    @abstractmethod
    def initial_states(self, constraint: Constraint) -> List[int]:
        """States x with Y_1 in A_1, ascending."""
        pass

    @abstractmethod
    def step(self, k: int, y: int, x: int) -> IntervalProb:
        """Enclosure of P(X_k = x | X_{k-1} = y)."""
        pass

    @abstractmethod
    def successors(self, k: int, y: int, constraint: Constraint) -> List[Tuple[int, int]]:
        """(to-state, increment) pairs with increment in A_k, ascending."""
        pass

    def initial_layer(self, constraint: Constraint):
        states = self.initial_states(constraint)
        values = [self.initial(x) for x in states]
        dtype = active_precision().dtype
        return (
            np.array(states, dtype=np.int64),
            np.array([v.lo for v in values], dtype=dtype),
            np.array([v.hi for v in values], dtype=dtype),
        )

    def expand(self, k: int, keys: np.ndarray, constraint: Constraint) -> Expansion:
        pred, succ, kernel_lo, kernel_hi = [], [], [], []
        for index, y in enumerate(keys):
            y = int(y)
            for to, _ in self.successors(k, y, constraint):
                value = self.step(k, y, to)
                pred.append(index)
                succ.append(to)
                kernel_lo.append(value.lo)
                kernel_hi.append(value.hi)
        dtype = active_precision().dtype
        return Expansion(
            pred_index=np.array(pred, dtype=np.int64),
            succ_keys=np.array(succ, dtype=np.int64),
            kernel_lo=np.array(kernel_lo, dtype=dtype),
            kernel_hi=np.array(kernel_hi, dtype=dtype),
        )


def _pruned(step: int, keys, lo, hi) -> DPLayer:
    keep = hi > 0
    return DPLayer(step, keys[keep], lo[keep], hi[keep])


def dp_init(model: TransitionModel, constraint: Iterable[int]) -> DPLayer:
    """Layer 1: p(1, x) = P(X_1 = x) for the states admitted by A_1."""
    keys, lo, hi = model.initial_layer(as_constraint(constraint))
    if len(keys) == 0:
        return DPLayer.empty(1)
    order = np.argsort(keys, kind="stable")
    return _pruned(1, keys[order], lo[order], hi[order])


def dp_step(model: TransitionModel, layer: DPLayer, constraint: Iterable[int]) -> DPLayer:
    """
    Layer k from layer k-1:
    p(k, x) = sum over admissible y of P(X_k = x | X_{k-1} = y) p(k-1, y).

    Args:
        model: Transition model
        layer: Layer k-1
        constraint: A_k

    Returns:
        Layer k with [0, 0] states pruned
    """
    k = layer.step + 1
    if len(layer) == 0:
        return DPLayer.empty(k)
    expansion = model.expand(k, layer.keys, as_constraint(constraint))
    if len(expansion) == 0:
        return DPLayer.empty(k)

    grouping = expansion.grouping or Grouping.build(expansion.succ_keys)
    contrib_lo = vmul(
        layer.lo[expansion.pred_index], expansion.kernel_lo, Direction.DOWN, nonnegative=True
    )
    contrib_hi = vmul(
        layer.hi[expansion.pred_index], expansion.kernel_hi, Direction.UP, nonnegative=True
    )
    contrib_lo = contrib_lo[grouping.order]
    contrib_hi = contrib_hi[grouping.order]

    dtype = contrib_lo.dtype
    acc_lo = np.zeros(len(grouping.keys), dtype=dtype)
    acc_hi = np.zeros(len(grouping.keys), dtype=dtype)
    # every successor has a first contribution; adding it to 0 is exact
    first = grouping.bounds[1]
    acc_lo[grouping.group_of[:first]] = contrib_lo[:first]
    acc_hi[grouping.group_of[:first]] = contrib_hi[:first]
    for start, end in zip(grouping.bounds[1:-1], grouping.bounds[2:]):
        groups = grouping.group_of[start:end]
        acc_lo[groups] = vadd(
            acc_lo[groups], contrib_lo[start:end], Direction.DOWN, nonnegative=True
        )
        acc_hi[groups] = vadd(
            acc_hi[groups], contrib_hi[start:end], Direction.UP, nonnegative=True
        )

    result = _pruned(k, grouping.keys, acc_lo, acc_hi)
    logger.debug(
        "layer %d: %d contributions -> %d states", k, len(expansion), len(result)
    )
    return result


def rectangle_probability(
    model: TransitionModel, constraints: Sequence[Iterable[int]]
) -> IntervalProb:
    """
    Certified P(Y_1 in A_1, ..., Y_d in A_d).

    Args:
        model: Transition model of length d
        constraints: The d finite constraint sets A_1..A_d

    Returns:
        Interval clamped to [0, 1]
    """
    constraints = list(constraints)
    if model.length < 1:
        raise DomainError("model length must be >= 1", invariant="d >= 1")
    if len(constraints) != model.length:
        raise DomainError(
            f"expected {model.length} constraint sets, got {len(constraints)}",
            invariant="len(A) == d",
        )
    layer = dp_init(model, constraints[0])
    for constraint in constraints[1:]:
        if len(layer) == 0:
            return ZERO
        layer = dp_step(model, layer, constraint)
    return iv_clamp_unit(layer.total())

"""
Scan Module
Reduces rectangle scan probabilities (constraints on sliding-window sums of
the counts) to rectangle probabilities of the window chain
W_j = (S_j, ..., S_{j+l-1}), which the engine evaluates.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from engine import (
    Constraint,
    Expansion,
    Grouping,
    TransitionModel,
    rectangle_probability,
)
from errors import DomainError
from fpround import Direction, active_mode, active_precision, rounding_session, vmul
from interval import ONE, ZERO, IntervalProb, iv_complement, iv_mul
from kernels import ChainKernel, ChainSpec, kernel_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScanSpec:
    """
    A rectangle scan problem: the chain, the window length and one
    constraint set per window position (None until a threshold is chosen).
    """

    chain: ChainSpec
    ell: int
    constraints: Optional[Tuple[Constraint, ...]] = None
    tail: bool = False

    def __post_init__(self):
        if not 1 <= self.ell <= self.chain.d:
            raise DomainError(
                f"window length {self.ell} outside 1..{self.chain.d}",
                invariant="1 <= ell <= d",
            )
        if self.constraints is not None:
            if len(self.constraints) != self.windows:
                raise DomainError(
                    f"expected {self.windows} window constraints, got {len(self.constraints)}",
                    invariant="one constraint per window",
                )
            for constraint in self.constraints:
                if any(not 0 <= value <= self.chain.n for value in constraint):
                    raise DomainError(
                        f"window constraint {constraint} leaves 0..{self.chain.n}",
                        invariant="A_j within 0..n",
                    )

    @property
    def windows(self) -> int:
        return self.chain.d - self.ell + 1

    def at_threshold(self, t: int) -> "ScanSpec":
        """CDF constraints A_j = {0..t} (values above n are dropped)."""
        if t < 0:
            raise DomainError(f"threshold {t} is negative", invariant="t >= 0")
        constraint = tuple(range(min(t, self.chain.n) + 1))
        return replace(self, constraints=(constraint,) * self.windows)


# ============ WINDOW STATES ============


def encode_window(sums: Sequence[int], n: int) -> int:
    """Pack (s_1..s_l) as a base-(n+1) integer; key order is tuple order."""
    key = 0
    for value in sums:
        key = key * (n + 1) + int(value)
    return key


def decode_window(key: int, n: int, ell: int) -> Tuple[int, ...]:
    digits = []
    for _ in range(ell):
        key, digit = divmod(int(key), n + 1)
        digits.append(digit)
    return tuple(reversed(digits))


def _decode_columns(keys: np.ndarray, n: int, ell: int) -> np.ndarray:
    columns = np.empty((len(keys), ell), dtype=np.int64)
    rest = keys.astype(np.int64)
    for position in range(ell - 1, -1, -1):
        rest, columns[:, position] = np.divmod(rest, n + 1)
    return columns


@dataclass
class _Structure:
    keys: np.ndarray
    constraint: Constraint
    pred_index: np.ndarray
    succ_keys: np.ndarray
    rows: np.ndarray
    increments: np.ndarray
    grouping: Grouping


class WindowModel(TransitionModel):
    """
    Window chain of a ChainSpec as a TransitionModel over packed window
    keys. The increment of a transition into window j is the window sum
    S_{j+l-1} - S_{j-1} = w_l - v_1; the first window is admitted iff
    its sum w_l lies in A_1.
    """

    def __init__(self, chain: ChainSpec, ell: int, kernel: Optional[ChainKernel] = None):
        if not 1 <= ell <= chain.d:
            raise DomainError(
                f"window length {ell} outside 1..{chain.d}", invariant="1 <= ell <= d"
            )
        if (chain.n + 1) ** ell >= 2**62:
            raise DomainError("window keys do not fit in 64 bits")
        self.chain = chain
        self.ell = ell
        self.kernel = kernel or kernel_for(chain)
        self._radix = chain.n + 1
        self._structure: Optional[_Structure] = None

    @property
    def length(self) -> int:
        return self.chain.d - self.ell + 1

    def _chain_step(self, k: int) -> int:
        # layer k adds S_{k+l-1}, i.e. chain step k + l - 2 (0-based)
        return k + self.ell - 2

    # ---- scalar interface ----

    def initial_states(self, constraint: Constraint) -> List[int]:
        n, ell = self.chain.n, self.ell
        keys = []
        for last in constraint:
            if last > n:
                continue
            for head in itertools.combinations_with_replacement(range(last + 1), ell - 1):
                keys.append(encode_window(head + (last,), n))
        return sorted(keys)

    def initial(self, x: int) -> IntervalProb:
        sums = decode_window(x, self.chain.n, self.ell)
        mass = ONE
        previous = 0
        for step, value in enumerate(sums):
            if value < previous:
                return ZERO
            mass = iv_mul(mass, self.kernel.transition(step, previous, value))
            previous = value
        return mass

    def step(self, k: int, y: int, x: int) -> IntervalProb:
        before = decode_window(y, self.chain.n, self.ell)
        after = decode_window(x, self.chain.n, self.ell)
        if before[1:] != after[:-1] or after[-1] < before[-1]:
            return ZERO
        return self.kernel.transition(self._chain_step(k), before[-1], after[-1])

    def successors(self, k: int, y: int, constraint: Constraint) -> List[Tuple[int, int]]:
        sums = decode_window(y, self.chain.n, self.ell)
        result = []
        for increment in constraint:
            x = sums[0] + increment
            if sums[-1] <= x <= self.chain.n:
                result.append((encode_window(sums[1:] + (x,), self.chain.n), increment))
        return result

    # ---- vectorized interface ----

    def initial_layer(self, constraint: Constraint):
        keys = np.array(self.initial_states(constraint), dtype=np.int64)
        dtype = active_precision().dtype
        lo = np.ones(len(keys), dtype=dtype)
        hi = np.ones(len(keys), dtype=dtype)
        if len(keys) == 0:
            return keys, lo, hi
        columns = _decode_columns(keys, self.chain.n, self.ell)
        width = int(columns[:, -1].max())
        previous = np.zeros(len(keys), dtype=np.int64)
        for step in range(self.ell):
            table = self.kernel.table(step, width)
            increments = columns[:, step] - previous
            lo = vmul(lo, table.lo[previous, increments], Direction.DOWN)
            hi = vmul(hi, table.hi[previous, increments], Direction.UP)
            previous = columns[:, step]
        return keys, lo, hi

    def _structure_for(self, keys: np.ndarray, constraint: Constraint) -> _Structure:
        cached = self._structure
        if (
            cached is not None
            and cached.constraint == constraint
            and np.array_equal(cached.keys, keys)
        ):
            return cached
        n = self.chain.n
        columns = _decode_columns(keys, n, self.ell)
        first, last = columns[:, 0], columns[:, -1]
        window = np.array(constraint, dtype=np.int64)
        targets = first[:, None] + window[None, :]
        allowed = (targets >= last[:, None]) & (targets <= n)
        pred_index, slot = np.nonzero(allowed)
        targets = targets[pred_index, slot]
        shift = self._radix ** (self.ell - 1)
        succ_keys = (keys[pred_index] % shift) * self._radix + targets
        rows = last[pred_index]
        structure = _Structure(
            keys=keys.copy(),
            constraint=constraint,
            pred_index=pred_index,
            succ_keys=succ_keys,
            rows=rows,
            increments=targets - rows,
            grouping=Grouping.build(succ_keys),
        )
        self._structure = structure
        return structure

    def expand(self, k: int, keys: np.ndarray, constraint: Constraint) -> Expansion:
        structure = self._structure_for(keys, constraint)
        width = max(constraint) if constraint else 0
        table = self.kernel.table(self._chain_step(k), width)
        return Expansion(
            pred_index=structure.pred_index,
            succ_keys=structure.succ_keys,
            kernel_lo=table.lo[structure.rows, structure.increments],
            kernel_hi=table.hi[structure.rows, structure.increments],
            grouping=structure.grouping,
        )


class IncrementModel(TransitionModel):
    """The plain partial-sum chain; increments are the counts N_k."""

    def __init__(self, chain: ChainSpec, kernel: Optional[ChainKernel] = None):
        self.chain = chain
        self.kernel = kernel or kernel_for(chain)

    @property
    def length(self) -> int:
        return self.chain.d

    def initial_states(self, constraint: Constraint) -> List[int]:
        return [value for value in constraint if 0 <= value <= self.chain.n]

    def initial(self, x: int) -> IntervalProb:
        return self.kernel.transition(0, 0, x)

    def step(self, k: int, y: int, x: int) -> IntervalProb:
        return self.kernel.transition(k - 1, y, x)

    def successors(self, k: int, y: int, constraint: Constraint) -> List[Tuple[int, int]]:
        return [(y + a, a) for a in constraint if y + a <= self.chain.n]


def build_window_model(spec: ScanSpec, kernel: Optional[ChainKernel] = None) -> WindowModel:
    return WindowModel(spec.chain, spec.ell, kernel)


def build_increment_model(chain: ChainSpec) -> IncrementModel:
    return IncrementModel(chain)


# ============ DRIVERS ============


def scan_probability(spec: ScanSpec, kernel: Optional[ChainKernel] = None) -> IntervalProb:
    """Certified P(window sum j in A_j for every window j)."""
    if spec.constraints is None:
        raise DomainError("scan spec has no window constraints")
    if spec.windows == 1:
        # the only window holds all n draws
        return ONE if spec.chain.n in spec.constraints[0] else ZERO
    model = build_window_model(spec, kernel)
    return rectangle_probability(model, spec.constraints)


def scan_cdf(spec: ScanSpec, t: int, kernel: Optional[ChainKernel] = None) -> IntervalProb:
    """
    Certified P(max window sum <= t).

    Thresholds at or above n give the saturated probability.
    """
    started = time.perf_counter()
    result = scan_probability(spec.at_threshold(t), kernel)
    logger.debug(
        "scan_cdf t=%d width=%.3g done in %.2fs",
        t,
        result.width,
        time.perf_counter() - started,
    )
    return result


def scan_tail(spec: ScanSpec, t: int, kernel: Optional[ChainKernel] = None) -> IntervalProb:
    """
    Certified P(max window sum >= t) as the complement of scan_cdf at t-1.

    Small tail probabilities lose their relative accuracy in the complement.
    """
    if t > spec.chain.n:
        return ZERO
    if t <= 0:
        return ONE
    return iv_complement(scan_cdf(spec, t - 1, kernel))


def scan_cdf_many(
    spec: ScanSpec,
    thresholds: Iterable[int],
    workers: int = 1,
    tail: Optional[bool] = None,
) -> List[Tuple[int, IntervalProb]]:
    """
    Evaluate several thresholds over one shared kernel.

    Kernel tables are built once at the widest threshold; rows may run on
    worker threads and come back in ascending threshold order.

    Args:
        spec: Scan problem (constraints are ignored)
        thresholds: Thresholds t
        workers: Number of threads
        tail: Compute scan_tail instead of scan_cdf (defaults to spec.tail)

    Returns:
        List of (t, interval) sorted by t
    """
    ordered = sorted(set(int(t) for t in thresholds))
    if not ordered:
        return []
    kernel = kernel_for(spec.chain)
    widest = min(max(ordered), spec.chain.n)
    for step in range(spec.chain.d):
        kernel.table(step, max(widest, 0))

    mode, precision = active_mode(), active_precision()
    if tail is None:
        tail = spec.tail
    compute = scan_tail if tail else scan_cdf

    def run(t: int) -> IntervalProb:
        with rounding_session(mode, precision):
            return compute(spec, t, kernel)

    if workers <= 1:
        results = [run(t) for t in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, ordered))
    return list(zip(ordered, results))

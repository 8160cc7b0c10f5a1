"""
Kernels Module
Certified binomial and hypergeometric densities and the partial-sum
transition kernels of multinomial and multivariate hypergeometric vectors.

The scalar densities follow fixed product listings that interleave
coefficient factors with probability factors so the running product stays
near 1. Kernel tables used by the DP engine are built with vectorized
directed recurrences in the increment, each entry obtained from the previous one
by a single directed ratio.
They enclose the same exact values as the product listings, but their
bits can differ from the listings' bounds, so a table entry and the
matching transition() result are overlapping rather than equal intervals.
Rows whose leading entry underflows are filled from the listings.
"""

from __future__ import annotations

import functools
import logging
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DomainError
from fpround import (
    Direction,
    active_mode,
    active_precision,
    div_down,
    div_up,
    mul_down,
    mul_up,
    vdiv,
    vmul,
)
from interval import (
    ONE,
    ZERO,
    IntervalProb,
    iv_add,
    iv_clamp_unit,
    iv_complement,
    iv_div,
)

logger = logging.getLogger(__name__)

CellInput = Union[Fraction, int, float, Tuple[float, float], IntervalProb]


class Family(Enum):
    MULTINOMIAL = "multinomial"
    HYPERGEOMETRIC = "hypergeometric"


@dataclass(frozen=True)
class BinomParams:
    """Binomial density arguments with bounds on p and q = 1 - p."""

    n: int
    k: int
    p_lo: float
    p_hi: float
    q_lo: float
    q_hi: float

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise DomainError(
                f"binomial k={self.k} outside 0..{self.n}", invariant="0 <= k <= n"
            )
        if not (0 <= self.p_lo <= self.p_hi <= 1 and 0 <= self.q_lo <= self.q_hi <= 1):
            raise DomainError(
                "binomial probability bounds must satisfy 0 <= lo <= hi <= 1",
                invariant="0 <= p_lo <= p_hi <= 1",
            )
        if (
            Fraction(self.p_hi) + Fraction(self.q_hi) < 1
            or Fraction(self.p_lo) + Fraction(self.q_lo) > 1
        ):
            raise DomainError(
                "p and q bounds do not admit p + q = 1",
                invariant="p_lo + q_lo <= 1 <= p_hi + q_hi",
            )


@dataclass(frozen=True)
class HyperParams:
    """Draw n balls from r red and b blue; k is the red count."""

    n: int
    r: int
    b: int
    k: int

    def __post_init__(self):
        if self.r < 0 or self.b < 0:
            raise DomainError(
                f"negative population r={self.r}, b={self.b}", invariant="r, b >= 0"
            )
        if not 1 <= self.n <= self.r + self.b:
            raise DomainError(
                f"sample size {self.n} outside 1..{self.r + self.b}",
                invariant="1 <= n <= r + b",
            )
        low, high = max(0, self.n - self.b), min(self.n, self.r)
        if not low <= self.k <= high:
            raise DomainError(
                f"red count {self.k} outside support {low}..{high}",
                invariant="max(0, n - b) <= k <= min(n, r)",
            )


# ============ SCALAR DENSITIES ============


def _binomial_product(
    k: int, n: int, p: float, q: float, mul: Callable, div: Callable
) -> float:
    if 2 * k > n:
        return _binomial_product(n - k, n, q, p, mul, div)
    f = 1.0
    j0 = j1 = j2 = 0
    while j0 < k or j1 < k or j2 < n - k:
        # coefficient factors wait until the product falls below 1
        if j0 < k and (f < 1 or (j1 >= k and j2 >= n - k)):
            j0 += 1
            f = mul(f, div(float(n - k + j0), float(j0)).value).value
        elif j1 < k:
            j1 += 1
            f = mul(f, p).value
        else:
            j2 += 1
            f = mul(f, q).value
    return f


def binom_density(params: BinomParams) -> IntervalProb:
    """
    Enclose b_{n,p}(k) = C(n,k) p^k q^(n-k) for every p in [p_lo, p_hi].

    The lower bound runs the product listing rounding down on (p_lo, q_lo),
    the upper bound rounding up on (p_hi, q_hi).
    """
    n, k = params.n, params.k
    lo = _binomial_product(k, n, params.p_lo, params.q_lo, mul_down, div_down)
    hi = _binomial_product(k, n, params.p_hi, params.q_hi, mul_up, div_up)
    return IntervalProb(lo, min(hi, 1.0))


def _hypergeometric_product(
    n: int, r: int, b: int, k: int, mul: Callable, div: Callable
) -> float:
    f = 1.0
    j0 = j1 = j2 = 0
    while j0 < k or j1 < n - k or j2 < n:
        numerators_left = j0 < k or j1 < n - k
        if numerators_left and (f < 1 or j2 >= n):
            if j0 < k:
                factor = div(float(r - j0), float(j0 + 1)).value
                j0 += 1
            else:
                factor = div(float(b - j1), float(j1 + 1)).value
                j1 += 1
        else:
            factor = div(float(j2 + 1), float(r + b - j2)).value
            j2 += 1
        f = mul(f, factor).value
    return f


def hyper_density(params: HyperParams) -> IntervalProb:
    """Enclose h_{n,r,b}(k) = C(r,k) C(b,n-k) / C(r+b,n)."""
    n, r, b, k = params.n, params.r, params.b, params.k
    if max(0, n - b) == min(n, r):
        return ONE
    lo = _hypergeometric_product(n, r, b, k, mul_down, div_down)
    hi = _hypergeometric_product(n, r, b, k, mul_up, div_up)
    return IntervalProb(lo, min(hi, 1.0))


# ============ CHAIN SPECIFICATION ============


def _as_cell(value: CellInput) -> Tuple[IntervalProb, Optional[Fraction]]:
    if isinstance(value, IntervalProb):
        return value, None
    if isinstance(value, tuple):
        lo, hi = value
        return IntervalProb(float(lo), float(hi)), None
    exact = Fraction(value)
    return IntervalProb.from_exact(exact), exact


@dataclass(frozen=True)
class ChainSpec:
    """
    Distribution of the count vector (N_1..N_d) whose partial sums S_k
    form the Markov chain.

    Multinomial specs carry one probability interval per cell (and the exact
    rationals when they are known); hypergeometric specs carry the cell
    populations m.
    """

    family: Family
    n: int
    d: int
    cells: Tuple[IntervalProb, ...] = ()
    m: Tuple[int, ...] = ()
    exact_cells: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension d={self.d} must be >= 1", invariant="d >= 1")
        if self.n < 0:
            raise DomainError(f"total n={self.n} must be >= 0", invariant="n >= 0")
        if self.family is Family.MULTINOMIAL:
            self._check_multinomial()
        else:
            self._check_hypergeometric()

    def _check_multinomial(self) -> None:
        if len(self.cells) != self.d:
            raise DomainError(
                f"expected {self.d} cell probabilities, got {len(self.cells)}",
                invariant="len(p) == d",
            )
        if any(cell.hi > 1 for cell in self.cells):
            raise DomainError("cell probability above 1", invariant="p_i <= 1")
        if self.exact_cells is not None and sum(self.exact_cells) != 1:
            raise DomainError(
                f"cell probabilities sum to {sum(self.exact_cells)}, not 1",
                invariant="sum(p) == 1",
            )
        low = sum(Fraction(cell.lo) for cell in self.cells)
        high = sum(Fraction(cell.hi) for cell in self.cells)
        if not low <= 1 <= high:
            raise DomainError(
                "cell probability bounds cannot sum to 1",
                invariant="sum(p_lo) <= 1 <= sum(p_hi)",
            )

    def _check_hypergeometric(self) -> None:
        if len(self.m) != self.d:
            raise DomainError(
                f"expected {self.d} cell populations, got {len(self.m)}",
                invariant="len(m) == d",
            )
        if any(count < 0 for count in self.m):
            raise DomainError("negative cell population", invariant="m_i >= 0")
        if sum(self.m) < self.n:
            raise DomainError(
                f"population {sum(self.m)} smaller than sample size {self.n}",
                invariant="sum(m) >= n",
            )

    @classmethod
    def uniform_multinomial(cls, n: int, d: int) -> "ChainSpec":
        """p = (1/d, ..., 1/d) with each cell the tightest enclosure of 1/d."""
        return cls.multinomial(n, [Fraction(1, d)] * d)

    @classmethod
    def multinomial(cls, n: int, probabilities: Sequence[CellInput]) -> "ChainSpec":
        """
        Build a multinomial spec from exact rationals, representable floats,
        (lo, hi) pairs or IntervalProb values.
        """
        parsed = [_as_cell(value) for value in probabilities]
        cells = tuple(cell for cell, _ in parsed)
        exact = [value for _, value in parsed]
        exact_cells = tuple(exact) if all(v is not None for v in exact) else None
        return cls(
            family=Family.MULTINOMIAL,
            n=n,
            d=len(cells),
            cells=cells,
            exact_cells=exact_cells,
        )

    @classmethod
    def hypergeometric(cls, n: int, m: Sequence[int]) -> "ChainSpec":
        return cls(family=Family.HYPERGEOMETRIC, n=n, d=len(m), m=tuple(int(x) for x in m))

    def describe(self) -> Dict[str, object]:
        info: Dict[str, object] = {"family": self.family.value, "n": self.n, "d": self.d}
        if self.family is Family.HYPERGEOMETRIC:
            info["m"] = list(self.m)
        elif self.exact_cells is not None:
            info["p"] = [str(value) for value in self.exact_cells]
        return info


# ============ TRANSITION KERNELS ============


@dataclass(frozen=True)
class KernelTable:
    """lo/hi arrays indexed by [from partial sum y, increment i]."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def max_increment(self) -> int:
        return self.lo.shape[1] - 1

    def clipped(self, max_increment: int) -> "KernelTable":
        return KernelTable(
            self.lo[:, : max_increment + 1], self.hi[:, : max_increment + 1]
        )


def _prefix_product(values: np.ndarray, direction: Direction) -> np.ndarray:
    """Inclusive directed prefix product (Hillis-Steele doubling)."""
    out = values.copy()
    shift = 1
    while shift < len(out):
        out[shift:] = vmul(out[shift:], out[:-shift], direction)
        shift *= 2
    return out


class ChainKernel:
    """
    Transition kernels P(S_{k+1} = x | S_k = y) of one ChainSpec.

    Conditional multinomial ratios are computed once per spec; kernel tables
    are cached per (step, precision, mode) and shared by every threshold.
    """

    def __init__(self, spec: ChainSpec):
        self.spec = spec
        self._tables: Dict[tuple, KernelTable] = {}
        self._lock = threading.Lock()
        self._ratio_cache: Dict[tuple, Tuple[Tuple[IntervalProb, ...], ...]] = {}
        if spec.family is Family.HYPERGEOMETRIC:
            suffix = [0] * (spec.d + 1)
            for index in range(spec.d - 1, -1, -1):
                suffix[index] = suffix[index + 1] + spec.m[index]
            self._suffix = tuple(suffix)

    # ---- multinomial conditional ratios ----

    def _ratios(self):
        key = (active_precision(), active_mode())
        cached = self._ratio_cache.get(key)
        if cached is None:
            cached = self._compute_ratios()
            self._ratio_cache[key] = cached
        return cached

    def _compute_ratios(self):
        cells = self.spec.cells
        d = self.spec.d
        tails = [ZERO] * d
        tail = ZERO
        for index in range(d - 1, -1, -1):
            tail = iv_add(tail, cells[index])
            tails[index] = tail
        ratios = []
        for index in range(d):
            if index == d - 1:
                ratio = ONE
            elif cells[index].hi == 0:
                ratio = ZERO
            elif tails[index].lo == 0:
                ratio = IntervalProb(0.0, 1.0)
            else:
                ratio = iv_clamp_unit(iv_div(cells[index], tails[index]))
            ratios.append((ratio, iv_complement(ratio)))
        return tuple(ratios)

    def ratio(self, step: int) -> IntervalProb:
        """Enclosure of p_{k+1} / (p_{k+1} + ... + p_d) for step k."""
        self._check_step(step)
        if self.spec.family is not Family.MULTINOMIAL:
            raise DomainError("ratios exist only for multinomial chains")
        return self._ratios()[step][0]

    def _check_step(self, step: int) -> None:
        if not 0 <= step < self.spec.d:
            raise DomainError(
                f"step {step} outside 0..{self.spec.d - 1}", invariant="1 <= k+1 <= d"
            )

    # ---- scalar transition ----

    def transition(self, step: int, y: int, x: int) -> IntervalProb:
        """
        Enclose P(S_{k+1} = x | S_k = y) for step k (0-based).

        Impossible transitions (x < y, or an increment outside the cell
        support) give [0, 0].
        """
        self._check_step(step)
        n = self.spec.n
        if not (0 <= y <= n and 0 <= x <= n):
            raise DomainError(
                f"partial sums y={y}, x={x} outside 0..{n}", invariant="0 <= y, x <= n"
            )
        if x < y:
            return ZERO
        remaining, increment = n - y, x - y
        if remaining == 0:
            return ONE if increment == 0 else ZERO
        if self.spec.family is Family.MULTINOMIAL:
            ratio, complement = self._ratios()[step]
            if ratio == ONE:
                return ONE if increment == remaining else ZERO
            if ratio == ZERO:
                return ONE if increment == 0 else ZERO
            return binom_density(
                BinomParams(
                    remaining,
                    increment,
                    ratio.lo,
                    ratio.hi,
                    complement.lo,
                    complement.hi,
                )
            )
        red, blue = self.spec.m[step], self._suffix[step + 1]
        if remaining > red + blue or increment > red or remaining - increment > blue:
            return ZERO
        return hyper_density(HyperParams(remaining, red, blue, increment))

    # ---- vectorized tables ----

    def table(self, step: int, max_increment: int) -> KernelTable:
        """
        Kernel table for step k covering increments 0..max_increment.

        Entries are zero outside the support. A cached wider table is
        sliced; a narrower one is rebuilt at the requested width.
        """
        self._check_step(step)
        max_increment = max(0, min(max_increment, self.spec.n))
        key = (step, active_precision(), active_mode())
        with self._lock:
            cached = self._tables.get(key)
            if cached is not None and cached.max_increment >= max_increment:
                return cached.clipped(max_increment)
            if self.spec.family is Family.MULTINOMIAL:
                built = self._multinomial_table(step, max_increment)
            else:
                built = self._hypergeometric_table(step, max_increment)
            self._tables[key] = built
            logger.debug(
                "kernel table step=%d width=%d precision=%s",
                step,
                max_increment,
                active_precision().value,
            )
            return built

    def _empty(self, width: int):
        dtype = active_precision().dtype
        rows = self.spec.n + 1
        return np.zeros((rows, width + 1), dtype=dtype), np.zeros(
            (rows, width + 1), dtype=dtype
        )

    def _scalar_rows(self, step: int, rows, width: int, lo, hi) -> None:
        for y in rows:
            y = int(y)
            for increment in range(min(width, self.spec.n - y) + 1):
                value = self.transition(step, y, y + increment)
                lo[y, increment] = value.lo
                hi[y, increment] = value.hi

    def _multinomial_table(self, step: int, width: int) -> KernelTable:
        n = self.spec.n
        lo, hi = self._empty(width)
        ratio, complement = self._ratios()[step]
        remaining = n - np.arange(n + 1)

        if ratio == ONE:
            for y in range(n + 1):
                if n - y <= width:
                    lo[y, n - y] = hi[y, n - y] = 1
            return KernelTable(lo, hi)
        if ratio == ZERO:
            lo[:, 0] = hi[:, 0] = 1
            return KernelTable(lo, hi)
        if ratio.lo == 0 or complement.lo == 0:
            self._scalar_rows(step, range(n + 1), width, lo, hi)
            return KernelTable(lo, hi)

        dtype = lo.dtype
        # q^m for m = 0..n; row y uses m = n - y
        powers_lo = np.full(n + 1, complement.lo, dtype=dtype)
        powers_hi = np.full(n + 1, complement.hi, dtype=dtype)
        powers_lo[0] = powers_hi[0] = 1
        powers_lo = _prefix_product(powers_lo, Direction.DOWN)
        powers_hi = _prefix_product(powers_hi, Direction.UP)
        current_lo, current_hi = powers_lo[remaining], powers_hi[remaining]
        lo[:, 0], hi[:, 0] = current_lo, current_hi

        odds_lo = div_down(ratio.lo, complement.hi).value
        odds_hi = div_up(ratio.hi, complement.lo).value
        for i in range(width):
            inside = remaining >= i + 1
            factor_lo = vdiv(remaining - i, i + 1, Direction.DOWN)
            factor_hi = vdiv(remaining - i, i + 1, Direction.UP)
            current_lo = vmul(vmul(current_lo, factor_lo, Direction.DOWN), odds_lo, Direction.DOWN)
            current_hi = vmul(vmul(current_hi, factor_hi, Direction.UP), odds_hi, Direction.UP)
            current_lo = np.where(inside, current_lo, 0)
            current_hi = np.where(inside, current_hi, 0)
            lo[:, i + 1], hi[:, i + 1] = current_lo, current_hi

        underflowed = np.nonzero(lo[:, 0] == 0)[0]
        if len(underflowed):
            logger.debug("step %d: %d rows recomputed by listing", step, len(underflowed))
            self._scalar_rows(step, underflowed, width, lo, hi)
        np.minimum(hi, 1, out=hi)
        return KernelTable(lo, hi)

    def _hypergeometric_table(self, step: int, width: int) -> KernelTable:
        n = self.spec.n
        lo, hi = self._empty(width)
        dtype = lo.dtype
        red, blue = self.spec.m[step], self._suffix[step + 1]
        remaining = n - np.arange(n + 1)
        feasible = remaining <= red + blue

        # C(B, m) / C(R + B, m) as a prefix product of (B - j) / (R + B - j)
        j = np.arange(n, dtype=np.int64)
        denominators = np.where(red + blue - j > 0, red + blue - j, 1)
        numerators = np.where(blue - j > 0, blue - j, 0)
        start_lo = np.ones(n + 1, dtype=dtype)
        start_hi = np.ones(n + 1, dtype=dtype)
        if n:
            start_lo[1:] = vdiv(numerators, denominators, Direction.DOWN)
            start_hi[1:] = vdiv(numerators, denominators, Direction.UP)
        start_lo = _prefix_product(start_lo, Direction.DOWN)[remaining]
        start_hi = _prefix_product(start_hi, Direction.UP)[remaining]

        # rows drawing more than the blue population start at i0 = m - B
        first = np.maximum(remaining - blue, 0)
        last = np.minimum(remaining, red)
        late_rows = np.nonzero(feasible & (first > 0) & (first <= width))[0]
        late_lo = np.zeros(n + 1, dtype=dtype)
        late_hi = np.zeros(n + 1, dtype=dtype)
        for y in late_rows:
            value = self.transition(step, int(y), int(y + first[y]))
            late_lo[y], late_hi[y] = value.lo, value.hi

        current_lo = np.where(feasible & (first == 0), start_lo, 0).astype(dtype)
        current_hi = np.where(feasible & (first == 0), start_hi, 0).astype(dtype)
        lo[:, 0], hi[:, 0] = current_lo, current_hi
        for i in range(width):
            step_ok = feasible & (first <= i) & (i + 1 <= last)
            safe = np.where(step_ok, blue - remaining + i + 1, 1)
            ratio_lo = vdiv(np.where(step_ok, remaining - i, 0), safe, Direction.DOWN)
            ratio_hi = vdiv(np.where(step_ok, remaining - i, 0), safe, Direction.UP)
            red_lo = div_down(float(max(red - i, 0)), float(i + 1)).value
            red_hi = div_up(float(max(red - i, 0)), float(i + 1)).value
            next_lo = vmul(vmul(current_lo, red_lo, Direction.DOWN), ratio_lo, Direction.DOWN)
            next_hi = vmul(vmul(current_hi, red_hi, Direction.UP), ratio_hi, Direction.UP)
            entering = feasible & (first == i + 1)
            current_lo = np.where(entering, late_lo, np.where(step_ok, next_lo, 0))
            current_hi = np.where(entering, late_hi, np.where(step_ok, next_hi, 0))
            lo[:, i + 1], hi[:, i + 1] = current_lo, current_hi

        underflowed = np.nonzero(feasible & (first == 0) & (lo[:, 0] == 0))[0]
        if len(underflowed):
            logger.debug("step %d: %d rows recomputed by listing", step, len(underflowed))
            self._scalar_rows(step, underflowed, width, lo, hi)
        np.minimum(hi, 1, out=hi)
        return KernelTable(lo, hi)


@functools.lru_cache(maxsize=32)
def kernel_for(spec: ChainSpec) -> ChainKernel:
    """Shared ChainKernel per spec (specs are immutable and hashable)."""
    return ChainKernel(spec)


def transition(spec: ChainSpec, step: int, y: int, x: int) -> IntervalProb:
    """Certified P(S_{k+1} = x | S_k = y); see ChainKernel.transition."""
    return kernel_for(spec).transition(step, y, x)

"""
Oracle Module
Exact rational reference values for small scan and rectangle problems.

Two independent computations are provided: enumeration of every count
vector of the support, and the window-chain recursion evaluated with
Fractions. Both refuse to run beyond an enumeration budget.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from errors import DomainError, OracleBudgetError
from kernels import Family
from settings import Settings

logger = logging.getLogger(__name__)

ExactRational = Fraction
Parameters = Sequence[Union[Fraction, int]]


def _budget(budget: Optional[int]) -> int:
    return Settings.from_env().oracle_budget if budget is None else budget


def exact_binomial(n: int, k: int, p: Fraction) -> Fraction:
    if not 0 <= k <= n:
        return Fraction(0)
    return comb(n, k) * p**k * (1 - p) ** (n - k)


def exact_hypergeometric(n: int, r: int, b: int, k: int) -> Fraction:
    if not 0 <= k <= n or n > r + b:
        return Fraction(0)
    return Fraction(comb(r, k) * comb(b, n - k), comb(r + b, n))


def _check_parameters(family: Family, n: int, d: int, params: Parameters) -> List:
    if len(params) != d:
        raise DomainError(f"expected {d} parameters, got {len(params)}")
    if family is Family.MULTINOMIAL:
        probabilities = [Fraction(p) for p in params]
        if sum(probabilities) != 1 or any(p < 0 for p in probabilities):
            raise DomainError("exact cell probabilities must be >= 0 and sum to 1")
        return probabilities
    populations = [int(m) for m in params]
    if any(m < 0 for m in populations) or sum(populations) < n:
        raise DomainError("cell populations must be >= 0 and sum to at least n")
    return populations


def threshold_constraints(n: int, d: int, ell: int, t: int) -> List[Tuple[int, ...]]:
    """A_j = {0..t} for each of the d - ell + 1 windows."""
    return [tuple(range(min(t, n) + 1))] * (d - ell + 1)


# ============ ENUMERATION ============


def exact_window_probability(
    family: Family,
    n: int,
    d: int,
    ell: int,
    constraints: Sequence[Iterable[int]],
    params: Parameters,
    budget: Optional[int] = None,
) -> Fraction:
    """
    P(window sum j in A_j for all j) by enumerating count vectors.

    Partial vectors whose completed windows already fail are cut; the
    budget applies to the full composition count C(n+d-1, d-1).

    Raises:
        OracleBudgetError: If the support is larger than the budget
    """
    if not 1 <= ell <= d:
        raise DomainError(f"window length {ell} outside 1..{d}")
    constraints = [frozenset(int(a) for a in c) for c in constraints]
    if len(constraints) != d - ell + 1:
        raise DomainError(f"expected {d - ell + 1} window constraints")
    cells = _check_parameters(family, n, d, params)
    required = comb(n + d - 1, d - 1)
    limit = _budget(budget)
    if required > limit:
        raise OracleBudgetError(required, limit)

    if family is Family.MULTINOMIAL:
        denominator = lcm(*(p.denominator for p in cells))
        weights = [int(p * denominator) for p in cells]
        scale = Fraction(1, denominator**n)
    else:
        weights = cells
        scale = Fraction(1, comb(sum(cells), n))

    counts: List[int] = []
    total = 0
    leaves = 0

    def factor(index: int, remaining: int, x: int) -> int:
        if family is Family.MULTINOMIAL:
            return comb(remaining, x) * weights[index] ** x
        return comb(weights[index], x)

    def candidates(index: int, remaining: int) -> Iterable[int]:
        if index == d - 1:
            choices: Iterable[int] = (remaining,)
        else:
            choices = range(remaining + 1)
        if index < ell - 1:
            return choices
        open_sum = sum(counts[index - ell + 1 :])
        allowed = constraints[index - ell + 1]
        return [x for x in choices if open_sum + x in allowed]

    def visit(index: int, remaining: int, weight: int) -> None:
        nonlocal total, leaves
        if index == d:
            total += weight
            leaves += 1
            return
        for x in candidates(index, remaining):
            w = factor(index, remaining, x)
            if w == 0:
                continue
            counts.append(x)
            visit(index + 1, remaining - x, weight * w)
            counts.pop()

    visit(0, n, 1)
    logger.debug("enumerated %d admissible count vectors of %d", leaves, required)
    return total * scale


def exact_scan_probability(
    family: Family,
    n: int,
    d: int,
    ell: int,
    t: int,
    params: Parameters,
    budget: Optional[int] = None,
) -> Fraction:
    """Exact P(max window sum <= t) by enumeration."""
    if t < 0:
        raise DomainError(f"threshold {t} is negative")
    return exact_window_probability(
        family, n, d, ell, threshold_constraints(n, d, ell, t), params, budget
    )


# ============ EXACT RECURSION ============


def _exact_kernels(family: Family, n: int, cells: List):
    d = len(cells)
    if family is Family.MULTINOMIAL:
        tails = [sum(cells[k:]) for k in range(d)]

        def kernel(step: int, y: int, x: int) -> Fraction:
            if x < y:
                return Fraction(0)
            if tails[step] == 0:
                return Fraction(int(x == y))
            ratio = cells[step] / tails[step]
            return exact_binomial(n - y, x - y, ratio)

    else:
        blues = [sum(cells[k + 1 :]) for k in range(d)]

        def kernel(step: int, y: int, x: int) -> Fraction:
            if x < y:
                return Fraction(0)
            if n - y == 0:
                return Fraction(int(x == y))
            return exact_hypergeometric(n - y, cells[step], blues[step], x - y)

    return kernel


def exact_rectangle_dp(
    family: Family,
    n: int,
    d: int,
    ell: int,
    constraints: Sequence[Iterable[int]],
    params: Parameters,
    budget: Optional[int] = None,
) -> Fraction:
    """
    The window-chain recursion in exact arithmetic.

    States are window tuples (S_j..S_{j+ell-1}); the budget bounds the
    number of such tuples, C(n+ell, ell).
    """
    if not 1 <= ell <= d:
        raise DomainError(f"window length {ell} outside 1..{d}")
    constraints = [frozenset(int(a) for a in c) for c in constraints]
    if len(constraints) != d - ell + 1:
        raise DomainError(f"expected {d - ell + 1} window constraints")
    cells = _check_parameters(family, n, d, params)
    required = comb(n + ell, ell)
    limit = _budget(budget)
    if required > limit:
        raise OracleBudgetError(required, limit)
    kernel = _exact_kernels(family, n, cells)

    layer: Dict[Tuple[int, ...], Fraction] = {(0,): Fraction(1)}
    for step in range(ell):
        grown: Dict[Tuple[int, ...], Fraction] = {}
        for sums, mass in layer.items():
            for x in range(sums[-1], n + 1):
                value = kernel(step, sums[-1], x)
                if value:
                    key = sums + (x,)
                    grown[key] = grown.get(key, 0) + mass * value
        layer = grown
    layer = {
        sums[1:]: mass for sums, mass in layer.items() if sums[-1] in constraints[0]
    }

    for window in range(1, d - ell + 1):
        step = window + ell - 1
        allowed = constraints[window]
        following: Dict[Tuple[int, ...], Fraction] = {}
        for sums in sorted(layer):
            mass = layer[sums]
            for a in sorted(allowed):
                x = sums[0] + a
                if x < sums[-1] or x > n:
                    continue
                value = kernel(step, sums[-1], x)
                if value:
                    key = sums[1:] + (x,)
                    following[key] = following.get(key, 0) + mass * value
        layer = following
    return sum(layer.values(), Fraction(0))


# ============ FIXTURES ============


@dataclass(frozen=True)
class FixtureRow:
    """One recorded exact instance of a threshold scan problem."""

    family: Family
    n: int
    d: int
    ell: int
    t: int
    params: Tuple[Union[Fraction, int], ...]
    value: Fraction

    def compute(self, budget: Optional[int] = None) -> Fraction:
        return exact_scan_probability(
            self.family, self.n, self.d, self.ell, self.t, self.params, budget
        )


def expand_repeats(text: str) -> List[str]:
    """Split "1/3,1/3" or "10x365" style lists into their items."""
    items: List[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        value, sep, count = part.rpartition("x")
        if sep and value and count.isdigit():
            items.extend([value] * int(count))
        else:
            items.append(part)
    return items


def _format_params(family: Family, params: Sequence) -> str:
    return ",".join(str(Fraction(p)) if family is Family.MULTINOMIAL else str(int(p)) for p in params)


def _parse_params(family: Family, text: str) -> Tuple:
    items = expand_repeats(text)
    if family is Family.MULTINOMIAL:
        return tuple(Fraction(item) for item in items)
    return tuple(int(item) for item in items)


def write_fixtures(path: Union[str, Path], rows: Iterable[FixtureRow], append: bool = False) -> None:
    """Write rows as UTF-8 tab-separated lines."""
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        for row in rows:
            writer.writerow(
                [
                    row.family.value,
                    row.n,
                    row.d,
                    row.ell,
                    row.t,
                    _format_params(row.family, row.params),
                    str(row.value),
                ]
            )


def read_fixtures(path: Union[str, Path]) -> List[FixtureRow]:
    """Read a fixture file; blank lines and lines starting with # are skipped."""
    rows = []
    with open(path, encoding="utf-8", newline="") as handle:
        for line_number, fields in enumerate(csv.reader(handle, delimiter="\t"), 1):
            if not fields or fields[0].startswith("#"):
                continue
            if len(fields) != 7:
                raise DomainError(f"{path}:{line_number}: expected 7 fields, got {len(fields)}")
            family = Family(fields[0])
            rows.append(
                FixtureRow(
                    family=family,
                    n=int(fields[1]),
                    d=int(fields[2]),
                    ell=int(fields[3]),
                    t=int(fields[4]),
                    params=_parse_params(family, fields[5]),
                    value=Fraction(fields[6]),
                )
            )
    return rows

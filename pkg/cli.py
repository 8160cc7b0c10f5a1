"""
rigscan command line
Certified scan, tail and rectangle probabilities, error metrics, exact oracle
values and threshold tables.

    python cli.py table --family multinomial --n 500 --d 365 --ell 3 --uniform --t 4..32
    python cli.py scan --family hypergeometric --n 500 --d 365 --ell 3 --m 10x365 --t 8 --format json
    python cli.py errors --lo 0.02 --hi 0.03
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from engine import Constraint, as_constraint, rectangle_probability
from errors import ConfigError, DomainError, OracleBudgetError
from fpround import (
    HEX_SEPARATOR,
    ASCII_HEX_SEPARATOR,
    Precision,
    RoundingMode,
    enclose,
    format_hex,
    parse_hex,
    rounding_session,
)
from interval import IntervalProb
from kernels import ChainSpec, Family
from metrics import error_report, max_accuracy, max_accuracy_complement, t_image
from oracle import (
    FixtureRow,
    exact_rectangle_dp,
    exact_scan_probability,
    expand_repeats,
    threshold_constraints,
    write_fixtures,
)
from scan import ScanSpec, build_increment_model, scan_cdf_many, scan_probability
from settings import Settings
from UI import ROW_COLUMNS, ReportUI

logger = logging.getLogger("rigscan")

FORMATS = ("table", "csv", "json")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3

Probability = Union[Fraction, float]


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation; echoed into every report."""

    command: str
    family: Family = Family.MULTINOMIAL
    n: int = 0
    d: int = 0
    ell: int = 1
    thresholds: Tuple[int, ...] = ()
    params: Tuple[Probability, ...] = ()
    params_source: str = "none"
    sets: Tuple[Constraint, ...] = ()
    lo: Optional[Probability] = None
    hi: Optional[Probability] = None
    p: Optional[Probability] = None
    method: str = "enumerate"
    record: Optional[str] = None
    budget: int = 10**8
    precision: Precision = Precision.BINARY64
    rounding: RoundingMode = RoundingMode.STRONG
    output: str = "table"
    hex: bool = False
    workers: int = 1

    def echo(self) -> Dict[str, object]:
        """The configuration as plain JSON-ready values."""
        info: Dict[str, object] = {"command": self.command}
        if self.command == "errors":
            if self.p is not None:
                info["p"] = str(self.p)
            else:
                info["lo"] = str(self.lo)
                info["hi"] = str(self.hi)
        else:
            info.update(
                {
                    "family": self.family.value,
                    "n": self.n,
                    "d": self.d,
                    "ell": self.ell,
                    "params": self.params_source,
                }
            )
            if self.command == "rect":
                info["sets"] = [_format_set(s, self.n) for s in self.sets]
            else:
                info["thresholds"] = list(self.thresholds)
        info["precision"] = self.precision.value
        info["rounding"] = self.rounding.value
        return info


@dataclass
class Report:
    """Rows of one run plus the configuration that produced them."""

    config: Dict[str, object]
    columns: Tuple[str, ...]
    rows: List[Dict[str, object]] = field(default_factory=list)
    title: str = ""


# ============ ARGUMENT PARSING ============


def parse_thresholds(text: str) -> Tuple[int, ...]:
    """Thresholds from "8", "4..32" or "5,9,12"; "a..b" with b < a is empty."""
    text = text.strip()
    try:
        if ".." in text:
            start, _, stop = text.partition("..")
            return tuple(range(int(start), int(stop) + 1))
        return tuple(sorted({int(part) for part in text.split(",") if part.strip()}))
    except ValueError:
        raise ConfigError(f"cannot read thresholds {text!r}")


def parse_set(text: str, n: int) -> Constraint:
    """One constraint set: "*", "a..b", "3" or a comma list of those."""
    values = set()
    for part in text.split(","):
        part = part.strip()
        if part == "*":
            values.update(range(n + 1))
        elif ".." in part:
            start, _, stop = part.partition("..")
            try:
                values.update(range(int(start), int(stop) + 1))
            except ValueError:
                raise ConfigError(f"cannot read set range {part!r}")
        elif part:
            try:
                values.add(int(part))
            except ValueError:
                raise ConfigError(f"cannot read set member {part!r}")
    if any(not 0 <= value <= n for value in values):
        raise ConfigError(f"set {text!r} leaves 0..{n}")
    return as_constraint(values)


def parse_sets(text: str, n: int) -> Tuple[Constraint, ...]:
    """Semicolon separated sets, e.g. "0..3;0..3;*"."""
    return tuple(parse_set(part, n) for part in text.split(";"))


def _format_set(values: Constraint, n: int) -> str:
    if values and values == tuple(range(values[0], values[-1] + 1)):
        if values[0] == 0 and values[-1] == n:
            return "*"
        return f"{values[0]}..{values[-1]}"
    return ",".join(str(v) for v in values)


def parse_probability(text: str, precision: Precision) -> Probability:
    """A rational ("1/365"), a decimal ("0.02") or a hex float ("1.0...*2^-9")."""
    text = text.strip()
    if "2^" in text:
        return parse_hex(text, precision)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot read probability {text!r}")


def _read_params_file(path: str) -> List[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read parameter file {path}: {exc.strerror}")
    items = []
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            items.extend(expand_repeats(line))
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigscan",
        description="Certified bounds for multinomial and hypergeometric scan probabilities.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--precision", choices=[p.value for p in Precision])
        sub.add_argument("--rounding", choices=[m.value for m in RoundingMode])
        sub.add_argument("--format", dest="output", choices=FORMATS, default="table")

    def add_problem(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--family", choices=[f.value for f in Family], default="multinomial")
        sub.add_argument("--n", type=int, required=True, help="number of draws")
        sub.add_argument("--d", type=int, required=True, help="number of cells")
        sub.add_argument("--ell", type=int, default=1, help="window length")
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--uniform", action="store_true", help="p = (1/d, ..., 1/d)")
        source.add_argument("--p", help="cell probabilities, e.g. 1/4,1/4,1/2 or 1/365x365")
        source.add_argument("--m", help="cell populations, e.g. 10x365")
        source.add_argument("--params-file", help="one parameter per line")
        sub.add_argument("--hex", action="store_true", help="show hex bounds in table output")

    for name, text in (
        ("scan", "P(max window sum <= t)"),
        ("tail", "P(max window sum >= t) by complement"),
        ("table", "threshold table of scan (or tail) probabilities"),
        ("oracle", "exact rational scan probabilities"),
    ):
        sub = commands.add_parser(name, help=text)
        add_problem(sub)
        add_common(sub)
        sub.add_argument("--t", required=True, help="threshold, list or a..b range")
        if name == "table":
            sub.add_argument("--tail", action="store_true", help="complement rows")
            sub.add_argument("--workers", type=int)
        if name == "oracle":
            sub.add_argument("--method", choices=("enumerate", "dp"), default="enumerate")
            sub.add_argument("--record", help="append the results to a fixture file")
            sub.add_argument("--budget", type=int)

    rect = commands.add_parser("rect", help="P(window sum j in A_j for every j)")
    add_problem(rect)
    add_common(rect)
    rect.add_argument("--sets", required=True, help='constraint sets, e.g. "0..3;0..3;*"')

    errors = commands.add_parser("errors", help="accuracy of an interval or a probability")
    add_common(errors)
    errors.add_argument("--lo")
    errors.add_argument("--hi")
    errors.add_argument("--p")
    return parser


def _problem_params(args: argparse.Namespace, family: Family, d: int, precision: Precision):
    if family is Family.MULTINOMIAL:
        if args.m is not None:
            raise ConfigError("--m applies to the hypergeometric family")
        if args.uniform:
            return (Fraction(1, d),) * d, "uniform"
        if args.p is not None:
            items, source = expand_repeats(args.p), "explicit"
        elif args.params_file is not None:
            items, source = _read_params_file(args.params_file), "file"
        else:
            raise ConfigError("multinomial needs --uniform, --p or --params-file")
        params = tuple(parse_probability(item, precision) for item in items)
    else:
        if args.uniform or args.p is not None:
            raise ConfigError("hypergeometric cells are given with --m or --params-file")
        if args.m is not None:
            items, source = expand_repeats(args.m), "explicit"
        elif args.params_file is not None:
            items, source = _read_params_file(args.params_file), "file"
        else:
            raise ConfigError("hypergeometric needs --m or --params-file")
        try:
            params = tuple(int(item) for item in items)
        except ValueError:
            raise ConfigError(f"cell populations must be integers: {items}")
    if len(params) != d:
        raise ConfigError(f"expected {d} parameters, got {len(params)}")
    return params, source


def resolve_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """
    Merge command-line arguments over environment settings.

    Raises:
        ConfigError: If the combination is unusable
    """
    precision = Precision(args.precision or settings.precision)
    rounding = RoundingMode(args.rounding or settings.rounding)
    common = dict(
        command=args.command,
        precision=precision,
        rounding=rounding,
        output=args.output,
        budget=settings.oracle_budget,
        workers=settings.workers,
    )

    if args.command == "errors":
        if args.p is not None:
            if args.lo is not None or args.hi is not None:
                raise ConfigError("give either --p or --lo/--hi")
            return RunConfig(p=parse_probability(args.p, precision), **common)
        if args.lo is None or args.hi is None:
            raise ConfigError("errors needs --lo and --hi, or --p")
        return RunConfig(
            lo=parse_probability(args.lo, precision),
            hi=parse_probability(args.hi, precision),
            **common,
        )

    if args.n < 0 or args.d < 1:
        raise ConfigError(f"need n >= 0 and d >= 1, got n={args.n}, d={args.d}")
    if not 1 <= args.ell <= args.d:
        raise ConfigError(f"window length {args.ell} outside 1..{args.d}")
    family = Family(args.family)
    params, source = _problem_params(args, family, args.d, precision)
    problem = dict(family=family, n=args.n, d=args.d, ell=args.ell, params=params, params_source=source, hex=args.hex)

    if args.command == "rect":
        sets = parse_sets(args.sets, args.n)
        if len(sets) != args.d - args.ell + 1:
            raise ConfigError(f"expected {args.d - args.ell + 1} sets, got {len(sets)}")
        return RunConfig(sets=sets, **problem, **common)

    thresholds = parse_thresholds(args.t)
    if any(not 0 <= t <= args.n + 1 for t in thresholds):
        raise ConfigError(f"thresholds must lie in 0..{args.n + 1}")
    if args.command in ("scan", "tail") and len(thresholds) != 1:
        raise ConfigError(f"{args.command} takes a single threshold; use table for ranges")
    if args.command == "table":
        if args.tail:
            common["command"] = "tail-table"
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be positive")
            common["workers"] = args.workers
    if args.command == "oracle":
        if args.budget is not None:
            common["budget"] = args.budget
        return RunConfig(
            thresholds=thresholds, method=args.method, record=args.record, **problem, **common
        )
    return RunConfig(thresholds=thresholds, **problem, **common)


# ============ RUN ============


def chain_from_config(config: RunConfig) -> ChainSpec:
    if config.family is Family.MULTINOMIAL:
        return ChainSpec.multinomial(config.n, config.params)
    return ChainSpec.hypergeometric(config.n, config.params)


def interval_row(t: Optional[int], interval: IntervalProb) -> Dict[str, object]:
    """One report row: bounds in hex and decimal with their accuracy figures."""
    report = error_report(interval.lo, interval.hi)
    row: Dict[str, object] = {"t": t}
    row.update(interval.to_json())
    row.update(e_abs=report.e_abs_display, e_rel=report.e_rel_display, approx=report.approx)
    return row


def _errors_rows(config: RunConfig) -> Tuple[Tuple[str, ...], List[Dict[str, object]]]:
    if config.p is not None:
        down, up = enclose(Fraction(config.p))
        row = {
            "p": str(config.p),
            "enclosure_lo": format_hex(down),
            "enclosure_hi": format_hex(up),
            "max_accuracy": repr(max_accuracy(config.p)),
            "max_accuracy_complement": repr(max_accuracy_complement(config.p)),
            "approx": t_image(config.p),
        }
        return tuple(row), [row]
    report = error_report(config.lo, config.hi)
    row = {"lo": str(config.lo), "hi": str(config.hi)}
    row.update(report.to_json())
    return tuple(row), [row]


def _oracle_rows(config: RunConfig) -> List[Dict[str, object]]:
    rows = []
    recorded = []
    for t in config.thresholds:
        if config.method == "dp":
            constraints = threshold_constraints(config.n, config.d, config.ell, t)
            value = exact_rectangle_dp(
                config.family, config.n, config.d, config.ell, constraints, config.params, config.budget
            )
        else:
            value = exact_scan_probability(
                config.family, config.n, config.d, config.ell, t, config.params, config.budget
            )
        rows.append({"t": t, "exact": str(value), "decimal": repr(float(value))})
        recorded.append(
            FixtureRow(config.family, config.n, config.d, config.ell, t, tuple(config.params), value)
        )
    if config.record:
        write_fixtures(config.record, recorded, append=True)
        logger.info("appended %d fixture rows to %s", len(recorded), config.record)
    return rows


def run(config: RunConfig) -> Report:
    """
    Compute the report of one invocation.

    Must be called inside the rounding session of the configuration.

    Raises:
        DomainError: If the parameters violate a model invariant
        OracleBudgetError: If the exact oracle refuses the instance
    """
    echo = config.echo()
    if config.command == "errors":
        columns, rows = _errors_rows(config)
        return Report(echo, columns, rows, "Accuracy")
    if config.command == "oracle":
        rows = _oracle_rows(config)
        return Report(echo, ("t", "exact", "decimal"), rows, "Exact values")

    chain = chain_from_config(config)
    logger.debug("chain %s", chain.describe())
    if config.command == "rect":
        if config.ell == 1:
            interval = rectangle_probability(build_increment_model(chain), config.sets)
        else:
            interval = scan_probability(ScanSpec(chain, config.ell, config.sets))
        return Report(echo, ROW_COLUMNS, [interval_row(None, interval)], "Rectangle probability")

    tail = config.command in ("tail", "tail-table")
    spec = ScanSpec(chain, config.ell, tail=tail)
    results = scan_cdf_many(spec, config.thresholds, workers=config.workers)
    rows = [interval_row(t, interval) for t, interval in results]
    title = "P(max window sum >= t)" if tail else "P(max window sum <= t)"
    return Report(echo, ROW_COLUMNS, rows, title)


# ============ OUTPUT ============


def _plain(value: object) -> str:
    if value is None:
        return ""
    return str(value).replace(HEX_SEPARATOR, ASCII_HEX_SEPARATOR)


def emit_json(report: Report) -> bytes:
    """Rows as a JSON array, each carrying the resolved config; ASCII only."""
    rows = [dict(row, config=report.config) for row in report.rows]
    return (json.dumps(rows, indent=2, ensure_ascii=True) + "\n").encode("ascii")


def emit_csv(report: Report) -> bytes:
    """Header plus one line per row; hex fields use the ASCII separator."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_plain(row.get(column)) for column in report.columns])
    return buffer.getvalue().encode("ascii")


def render(report: Report, config: RunConfig, ui: ReportUI) -> None:
    """Console rendering of a report for --format table."""
    ui.show_config(report.config)
    if not report.rows:
        ui.show_info("no thresholds in the requested range")
    elif config.command == "errors":
        for row in report.rows:
            ui.show_error_report(row)
    elif config.command == "oracle":
        ui.show_oracle(report.rows)
    elif config.command in ("scan", "tail", "rect") and len(report.rows) == 1:
        ui.show_interval(report.rows[0], report.title)
    else:
        if config.hex:
            columns = tuple(c for c in report.columns if not c.endswith("_dec"))
        else:
            columns = tuple(c for c in report.columns if not c.endswith("_hex"))
        ui.show_rows(report.rows, columns, report.title)


def _write(data: bytes) -> None:
    stream = getattr(sys.stdout, "buffer", None)
    if stream is None:
        sys.stdout.write(data.decode("ascii"))
    else:
        stream.write(data)
    sys.stdout.flush()


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def main(argv: Optional[Sequence[str]] = None, ui: Optional[ReportUI] = None) -> int:
    """Entry point; returns the exit status."""
    load_dotenv()
    ui = ui or ReportUI()
    args = build_parser().parse_args(argv)
    try:
        settings = Settings.from_env()
        configure_logging(settings.log_level)
        logger.debug("settings %s", settings.to_dict())
        config = resolve_config(args, settings)
        logger.debug("resolved config %s", config.echo())
        with rounding_session(config.rounding, config.precision):
            report = run(config)
    except OracleBudgetError as exc:
        ui.show_error(str(exc))
        return EXIT_BUDGET
    except (ConfigError, DomainError) as exc:
        ui.show_error(str(exc))
        return EXIT_CONFIG

    if config.output == "json":
        _write(emit_json(report))
    elif config.output == "csv":
        _write(emit_csv(report))
    else:
        render(report, config, ui)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

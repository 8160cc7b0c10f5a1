"""
UI Module for rigscan using Rich library
Renders threshold tables, certified intervals, error reports and diagnostics
on the console.
"""

from typing import Dict, Iterable, Mapping, Optional, Sequence

from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from fpround import ASCII_HEX_SEPARATOR, HEX_SEPARATOR

# Columns of a threshold row, in display order
ROW_COLUMNS = ("t", "lo_hex", "hi_hex", "lo_dec", "hi_dec", "e_abs", "e_rel", "approx")

_HEADERS = {
    "t": "t",
    "lo_hex": "lower (hex)",
    "hi_hex": "upper (hex)",
    "lo_dec": "lower",
    "hi_dec": "upper",
    "e_abs": "e_abs",
    "e_rel": "e_rel",
    "approx": "approx",
}


def text_field(value: object) -> str:
    """Plain ASCII rendering of one report field."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    return escape(str(value).replace(HEX_SEPARATOR, ASCII_HEX_SEPARATOR))


class ReportUI:
    """Console output for rigscan reports using Rich library"""

    def __init__(self, console: Optional[Console] = None, stderr: Optional[Console] = None):
        self.console = console or Console()
        self.stderr = stderr or Console(stderr=True)

    def create_rows_table(
        self, rows: Sequence[Mapping[str, object]], columns: Sequence[str] = ROW_COLUMNS, title: str = ""
    ) -> Table:
        """Create a table with one line per threshold"""
        table = Table(title=title or None, box=box.ASCII_DOUBLE_HEAD, border_style="cyan")
        for column in columns:
            justify = "right" if column in ("t", "e_abs", "e_rel") else "left"
            style = "green" if column.endswith("_hex") else None
            table.add_column(_HEADERS.get(column, column), justify=justify, style=style)
        for row in rows:
            table.add_row(*(text_field(row.get(column)) for column in columns))
        return table

    def show_rows(
        self, rows: Sequence[Mapping[str, object]], columns: Sequence[str] = ROW_COLUMNS, title: str = ""
    ):
        """Display threshold rows"""
        self.console.print(self.create_rows_table(rows, columns, title))

    def show_interval(self, row: Mapping[str, object], title: str = "Certified interval"):
        """Display a single interval with its error figures"""
        lines = [
            f"[bold]lower[/bold]  {text_field(row.get('lo_hex'))}  ({text_field(row.get('lo_dec'))})",
            f"[bold]upper[/bold]  {text_field(row.get('hi_hex'))}  ({text_field(row.get('hi_dec'))})",
        ]
        if "e_abs" in row:
            lines.append(f"e_abs <= {row['e_abs']}   e_rel <= {row['e_rel']}")
        if "approx" in row:
            lines.append(f"approx {row['approx']}")
        self.console.print(
            Panel(
                "\n".join(lines),
                title=f"[bold cyan]{title}[/bold cyan]",
                border_style="cyan",
                box=box.ASCII,
            )
        )

    def show_error_report(self, fields: Mapping[str, object]):
        """Display the accuracy figures of one interval or probability"""
        table = Table(title="Accuracy", box=box.ASCII2)
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        for key, value in fields.items():
            table.add_row(key, text_field(value))
        self.console.print(table)

    def show_config(self, config: Mapping[str, object]):
        """Display the resolved run configuration"""
        summary = ", ".join(f"{key}={text_field(value)}" for key, value in config.items())
        self.console.print(f"[dim]{summary}[/dim]")

    def show_oracle(self, rows: Iterable[Dict[str, object]]):
        """Display exact oracle values"""
        table = Table(title="Exact values", box=box.ASCII2)
        table.add_column("t", justify="right", style="cyan")
        table.add_column("probability", style="green")
        table.add_column("decimal")
        for row in rows:
            table.add_row(text_field(row["t"]), text_field(row["exact"]), text_field(row["decimal"]))
        self.console.print(table)

    def show_error(self, error: str):
        """Display a one-line diagnostic on standard error"""
        self.stderr.print(f"[bold red]error:[/bold red] {escape(error)}", highlight=False)

    def show_info(self, message: str):
        """Display info message"""
        self.stderr.print(f"[dim cyan]{message}[/dim cyan]")

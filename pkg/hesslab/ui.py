# hesslab/ui.py
import logging
from typing import Any, Dict

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from hesslab.errors import AdmissibilityError, HessLabError, LiftOrderError

console = Console()


def setup_logging(level: str = "WARNING"):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=False, show_path=False)],
        force=True,
    )


def banner(title: str):
    console.rule(f"[bold green]{title}[/]")

def print_info(msg: str):
    console.print(f"[cyan]ℹ[/] {msg}")

def print_success(msg: str):
    console.print(f"[green]✔[/] {msg}")

def print_warn(msg: str):
    console.print(f"[yellow]⚠[/] {msg}")

def print_error(msg: str):
    console.print(Panel.fit(Text(msg, style="bold red"), title="Error", border_style="red"))

def print_criterion(line: str, passed: bool):
    style = "bold green" if passed else "bold red"
    console.print(Text(line, style=style))


def error_to_str(err: Exception) -> str:
    """
    Short console message for library and validation errors.
    Adds the detail / iteration context when the error carries it.
    """
    if isinstance(err, ValidationError):
        parts = []
        for e in err.errors():
            loc = ".".join(str(x) for x in e.get("loc", ())) or "config"
            parts.append(f"{loc}: {e.get('msg', 'invalid')}")
        return "\n".join(parts)
    msg = str(err).strip() or err.__class__.__name__
    if isinstance(err, AdmissibilityError):
        msg += f"\nIteration: {err.iteration}, violations: {err.violations}"
        if err.residual_history:
            msg += f", last residual: {err.residual_history[-1]:.3e}"
    if isinstance(err, LiftOrderError):
        msg += f"\nLift: {err.lift:.3e}, drop: {err.drop:.3e}"
    if isinstance(err, HessLabError) and err.detail:
        msg += f"\nDetail: {err.detail}"
    return msg


def kv_table(title: str, rows: Dict[str, Any]) -> Table:
    t = Table(title=title, show_lines=False, header_style="bold magenta")
    t.add_column("Key", style="cyan", no_wrap=True)
    t.add_column("Value", style="white")
    for k, v in rows.items():
        t.add_row(str(k), str(v))
    return t

def simple_table(title: str, columns, data):
    t = Table(title=title, show_lines=False, header_style="bold magenta")
    for c in columns:
        t.add_column(c)
    for row in data:
        t.add_row(*[str(row.get(c, "")) for c in columns])
    return t

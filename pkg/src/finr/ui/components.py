# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Reusable Rich components for the finr CLI."""

from typing import Optional

from rich import box
from rich.align import Align
from rich.console import Console, Group
from rich.panel import Panel
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.status import Status
from rich.table import Table
from rich.text import Text

from finr.tasks.metrics import MetricReport

from .theme import style


console = Console()


def _compute_width(padding: int = 4) -> int:
    """Return a width that keeps layouts readable in narrow terminals."""
    try:
        width = console.size.width
    except Exception:
        width = 80
    return max(40, min(width - padding, 78))


def render_card(
    title: Optional[str],
    body: str,
    footer: Optional[str] = None,
    border_style: Optional[str] = None,
) -> Panel:
    """Render a generic informational card."""
    text_parts = [Text(line, style=style("text_primary")) for line in body.splitlines()]
    group = Group(*text_parts) if text_parts else Text("", style=style("text_primary"))

    panel = Panel(
        Align.left(group),
        title=Text(title, style=f"bold {style('accent')}") if title else None,
        title_align="left",
        border_style=border_style or style("border"),
        box=box.ROUNDED,
        padding=(1, 2),
        width=_compute_width(),
    )
    console.print(panel)

    if footer:
        console.print(Align.left(Text(footer, style=style("text_muted")), width=_compute_width()))

    console.print()
    return panel


def render_status(
    message: str,
    level: str = "info",
    footer: Optional[str] = None,
) -> Text:
    """Render a status line with semantic coloring."""
    icons = {
        "success": "✔",
        "warning": "!",
        "error": "✖",
        "info": "•",
    }
    styles = {
        "success": style("success"),
        "warning": style("warning"),
        "error": style("error"),
        "info": style("accent_alt"),
    }

    icon = icons.get(level, icons["info"])
    status_text = Text(f"{icon} {message}", style=styles.get(level, styles["info"]))
    console.print(status_text)

    if footer:
        console.print(Text(footer, style=style("text_muted")))

    return status_text


def render_table(title: str, columns: list[str], rows: list[list[str]]) -> Table:
    """Render a compact results table."""
    table = Table(title=title, box=box.SIMPLE_HEAD, title_style=f"bold {style('accent')}")
    for column in columns:
        table.add_column(column, style=style("text_primary"))
    for row in rows:
        table.add_row(*row)
    console.print(table)
    return table


def format_report(report: MetricReport) -> str:
    parts = [f"loss {report.loss:.3e}"]
    for name in ("psnr", "ssim", "iou", "mse"):
        value = getattr(report, name)
        if value is not None:
            parts.append(f"{name} {value:.4g}")
    return " · ".join(parts)


class Spinner:
    """Context manager that shows a transient spinner with themed styling."""

    def __init__(self, message: str, *, spinner: str = "dots"):
        self.message = message
        self.spinner = spinner
        self._status: Status | None = None

    def __enter__(self):
        self._status = console.status(
            f"[bold {style('accent_alt')}] {self.message}",
            spinner=self.spinner,
            spinner_style=style("accent"),
        )
        return self._status.__enter__()

    def __exit__(self, exc_type, exc_val, exc_tb):
        assert self._status is not None
        return self._status.__exit__(exc_type, exc_val, exc_tb)


class TrainingProgress:
    """Themed progress bar for a training loop with the latest report inline."""

    def __init__(self, label: str, total: int, start: int = 0):
        self.progress = Progress(
            TextColumn(f"[bold {style('accent_alt')}]{label}"),
            BarColumn(complete_style=style("accent"), finished_style=style("success")),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            TextColumn("{task.fields[latest]}", style=style("text_muted"), markup=False),
            console=console,
            transient=False,
        )
        self.task = self.progress.add_task(label, total=total, completed=start, latest="")

    def __enter__(self):
        self.progress.__enter__()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        return self.progress.__exit__(exc_type, exc_val, exc_tb)

    def advance(self, step: int) -> None:
        self.progress.update(self.task, completed=step)

    def report(self, report: MetricReport) -> None:
        self.progress.update(self.task, latest=format_report(report))

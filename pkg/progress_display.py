"""
Progress visualization for experiment runs
Live step table while repetitions run, then a summary table of the aggregated report
"""

import time
from typing import List, Optional

from rich.align import Align
from rich.console import Console, Group
from rich.live import Live
from rich.panel import Panel
from rich.table import Table

console = Console()


class ExperimentProgressTracker:
    """Step table plus repetition counter"""

    def __init__(self, repetitions: int):
        self.steps = [
            {"id": "configure", "name": "Validating Configuration", "status": "pending"},
            {"id": "simulate", "name": "Running Repetitions", "status": "pending"},
            {"id": "aggregate", "name": "Aggregating Results", "status": "pending"},
            {"id": "write", "name": "Writing Outputs", "status": "pending"},
        ]
        self.details = {}
        self.repetitions = repetitions
        self.completed_repetitions = 0
        self.start_time = time.time()

    def update_step_status(self, step_id: str, status: str, details: str = ""):
        for step in self.steps:
            if step["id"] == step_id:
                step["status"] = status
                if details:
                    self.details[step_id] = details
                break

    def get_progress_table(self) -> Table:
        table = Table(title="Experiment Progress", show_header=False, box=None)

        for step in self.steps:
            if step["status"] == "completed":
                icon, style = "✅", "green"
            elif step["status"] == "running":
                icon, style = "⚡", "yellow"
            elif step["status"] == "error":
                icon, style = "❌", "red"
            else:
                icon, style = "⏳", "dim"

            step_text = f"{icon} {step['name']}"
            if step["id"] in self.details:
                step_text += f"\n   [dim]{self.details[step['id']]}[/dim]"
            table.add_row(f"[{style}]{step_text}[/{style}]")

        return table

    def get_repetition_bar(self) -> str:
        done, total = self.completed_repetitions, self.repetitions
        filled = done * 20 // total if total else 20
        elapsed = time.time() - self.start_time
        return f"[bold cyan]Repetitions:[/bold cyan] [{'█' * filled}{'░' * (20 - filled)}] {done}/{total}  [dim]{elapsed:.1f}s[/dim]"

    def render(self) -> Group:
        return Group(self.get_progress_table(), self.get_repetition_bar())


class ExperimentProgress:
    """Live display driven by the CLI pipeline"""

    def __init__(self, repetitions: int, enabled: bool = True):
        self.tracker = ExperimentProgressTracker(repetitions)
        self.enabled = enabled
        self.live: Optional[Live] = None

    def start(self):
        if self.enabled:
            self.live = Live(self.tracker.render(), refresh_per_second=4, console=console)
            self.live.start()

    def stop(self):
        if self.live:
            self.live.update(self.tracker.render())
            self.live.stop()
            self.live = None

    def _refresh(self):
        if self.live:
            self.live.update(self.tracker.render())

    def step(self, step_id: str, status: str, details: str = ""):
        self.tracker.update_step_status(step_id, status, details)
        self._refresh()

    def repetition_done(self, _result=None):
        self.tracker.completed_repetitions += 1
        self._refresh()


def create_summary_display(report) -> Table:
    """Aggregate means per mode and node, with attack and hiding figures"""
    table = Table(title=f"📊 {report.scenario.value}, {report.config.repetitions} repetitions")
    table.add_column("mode")
    table.add_column("node")
    for column in ("frames out", "frames in", "bytes out", "bytes in"):
        table.add_column(column, justify="right")

    for aggregate in report.aggregate:
        for name, means in aggregate.nodes.items():
            table.add_row(
                aggregate.mode,
                name,
                f"{means.frames_out:g}",
                f"{means.frames_in:g}",
                f"{means.bytes_out:g}",
                f"{means.bytes_in:g}",
            )

    console.print(table)

    lines: List[str] = []
    for aggregate in report.aggregate:
        line = (
            f"[bold]{aggregate.mode}[/bold]: total frames {aggregate.total_frames:g}, "
            f"key exchanges {aggregate.key_exchanges:g}, "
            f"correct resolution {aggregate.correct_resolution_rate:.2f}"
        )
        if aggregate.attack_success_rate is not None:
            line += f", attack success [bold magenta]{aggregate.attack_success_rate:.2f}[/bold magenta]"
        if aggregate.hashed_ns_checked:
            line += f", hiding violations {aggregate.hiding_violations}/{aggregate.hashed_ns_checked}"
        if aggregate.hashed_na_checked:
            line += f", unverified answers {aggregate.response_violations}/{aggregate.hashed_na_checked}"
        lines.append(line)

    if report.ratios:
        frames_ratio = report.ratios["total"]["frames"]
        lines.append(f"[cyan]proposal/baseline total frames:[/cyan] {frames_ratio:g}" if frames_ratio else "")
        for name, ratios in report.ratios.items():
            if name != "total" and ratios.get("frames_out") is not None:
                lines.append(f"[cyan]{name} frames_out ratio:[/cyan] {ratios['frames_out']:g}")

    for note in report.notes:
        lines.append(f"[yellow]ℹ️  {note}[/yellow]")

    console.print(Panel("\n".join(line for line in lines if line), title="Summary", border_style="bright_blue"))
    return table


def create_trace_display(sim, limit: int = 50):
    """Verbose view of the first repetition's deliveries"""
    table = Table(title="Event trace (first repetition)")
    for column in ("tick", "src_ip", "dst_ip", "type", "code", "size", "to"):
        table.add_column(column)
    for record in sim.trace[:limit]:
        table.add_row(
            str(record.tick), str(record.src_ip), str(record.dst_ip),
            str(record.type), str(record.code), str(record.size), record.recipient,
        )
    if len(sim.trace) > limit:
        table.caption = f"{len(sim.trace) - limit} more deliveries not shown"
    console.print(table)


def create_error_display(error_message: str):
    error_panel = Panel(
        f"[bold red]❌ Experiment failed[/bold red]\n\n"
        f"[yellow]Error Details:[/yellow]\n"
        f"{error_message}\n\n"
        f"[cyan]💡 Troubleshooting Tips:[/cyan]\n"
        f"1. Check flag values with --help\n"
        f"2. Attack scenarios need --nodes 3 or more\n"
        f"3. --latency takes <node>=<ticks> with node names alice, bob, ... intruder\n"
        f"4. Make sure the output directory is writable",
        title="⚠️  ERROR",
        border_style="bright_red",
    )
    console.print(Align.center(error_panel))


__all__ = ["ExperimentProgress", "create_summary_display", "create_trace_display", "create_error_display"]

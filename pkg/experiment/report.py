"""
Report and trace writers
JSON holds the full nested report; CSV holds one row per run plus one aggregate row per mode
"""

import csv
import io
from statistics import fmean
from typing import Dict, List, Optional, Union

import aiofiles

from experiment.config import ReportFormat
from experiment.runner import ExperimentReport, RunResult
from sim.netsim import NetSim
from utils.errors import ReportWriteError
from utils.file_utils import ensure_parent_dir

TRACE_COLUMNS = ["tick", "src_ip", "dst_ip", "type", "code", "size"]
RUN_COLUMNS = [
    "total_frames",
    "key_exchanges",
    "resolved",
    "correct",
    "attack_succeeded",
    "forged_frames_sent",
    "hiding_violations",
    "response_violations",
]
METRICS = ("frames_out", "frames_in", "bytes_out", "bytes_in")

Cell = Union[int, float, str]


async def _write_text(path: str, text: str):
    ensure_parent_dir(path)
    try:
        async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
            await f.write(text)
    except OSError as e:
        raise ReportWriteError(f"Cannot write {path}: {e}")


def csv_columns(report: ExperimentReport) -> List[str]:
    node_names = list(report.repetitions[0].runs[0].counters.nodes)
    per_node = [f"{name}_{metric}" for name in node_names for metric in METRICS]
    return ["row_type", "repetition", "seed", "mode"] + per_node + RUN_COLUMNS


def _run_row(index: int, seed: int, run: RunResult) -> Dict[str, Cell]:
    row: Dict[str, Cell] = {"row_type": "repetition", "repetition": index, "seed": seed, "mode": run.mode}
    for name, counters in run.counters.nodes.items():
        for metric in METRICS:
            row[f"{name}_{metric}"] = getattr(counters, metric)
    row.update(
        total_frames=run.counters.total_frames,
        key_exchanges=run.key_exchanges,
        resolved=int(run.resolution.status == "resolved"),
        correct=int(run.resolution.correct),
        attack_succeeded=int(run.attack.succeeded) if run.attack else "",
        forged_frames_sent=run.attack.forged_frames_sent if run.attack else "",
        hiding_violations=run.hiding_violations,
        response_violations=run.response_violations,
    )
    return row


def _mean_row(mode: str, rows: List[Dict[str, Cell]], columns: List[str]) -> Dict[str, Cell]:
    aggregate: Dict[str, Cell] = {"row_type": "aggregate", "repetition": "", "seed": "", "mode": mode}
    for column in columns[4:]:
        values = [row[column] for row in rows if row[column] != ""]
        aggregate[column] = fmean(values) if values else ""
    return aggregate


def report_to_csv(report: ExperimentReport) -> str:
    columns = csv_columns(report)
    rows: List[Dict[str, Cell]] = []
    by_mode: Dict[str, List[Dict[str, Cell]]] = {}

    for rep in report.repetitions:
        for run in rep.runs:
            row = _run_row(rep.index, rep.seed, run)
            rows.append(row)
            by_mode.setdefault(run.mode, []).append(row)

    for mode, mode_rows in by_mode.items():
        rows.append(_mean_row(mode, mode_rows, columns))

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def report_to_json(report: ExperimentReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


async def emit_report(report: ExperimentReport, format: ReportFormat, path: str):
    if not report.repetitions:
        raise ReportWriteError("Refusing to write a report with no repetitions")
    text = report_to_json(report) if ReportFormat(format) == ReportFormat.JSON else report_to_csv(report)
    await _write_text(path, text)


async def load_report(path: str) -> ExperimentReport:
    async with aiofiles.open(path, "r", encoding="utf-8") as f:
        return ExperimentReport.model_validate_json(await f.read())


def trace_to_csv(sim: NetSim) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for record in sim.trace:
        writer.writerow([record.tick, record.src_ip, record.dst_ip, record.type, record.code, record.size])
    return buffer.getvalue()


async def write_trace(sim: NetSim, path: str):
    """One line per delivery: tick, src_ip, dst_ip, type, code, size"""
    await _write_text(path, trace_to_csv(sim))


def write_pcap(sim: NetSim, path: str) -> Optional[str]:
    ensure_parent_dir(path)
    try:
        sim.write_pcap(path)
    except OSError as e:
        raise ReportWriteError(f"Cannot write {path}: {e}")
    return path

"""Rendering of run reports as failure-injection tables.

Column layout mirrors the experiment record: test number, workflow,
injected error type and detail, average registration residual,
the operation the fault corresponds to, and the step at which the
workflow rejected the run.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from .scenario import FaultKind, RunReport

HEADERS = (
    "Test #",
    "Workflow",
    "Injected Error Type",
    "Injected Error",
    "Ave. Registration Residual",
    "Corresponding to Operation",
    "Step of Rejection (at State)",
)

_KIND_LABELS = {
    FaultKind.MISSING_LANDMARK_PLAN: "Missing Landmark Plan",
    FaultKind.MISSING_LANDMARK: "Missing a Landmark",
    FaultKind.LARGE_DIGITIZATION_ERROR: "Large Digitization Error",
}


def _error_detail(report: RunReport, landmark_total: int) -> str:
    fault = report.fault
    if fault is None:
        return "None"
    if fault.kind is FaultKind.MISSING_LANDMARK_PLAN:
        return "Missing Landmark Plan"
    if fault.kind is FaultKind.MISSING_LANDMARK:
        return f"Missing Landmark #{fault.landmark}/{landmark_total}"
    return f"Landmark #{fault.landmark}/{landmark_total} {fault.axis} {fault.offset_mm:g}mm"


def report_rows(reports: Sequence[RunReport]) -> list[tuple[str, ...]]:
    rows = []
    for index, report in enumerate(reports, start=1):
        total = 6 if report.scenario == "TMS" else 4
        fault = report.fault
        residual = f"{report.avg_residual:.4f} mm" if report.avg_residual is not None else "N/A"
        rows.append(
            (
                str(index),
                report.scenario,
                _KIND_LABELS[fault.kind] if fault else "None",
                _error_detail(report, total),
                residual,
                report.rejected_operation or "N/A",
                report.rejection_label or "N/A",
            )
        )
    return rows


def render_csv(reports: Sequence[RunReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HEADERS)
    writer.writerows(report_rows(reports))
    return buffer.getvalue()


def render_text(reports: Sequence[RunReport]) -> str:
    rows = [HEADERS, *report_rows(reports)]
    widths = [max(len(row[i]) for row in rows) for i in range(len(HEADERS))]
    lines = []
    for n, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_jsonl(reports: Sequence[RunReport]) -> str:
    return "".join(report.to_json() + "\n" for report in reports)


def render(reports: Sequence[RunReport], fmt: str = "text") -> str:
    if fmt == "csv":
        return render_csv(reports)
    if fmt == "text":
        return render_text(reports)
    if fmt == "jsonl":
        return render_jsonl(reports)
    raise ValueError(f"unknown format {fmt!r} (expected csv, text or jsonl)")

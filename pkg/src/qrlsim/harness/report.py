"""CSV / JSON result emission."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

COLUMNS = (
    "cycle_index",
    "variant",
    "reward_kind",
    "reward_value",
    "branch_bits",
    "branch_probability",
    "noisy",
    "seed",
)


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in report.rows:
        w.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def to_json(report: Report) -> str:
    rows = [{c: row[c] for c in COLUMNS} for row in report.rows]
    return json.dumps({"metadata": report.metadata, "rows": rows}, sort_keys=True, indent=2) + "\n"


def render(report: Report, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(report)
    if fmt == "json":
        return to_json(report)
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report: Report, fmt: str, path: str | Path | None) -> str:
    """Write ``report`` to ``path`` (stdout text is returned when ``path`` is None)."""
    text = render(report, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_json(path: str | Path) -> Report:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Report(doc["rows"], doc["metadata"])

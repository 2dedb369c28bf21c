"""JSON, JSON Lines and CSV writers for reports and experiment tables."""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .bounds import BoundReport, _jsonable

REPORT_COLUMNS = ("name", "n", "i", "widths", "measured", "se", "bound", "passed", "seed")


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dump_json(obj: dict, path: str | Path | None, with_timestamp: bool = True) -> str:
    payload = dict(obj)
    if with_timestamp:
        payload = {"generated_at": timestamp(), **payload}
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    _emit(text, path)
    return text


def reports_jsonl(reports: Iterable[BoundReport], with_timestamp: bool = True) -> str:
    lines = []
    if with_timestamp:
        lines.append(json.dumps({"generated_at": timestamp()}))
    lines.extend(json.dumps(r.to_dict(), sort_keys=True) for r in reports)
    return "\n".join(lines) + "\n"


def reports_csv(reports: Iterable[BoundReport], with_timestamp: bool = True) -> str:
    buf = io.StringIO()
    if with_timestamp:
        buf.write(f"# generated_at={timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        m = r.metadata
        widths = m.get("widths")
        w.writerow(
            [
                r.name,
                m.get("n", ""),
                m.get("i", len(widths) - 1 if widths else ""),
                "x".join(str(k) for k in widths) if widths else "",
                repr(r.measured),
                repr(r.std_error),
                repr(r.bound),
                int(bool(r.passed)),
                m.get("base_seed", m.get("seed", "")),
            ]
        )
    return buf.getvalue()


def table_csv(columns: Sequence[str], rows: Iterable[Sequence], with_timestamp: bool = True) -> str:
    buf = io.StringIO()
    if with_timestamp:
        buf.write(f"# generated_at={timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(text: str, path: str | Path | None) -> None:
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def write_text(text: str, path: str | Path | None) -> None:
    _emit(text, path)

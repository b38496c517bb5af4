"""Long-format table output: CSV with a metadata comment line, or JSON."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

FORMATS = ("csv", "json")
META_PREFIX = "# meta: "


def format_value(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _parse_value(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def render(columns, rows, meta: dict, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(META_PREFIX + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()
    if fmt == "json":
        records = [dict(zip(columns, row)) for row in rows]
        for rec in records:
            for k, v in rec.items():
                if isinstance(v, float) and not math.isfinite(v):
                    rec[k] = None
        return json.dumps({"meta": meta, "columns": list(columns), "rows": records},
                          sort_keys=False, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def write_table(path, columns, rows, meta: dict, fmt: str = "csv") -> None:
    """Write to ``path``; ``None`` or ``"-"`` means stdout."""
    text = render(columns, list(rows), meta, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_table(path) -> tuple[dict, list[str], list[tuple]]:
    """Inverse of :func:`write_table`; the format is taken from the content."""
    text = Path(path).read_text()
    if text.startswith("{"):
        doc = json.loads(text)
        cols = doc["columns"]
        return doc["meta"], cols, [tuple(r[c] for c in cols) for r in doc["rows"]]
    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith(META_PREFIX):
        meta = json.loads(lines[0][len(META_PREFIX):])
        lines = lines[1:]
    reader = csv.reader(lines)
    cols = next(reader)
    return meta, cols, [tuple(_parse_value(v) for v in row) for row in reader]

"""Report and comparison-table emission (CSV / JSON) and reading reports back."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, fields

from .experiment import Aggregate, ComparisonRow, ComparisonTable, Report, Row, aggregate_rows

CSV_HEADER = ("scenario", "controller", "seed", "qoe", "startup_s", "rebuffer_s",
              "mean_bitrate_kbps", "switches", "forecast_mae_kbps", "complete")
TABLE_HEADER = tuple(f.name for f in fields(ComparisonRow))


class ReportIOError(OSError):
    pass


class ReportFormatError(ValueError):
    pass


def report_to_dict(report: Report) -> dict:
    return {
        "aggregates": [asdict(a) for a in report.aggregates],
        "config": dict(report.config),
        "rows": [asdict(r) for r in report.rows],
        "version": report.version,
    }


def report_from_dict(d: dict) -> Report:
    try:
        return Report(
            tuple(Row(**r) for r in d["rows"]),
            tuple(Aggregate(**a) for a in d["aggregates"]),
            dict(d["config"]),
            d["version"],
        )
    except (KeyError, TypeError) as exc:
        raise ReportFormatError(f"not a report: {exc}") from None


def table_to_dict(table: ComparisonTable) -> dict:
    return {"baseline": table.baseline, "proposed": table.proposed,
            "rows": [asdict(r) for r in table.rows]}


def dumps_json(obj) -> str:
    d = report_to_dict(obj) if isinstance(obj, Report) else table_to_dict(obj)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def dumps_csv(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, Report):
        w.writerow(CSV_HEADER)
        for r in obj.rows:
            w.writerow([_cell(getattr(r, k)) for k in CSV_HEADER])
    else:
        w.writerow(TABLE_HEADER)
        for r in obj.rows:
            w.writerow([_cell(getattr(r, k)) for k in TABLE_HEADER])
    return buf.getvalue()


def emit(obj, fmt: str, path) -> None:
    """Write a Report or ComparisonTable as ``csv`` or ``json`` to ``path``."""
    if fmt == "json":
        text = dumps_json(obj)
    elif fmt == "csv":
        text = dumps_csv(obj)
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def parse_csv_report(text: str) -> Report:
    """Rebuild a Report (rows plus recomputed aggregates) from CSV rows."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader, ()))
    if header != CSV_HEADER:
        raise ReportFormatError(f"unexpected CSV header {header}")
    rows = []
    for lineno, rec in enumerate(reader, 2):
        if not rec:
            continue
        try:
            d = dict(zip(CSV_HEADER, rec, strict=True))
            rows.append(Row(
                d["scenario"], d["controller"], int(d["seed"]), float(d["qoe"]),
                float(d["startup_s"]), float(d["rebuffer_s"]), float(d["mean_bitrate_kbps"]),
                int(d["switches"]),
                float(d["forecast_mae_kbps"]) if d["forecast_mae_kbps"] else None,
                d["complete"] == "true",
            ))
        except ValueError as exc:
            raise ReportFormatError(f"line {lineno}: {exc}") from None
    return Report(tuple(rows), aggregate_rows(rows), {}, "")


def parse_report(text: str) -> Report:
    if text.lstrip().startswith("{"):
        try:
            return report_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ReportFormatError(f"bad JSON: {exc}") from None
    return parse_csv_report(text)


def load_report(path) -> Report:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_report(text)

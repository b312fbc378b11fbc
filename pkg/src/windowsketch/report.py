"""Benchmark reports and their JSON / CSV serializations.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from windowsketch.errors import ConfigurationError, ReportError

CSV_FIELDS = ["step", "ts", "relative_error", "sketch_rows"]


@dataclass
class QueryRecord:
    step: int
    ts: int
    relative_error: float
    # d-dimensional rows held by the sketch when it was queried
    sketch_rows: int


@dataclass
class Aggregates:
    max_sketch_rows: int
    avg_relative_error: float
    max_relative_error: float
    # Seconds; None when timing was disabled
    mean_update_time: Optional[float] = None
    mean_query_time: Optional[float] = None

    @classmethod
    def from_records(
        cls,
        records: List[QueryRecord],
        max_sketch_rows: int,
        mean_update_time: Optional[float] = None,
        mean_query_time: Optional[float] = None,
    ) -> Optional["Aggregates"]:
        if not records:
            return None
        errors = [record.relative_error for record in records]
        return cls(
            max_sketch_rows=max_sketch_rows,
            avg_relative_error=sum(errors) / len(errors),
            max_relative_error=max(errors),
            mean_update_time=mean_update_time,
            mean_query_time=mean_query_time,
        )


@dataclass
class StreamStats:
    rows: int = 0
    # Largest over smallest non-zero squared row norm seen
    norm_ratio: Optional[float] = None


@dataclass
class Report:
    config: Dict[str, Any]
    records: List[QueryRecord] = field(default_factory=list)
    aggregates: Optional[Aggregates] = None
    coverage_incomplete: bool = False
    stream: StreamStats = field(default_factory=StreamStats)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "records": [asdict(record) for record in self.records],
            "aggregates": None if self.aggregates is None else asdict(self.aggregates),
            "coverage_incomplete": self.coverage_incomplete,
            "stream": asdict(self.stream),
        }

    def summary(self) -> Dict[str, str]:
        values = {
            "queries": str(len(self.records)),
            "rows replayed": str(self.stream.rows),
        }
        if self.aggregates is not None:
            values["max sketch rows"] = str(self.aggregates.max_sketch_rows)
            values["avg relative error"] = f"{self.aggregates.avg_relative_error:.6g}"
            values["max relative error"] = f"{self.aggregates.max_relative_error:.6g}"
            if self.aggregates.mean_update_time is not None:
                values["mean update time"] = (
                    f"{self.aggregates.mean_update_time * 1e6:.1f} us"
                )
            if self.aggregates.mean_query_time is not None:
                values["mean query time"] = (
                    f"{self.aggregates.mean_query_time * 1e3:.3f} ms"
                )
        if self.coverage_incomplete:
            values["coverage incomplete"] = "yes"
        return values


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def render_csv(report: Report) -> str:
    """One row per query, a blank line, then ``metric,value`` aggregate lines."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for record in report.records:
        writer.writerow(
            [
                record.step,
                record.ts,
                _format_value(record.relative_error),
                record.sketch_rows,
            ]
        )
    writer.writerow([])
    writer.writerow(["metric", "value"])
    aggregates = {} if report.aggregates is None else asdict(report.aggregates)
    for name in [
        "max_sketch_rows",
        "avg_relative_error",
        "max_relative_error",
        "mean_update_time",
        "mean_query_time",
    ]:
        writer.writerow([name, _format_value(aggregates.get(name))])
    writer.writerow(["coverage_incomplete", str(report.coverage_incomplete).lower()])
    writer.writerow(["rows", report.stream.rows])
    writer.writerow(["norm_ratio", _format_value(report.stream.norm_ratio)])
    return buffer.getvalue()


def emit_report(report: Report, path: Path, fmt: str = "json") -> None:
    if fmt == "json":
        text = render_json(report)
    elif fmt == "csv":
        text = render_csv(report)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r}")

    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportError(f"could not write {path}: {e}") from e

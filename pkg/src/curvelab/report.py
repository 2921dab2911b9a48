"""Experiment reports and their file renderings.

A report body (rows, checks, series) is a pure function of the config, so
it is written separately from the provenance block that carries wall time
and timestamps.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml


@dataclass
class Check:
    name: str
    inequality: str
    slack: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.inequality}; slack={self.slack:.6g} (tol {self.tolerance:g}) {self.detail}".rstrip()


def check_ge(name: str, inequality: str, slack: float, tolerance: float = 0.0, detail: str = "") -> Check:
    """Passes when ``slack >= -tolerance``."""
    slack = float(slack)
    ok = bool(np.isfinite(slack) and slack >= -tolerance)
    return Check(name, inequality, slack, tolerance, ok, detail)


@dataclass
class ExperimentReport:
    experiment: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def body(self) -> dict:
        return _clean({
            "experiment": self.experiment,
            "passed": self.passed,
            "summary": self.summary,
            "rows": self.rows,
            "checks": [asdict(c) for c in self.checks],
            "series": self.series,
        })


def _clean(obj):
    """Plain builtins for serialization; complex numbers become [re, im]."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _row_columns(rows: list) -> list:
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def render_table(rows: list, columns: list | None = None) -> str:
    """Fixed-width text table for terminals."""
    if not rows:
        return "(no rows)\n"
    columns = columns or _row_columns(rows)

    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return "" if v is None else str(v)

    cells = [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def render_text(report: ExperimentReport) -> str:
    out = [f"experiment: {report.experiment}", ""]
    out.append(render_table(_clean(report.rows)))
    out += [c.line() for c in report.checks]
    out.append("")
    out.append(f"{'PASS' if report.passed else 'FAIL'}: {sum(c.passed for c in report.checks)}/{len(report.checks)} checks")
    return "\n".join(out) + "\n"


def _write_csv(path: Path, rows: list) -> None:
    rows = _clean(rows)
    cols = _row_columns(rows)
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})


def emit_report(report: ExperimentReport, out_dir, formats=("yaml", "csv", "plot")) -> list[Path]:
    """Write the report into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create report directory {out}: {e.strerror}") from e
    written = []
    body = report.body()
    if "yaml" in formats:
        p = out / "report.yaml"
        p.write_text(yaml.safe_dump(body, sort_keys=False))
        written.append(p)
    if "json" in formats:
        p = out / "report.json"
        p.write_text(json.dumps(body, indent=2) + "\n")
        written.append(p)
    if "csv" in formats:
        p = out / "rows.csv"
        _write_csv(p, report.rows)
        written.append(p)
        p = out / "checks.csv"
        _write_csv(p, [asdict(c) for c in report.checks])
        written.append(p)
    if "plot" in formats:
        for name, s in sorted(report.series.items()):
            p = out / f"plot_{name}.dat"
            lines = [f"# {s.get('x_label', 'x')} {s.get('y_label', 'y')}"]
            lines += [f"{x!r} {y!r}" for x, y in zip(s["x"], s["y"])]
            p.write_text("\n".join(lines) + "\n")
            written.append(p)
    p = out / "report.txt"
    p.write_text(render_text(report))
    written.append(p)
    p = out / "provenance.yaml"
    p.write_text(yaml.safe_dump(_clean(report.provenance), sort_keys=False))
    written.append(p)
    return written

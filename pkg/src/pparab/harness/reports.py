"""CSV reports with deterministic bodies.

Metadata (timestamps, config hash) lives in `#` comment lines before the
header row; the body below the header is a pure function of config and seed,
so reruns diff clean.
"""

import datetime
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np


def _plain(v):
    """Collapse numpy scalars so repr() stays a parseable literal."""
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class ExperimentReport:
    command: str
    columns: Sequence[str]
    rows: List[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} entries for {len(self.columns)} columns"
            )
        self.rows.append(tuple(_plain(v) for v in values))

    def column(self, name: str):
        i = list(self.columns).index(name)
        return [row[i] for row in self.rows]


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(report: ExperimentReport, path: Path) -> Path:
    path = Path(path)
    lines = [f"# command={report.command}"]
    for key in sorted(report.meta):
        lines.append(f"# {key}={report.meta[key]}")
    lines.append(f"# generated={datetime.datetime.now(datetime.timezone.utc).isoformat()}")
    lines.append(",".join(report.columns))
    for row in report.rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_report_rows(path: Path):
    """(columns, rows) from a report file, comment lines skipped."""
    columns = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if columns is None:
            columns = line.split(",")
            continue
        cells = []
        for tok in line.split(","):
            try:
                cells.append(float(tok))
            except ValueError:
                cells.append(tok)
        rows.append(tuple(cells))
    return columns or [], rows


def write_manifest(outdir: Path, names: Sequence[str]) -> Path:
    """Sorted list of the files a command produced."""
    path = Path(outdir) / "manifest.txt"
    path.write_text("\n".join(sorted(names)) + "\n")
    return path

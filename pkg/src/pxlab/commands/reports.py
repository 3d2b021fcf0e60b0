"""
Deterministic experiment output.

Every command collects one JSON summary and any number of tables; all
writing goes through a single ReportCollector. JSON keys are sorted and
floats keep their shortest round-trip repr, so equal runs give byte-identical
files.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..utils.console import log_message


def to_plain(value: Any) -> Any:
    """Convert numpy scalars and arrays to builtins; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def dumps(data: dict) -> str:
    return json.dumps(to_plain(data), indent=2, sort_keys=True, allow_nan=False)


class ReportCollector:
    """
    Collects a command's summary and tables and writes them under ``out``.

    Files are ``<command>.json`` (always) and ``<command>_<table>.csv`` when
    the format is csv or both. With json or both the tables are also
    embedded in the summary.
    """

    def __init__(self, command: str, out: str, fmt: str, seed: int):
        self.command = command
        self.out = Path(out)
        self.fmt = fmt
        self.summary: Dict[str, Any] = {"command": command, "seed": seed}
        self.tables: Dict[str, List[Dict[str, Any]]] = {}
        self.columns: Dict[str, Sequence[str]] = {}

    def update(self, **entries: Any) -> None:
        self.summary.update(entries)

    def add_table(self, name: str, rows: List[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> None:
        self.tables[name] = rows
        self.columns[name] = list(columns) if columns else (list(rows[0]) if rows else [])

    def document(self) -> dict:
        data = dict(self.summary)
        if self.fmt in ("json", "both"):
            data["tables"] = self.tables
        return data

    def write(self) -> List[Path]:
        """Write every collected file and return their paths."""
        self.out.mkdir(parents=True, exist_ok=True)
        written = []

        summary_path = self.out / f"{self.command}.json"
        summary_path.write_text(dumps(self.document()) + "\n", encoding="utf-8")
        written.append(summary_path)

        if self.fmt in ("csv", "both"):
            for name, rows in self.tables.items():
                path = self.out / f"{self.command}_{name}.csv"
                with path.open("w", newline="", encoding="utf-8") as handle:
                    writer = csv.DictWriter(handle, fieldnames=self.columns[name], lineterminator="\n")
                    writer.writeheader()
                    for row in rows:
                        writer.writerow({k: _cell(v) for k, v in row.items()})
                written.append(path)

        for path in written:
            log_message(f"wrote {path}")
        return written


def _cell(value: Any) -> Any:
    plain = to_plain(value)
    if isinstance(plain, list):
        return " ".join(str(v) for v in plain)
    if plain is None:
        return ""
    return plain

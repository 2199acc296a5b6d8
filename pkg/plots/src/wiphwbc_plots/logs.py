"""Reader for the versioned CSV logs written by the simulator CLI.

Log files start with an optional comment line ``# schema: <name>`` followed
by a CSV header row and data rows. Columns are numeric unless some entry
fails to parse as a float, in which case the whole column is kept as text
(the solver status column is the only such column in practice).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SIM_SCHEMA = "wiphwbc-sim-v1"
PLAN_SCHEMA = "wiphwbc-plan-v1"
KNOWN_SCHEMAS = (SIM_SCHEMA, PLAN_SCHEMA)


class LogError(ValueError):
    """Malformed or unusable log file."""


class MissingColumnError(LogError):
    """A required column is absent from the log."""

    def __init__(self, column: str, path: Path | str):
        self.column = column
        super().__init__(f"log {str(path)!r} has no column {column!r}")


@dataclass(frozen=True)
class LogTable:
    """Parsed log: per-column arrays keyed by header name."""

    path: Path
    schema: str | None
    names: tuple[str, ...]
    floats: dict[str, np.ndarray] = field(repr=False)
    strings: dict[str, list[str]] = field(repr=False)

    @property
    def n_rows(self) -> int:
        name = self.names[0]
        if name in self.floats:
            return self.floats[name].size
        return len(self.strings[name])

    def col(self, name: str) -> np.ndarray:
        """Numeric column by name. Raises MissingColumnError if absent."""
        if name not in self.floats:
            raise MissingColumnError(name, self.path)
        return self.floats[name]

    def text(self, name: str) -> list[str]:
        if name not in self.strings:
            raise MissingColumnError(name, self.path)
        return self.strings[name]

    def has(self, name: str) -> bool:
        return name in self.floats or name in self.strings

    def matching(self, prefix: str) -> list[str]:
        """Numeric columns named ``<prefix>1``, ``<prefix>2``, ... in order."""
        found = []
        k = 1
        while f"{prefix}{k}" in self.floats:
            found.append(f"{prefix}{k}")
            k += 1
        return found


def _parse_schema_line(line: str) -> str | None:
    body = line.lstrip("#").strip()
    if body.startswith("schema:"):
        return body.split(":", 1)[1].strip()
    return None


def read_log(path: Path | str) -> LogTable:
    """Read a CSV log, returning typed columns.

    Raises LogError for an empty table, a missing header, or a schema tag
    this reader does not understand. A file with no schema comment at all is
    accepted (hand-built tables are useful in tests downstream of us too).
    """
    path = Path(path)
    schema: str | None = None
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first:
            raise LogError(f"log {str(path)!r} is empty")
        if first.startswith("#"):
            schema = _parse_schema_line(first)
            if schema is None:
                raise LogError(f"log {str(path)!r} has an unrecognized comment header")
            if schema not in KNOWN_SCHEMAS:
                raise LogError(f"log {str(path)!r} has unknown schema {schema!r}")
            header_line = fh.readline()
        else:
            header_line = first
        if not header_line.strip():
            raise LogError(f"log {str(path)!r} has no header row")
        names = tuple(next(csv.reader([header_line])))
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise LogError(f"log {str(path)!r} has no data rows")
    for i, row in enumerate(rows):
        if len(row) != len(names):
            raise LogError(
                f"log {str(path)!r} row {i + 1} has {len(row)} fields, expected {len(names)}"
            )
    floats: dict[str, np.ndarray] = {}
    strings: dict[str, list[str]] = {}
    for j, name in enumerate(names):
        raw = [row[j] for row in rows]
        try:
            floats[name] = np.array([float(v) for v in raw])
        except ValueError:
            strings[name] = raw
    return LogTable(path=path, schema=schema, names=names, floats=floats, strings=strings)

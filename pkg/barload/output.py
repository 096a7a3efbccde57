"""Versioned CSV tables with an embedded config echo.

Layout::

    # barload-csv v1 kind=scan
    # timestamp: 2026-01-01T00:00:00+00:00
    # units: hbar=1; ...
    # seed: 0
    # config:
    # trap:
    #   omega: 1.0
    ...
    t_e,t_g,...
    0.5,1,...

The timestamp line is the only one that differs between reruns of a config.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import config
from .errors import SchemaVersionError

logger = logging.getLogger(__name__)

_SCHEMA_RE = re.compile(rf"^# {config.CSV_SCHEMA} v(\d+) kind=(\w+)$")
ECHO_MARKER = "# config:"


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def header_lines(kind: str, echo: str, seed: int, timestamp: str | None = None) -> list[str]:
    stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [
        f"# {config.CSV_SCHEMA} v{config.CSV_SCHEMA_VERSION} kind={kind}",
        f"# timestamp: {stamp}",
        f"# units: {config.UNITS_NOTE}",
        f"# seed: {seed}",
        ECHO_MARKER,
    ]
    lines.extend(f"# {line}" for line in echo.rstrip("\n").splitlines())
    return lines


class TableWriter:
    """Streams rows to disk, flushing each one so an interrupted run leaves a usable prefix."""

    def __init__(self, path: str | Path, kind: str, columns: Sequence[str], echo: str, seed: int, append: bool = False):
        self.path = Path(path)
        self.columns = list(columns)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open("a" if append else "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        if not append:
            for line in header_lines(kind, echo, seed):
                self._handle.write(line + "\n")
            self._writer.writerow(self.columns)
            self._handle.flush()

    def write(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, table has {len(self.columns)} columns")
        self._writer.writerow([format_value(v) for v in row])
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "TableWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_table(
    path: str | Path, kind: str, columns: Sequence[str], rows: Iterable[Sequence[Any]], echo: str, seed: int
) -> Path:
    with TableWriter(path, kind, columns, echo, seed) as writer:
        for row in rows:
            writer.write(row)
    return Path(path)


@dataclass(frozen=True)
class Table:
    kind: str
    version: int
    seed: int
    echo: str
    columns: list[str]
    rows: list[dict[str, str]]

    def column(self, name: str) -> list[float]:
        return [float(r[name]) for r in self.rows]


def _split_header(text: str) -> tuple[list[str], list[str]]:
    lines = text.splitlines()
    n = 0
    while n < len(lines) and lines[n].startswith("#"):
        n += 1
    return lines[:n], lines[n:]


def extract_echo(text: str) -> str:
    """The YAML config echo embedded in a table's header."""
    header, _ = _split_header(text)
    if ECHO_MARKER not in header:
        raise SchemaVersionError("table has no config echo")
    start = header.index(ECHO_MARKER) + 1
    return "\n".join(line[2:] for line in header[start:]) + "\n"


def read_table(path: str | Path) -> Table:
    text = Path(path).read_text(encoding="utf-8")
    header, body = _split_header(text)
    match = _SCHEMA_RE.match(header[0]) if header else None
    if match is None:
        raise SchemaVersionError(f"{path}: not a {config.CSV_SCHEMA} table")
    version = int(match.group(1))
    if version != config.CSV_SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: unsupported schema version {version}")
    seed = next((int(h.split(":", 1)[1]) for h in header if h.startswith("# seed:")), 0)
    reader = csv.reader(io.StringIO("\n".join(body)))
    rows = list(reader)
    columns = rows[0] if rows else []
    return Table(
        kind=match.group(2),
        version=version,
        seed=seed,
        echo=extract_echo(text),
        columns=columns,
        rows=[dict(zip(columns, r)) for r in rows[1:] if r],
    )

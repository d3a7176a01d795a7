"""Load source CSV files into validated in-memory tables.

Cells that are empty or spell ``unknown`` (any case) become ``None``, the
unknown marker used throughout the package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

from .schema import SchemaModel, SourceDescriptor

Cell = Optional[str]
Row = tuple


class IngestError(Exception):
    code = "IngestError"

    def __init__(self, source: str, detail: str) -> None:
        self.source = source
        self.detail = detail
        super().__init__(f"{self.code}: {source}: {detail}")


class IngestIoError(IngestError):
    code = "IoError"


class HeaderMismatch(IngestError):
    code = "HeaderMismatch"


class DuplicateKey(IngestError):
    code = "DuplicateKey"

    def __init__(self, source: str, key: str, line: int) -> None:
        self.key = key
        super().__init__(source, f"key {key!r} repeated at line {line}")


class RaggedRow(IngestError):
    code = "RaggedRow"

    def __init__(self, source: str, line: int, width: int, expected: int) -> None:
        self.line = line
        super().__init__(source, f"line {line} has {width} cells, expected {expected}")


class MissingValue(IngestError):
    code = "MissingValue"


class BadTimestamp(IngestError):
    code = "BadTimestamp"

    def __init__(self, cell: str, line: int | None = None, source: str = "<timestamp>") -> None:
        self.cell = cell
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(source, f"{where}unparseable timestamp {cell!r}")


def normalize_cell(cell: str) -> Cell:
    if cell == "" or cell.lower() == "unknown":
        return None
    return cell


def normalize_timestamp(cell: str, line: int | None = None) -> int:
    """Epoch seconds from a non-negative integer or an offset-qualified ISO-8601 string."""
    text = cell.strip()
    if text.isascii() and text.isdigit():
        return int(text)
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        parsed = datetime.fromisoformat(iso)
    except ValueError:
        raise BadTimestamp(cell, line) from None
    if parsed.tzinfo is None or parsed.utcoffset() is None:
        raise BadTimestamp(cell, line)
    seconds = parsed.timestamp()
    if seconds < 0 or seconds != int(seconds):
        raise BadTimestamp(cell, line)
    return int(seconds)


@dataclass(frozen=True)
class SourceTable:
    descriptor: SourceDescriptor
    rows: tuple[Row, ...]
    key_index: dict[str, int] | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> int:
        return self.descriptor.columns.index(name)

    def lookup(self, key: str) -> Row | None:
        if self.key_index is None:
            raise TypeError(f"source {self.descriptor.name!r} is not keyed")
        idx = self.key_index.get(key)
        return None if idx is None else self.rows[idx]


def load_table(descriptor: SourceDescriptor, path: str | Path | None = None) -> SourceTable:
    """Read one source file; the core table gets its timestamp column as ints."""
    path = Path(path if path is not None else descriptor.path)
    name = descriptor.name
    expected = list(descriptor.columns)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != expected:
                raise HeaderMismatch(name, f"header {header} does not match columns {expected}")
            rows = []
            lines = []
            for raw in reader:
                if len(raw) != len(expected):
                    raise RaggedRow(name, reader.line_num, len(raw), len(expected))
                rows.append(tuple(normalize_cell(c) for c in raw))
                lines.append(reader.line_num)
    except OSError as exc:
        raise IngestIoError(name, str(exc)) from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise IngestIoError(name, f"unreadable CSV: {exc}") from exc

    if descriptor.role == "core":
        return SourceTable(descriptor, tuple(_core_rows(name, rows, lines)))

    key_col = expected.index(descriptor.key_column)
    index: dict[str, int] = {}
    for i, (row, line) in enumerate(zip(rows, lines)):
        key = row[key_col]
        if key is None:
            raise MissingValue(name, f"line {line}: key column {descriptor.key_column!r} is empty")
        if key in index:
            raise DuplicateKey(name, key, line)
        index[key] = i
    return SourceTable(descriptor, tuple(rows), index)


def _core_rows(name: str, rows: list[Row], lines: list[int]):
    for row, line in zip(rows, lines):
        student, resource, stamp, action = row
        if student is None or resource is None:
            raise MissingValue(name, f"line {line}: student and resource ids are required")
        if stamp is None:
            raise BadTimestamp("", line, name)
        try:
            seconds = normalize_timestamp(stamp, line)
        except BadTimestamp:
            raise BadTimestamp(stamp, line, name) from None
        yield (student, resource, seconds, action)


def load_all(schema: SchemaModel) -> dict[str, SourceTable]:
    return {s.name: load_table(s, schema.resolve_path(s)) for s in schema.sources}

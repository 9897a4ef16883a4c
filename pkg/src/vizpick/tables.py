"""Numeric data tables: parsing, min-max normalization, series and dataset splits."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInput, MalformedInput, TooFewColumns, TooFewRows

logger = logging.getLogger(__name__)

MIN_ROWS = 5
MAX_SERIES_PER_TABLE = 5


class PlotType(Enum):
    """The three candidate chart kinds, in canonical (tie-break) order."""

    SCATTER = "scatter"
    LINE = "line"
    DENSITY = "density"

    def __str__(self) -> str:
        return self.value

    @property
    def canonical_index(self) -> int:
        return CANONICAL_PLOT_ORDER.index(self)


CANONICAL_PLOT_ORDER: tuple[PlotType, ...] = tuple(PlotType)


@dataclass(frozen=True)
class Column:
    name: str
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise MalformedInput(f"column {self.name!r} is not one-dimensional")
        if not np.isfinite(arr).all():
            raise MalformedInput(f"column {self.name!r} contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DataTable:
    """Equal-length named numeric columns; the unit of recommendation."""

    id: str
    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        cols = tuple(self.columns)
        if not cols:
            raise MalformedInput(f"table {self.id!r} has no columns")
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise MalformedInput(f"table {self.id!r} has columns of unequal length")
        object.__setattr__(self, "columns", cols)

    @classmethod
    def build(cls, table_id: str, named_values: Iterable[tuple[str, Sequence[float]]]) -> "DataTable":
        return cls(table_id, tuple(Column(name, values) for name, values in named_values))

    @property
    def n_rows(self) -> int:
        return len(self.columns[0])

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_values(self, index: int) -> np.ndarray:
        return self.columns[index].values

    def is_normalized(self) -> bool:
        return all(c.values.min() >= 0.0 and c.values.max() <= 1.0 for c in self.columns)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]


def _as_numeric(cells: Sequence[object]) -> np.ndarray | None:
    """Return the cells as a float array, or None if any cell is non-numeric."""
    out = np.empty(len(cells), dtype=np.float64)
    for i, cell in enumerate(cells):
        if isinstance(cell, bool):
            return None
        if isinstance(cell, (int, float)):
            out[i] = float(cell)
        elif isinstance(cell, str):
            try:
                out[i] = float(cell)
            except ValueError:
                return None
        else:
            return None
    if not np.isfinite(out).all():
        return None
    return out


def _parse_csv(data: bytes) -> list[tuple[str, list[str]]]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"CSV is not valid UTF-8: {exc}") from exc
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise MalformedInput("CSV has no header row")
    header, body = rows[0], rows[1:]
    if any(len(row) != len(header) for row in body):
        raise MalformedInput("CSV rows differ in field count")
    return [(name, [row[i] for row in body]) for i, name in enumerate(header)]


def _parse_json(data: bytes) -> list[tuple[str, list[object]]]:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not payload:
        raise MalformedInput("JSON table must be a non-empty object of column arrays")
    columns: list[tuple[str, list[object]]] = []
    length = None
    for name, values in payload.items():
        if not isinstance(values, list):
            raise MalformedInput(f"JSON column {name!r} is not an array")
        if length is None:
            length = len(values)
        elif len(values) != length:
            raise MalformedInput("JSON columns differ in length")
        columns.append((name, values))
    return columns


def parse_table(data: bytes, fmt: str = "csv", table_id: str = "table") -> DataTable:
    """Parse CSV or JSON bytes into a DataTable, silently dropping non-numeric columns.

    Raises MalformedInput, TooFewColumns, or TooFewRows.
    """
    if fmt == "csv":
        raw = _parse_csv(data)
    elif fmt == "json":
        raw = _parse_json(data)
    else:
        raise MalformedInput(f"unknown table format {fmt!r}")

    numeric: list[tuple[str, np.ndarray]] = []
    dropped: list[str] = []
    for name, cells in raw:
        arr = _as_numeric(cells)
        if arr is None:
            dropped.append(name)
        else:
            numeric.append((name, arr))
    if dropped:
        logger.warning("table %r: dropped non-numeric columns %s", table_id, dropped)
    if len(numeric) < 2:
        raise TooFewColumns(
            f"table {table_id!r} has {len(numeric)} numeric column(s); need at least 2"
        )
    n = len(numeric[0][1])
    if n < MIN_ROWS:
        raise TooFewRows(f"table {table_id!r} has {n} rows; need at least {MIN_ROWS}")
    return DataTable.build(table_id, numeric)


def normalize(t: DataTable) -> DataTable:
    """Min-max normalize each column into [0, 1]; constant columns map to 0.5."""
    out = []
    for col in t.columns:
        v = col.values
        lo, hi = v.min(), v.max()
        if hi == lo:
            out.append((col.name, np.full(v.shape, 0.5)))
        else:
            out.append((col.name, (v - lo) / (hi - lo)))
    return DataTable.build(t.id, out)


def split_series(t: DataTable) -> list[DataTable]:
    """Split an (x, y1..ym) table into up to 5 two-column (x, yi) tables."""
    x = t.columns[0]
    return [
        DataTable(id=f"{t.id}_s{i}", columns=(x, y))
        for i, y in enumerate(t.columns[1 : 1 + MAX_SERIES_PER_TABLE], start=1)
    ]


def split_dataset(ids: Sequence[str], seed: int) -> DatasetSplit:
    """Deterministic seeded 80:10:10 split of table ids."""
    if not ids:
        raise EmptyInput("no table ids to split")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n = len(ids)
    n_train = (n * 8) // 10
    n_val = n // 10
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train : n_train + n_val]),
        test=tuple(shuffled[n_train + n_val :]),
    )


def to_csv_bytes(t: DataTable) -> bytes:
    """Serialize with full-precision floats so parse(to_csv(t)) round-trips bit-for-bit."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(t.column_names)
    for i in range(t.n_rows):
        writer.writerow([repr(float(c.values[i])) for c in t.columns])
    return buf.getvalue().encode("utf-8")


def to_json_bytes(t: DataTable) -> bytes:
    payload = {c.name: [float(v) for v in c.values] for c in t.columns}
    return json.dumps(payload).encode("utf-8")

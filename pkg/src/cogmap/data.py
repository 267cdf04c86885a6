"""Indicator tables: loading, level mapping and validation.

A table is a territories x indicators matrix of floats where NaN marks a
missing observation. Column order is fixed by the schema and is the column
index used by every later stage.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

from .errors import DuplicateKeyError, MappingError, SchemaError

logger = logging.getLogger(__name__)

PathOrStream = Union[str, os.PathLike, TextIO]

#: Literal used in mapping files for "this indicator has no counterpart".
NO_TARGET = "-"


class Level(str, enum.Enum):
    FAMILY = "family"
    REGION = "region"
    COUNTRY = "country"
    WORLD = "world"


@dataclass(frozen=True)
class Indicator:
    name: str
    unit: str = ""
    level: Level = Level.REGION

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.strip():
            raise SchemaError("indicator names must be non-empty")
        object.__setattr__(self, "level", Level(self.level))


@dataclass(frozen=True)
class IndicatorSchema:
    indicators: tuple[Indicator, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "indicators", tuple(self.indicators))
        seen = set()
        dupes = []
        for ind in self.indicators:
            if ind.name in seen:
                dupes.append(ind.name)
            seen.add(ind.name)
        if dupes:
            raise SchemaError(f"duplicate indicator names: {', '.join(dupes)}")

    @classmethod
    def from_names(cls, names: Iterable[str], unit: str = "", level: Level = Level.REGION):
        return cls(tuple(Indicator(n, unit, level) for n in names))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ind.name for ind in self.indicators)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown indicator {name!r}") from None

    def __len__(self):
        return len(self.indicators)

    def __getitem__(self, name: str) -> Indicator:
        return self.indicators[self.index(name)]


@dataclass(frozen=True)
class LevelMapping:
    """Correspondence between indicator names at two scales of society.

    A pair whose target is ``None`` is an explicitly unmapped indicator.
    """

    pairs: tuple[tuple[str, str | None], ...]
    from_level: Level = Level.FAMILY
    to_level: Level = Level.REGION

    def __post_init__(self):
        pairs = tuple((str(a), None if b is None else str(b)) for a, b in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "from_level", Level(self.from_level))
        object.__setattr__(self, "to_level", Level(self.to_level))
        sources = [a for a, _ in pairs]
        dupes = sorted({a for a in sources if sources.count(a) > 1})
        if dupes:
            raise MappingError(f"source names mapped more than once: {', '.join(dupes)}")
        targets = [b for _, b in pairs if b is not None]
        dupes = sorted({b for b in targets if targets.count(b) > 1})
        if dupes:
            raise MappingError(f"target names used more than once: {', '.join(dupes)}")

    @property
    def unmapped(self) -> tuple[str, ...]:
        return tuple(a for a, b in self.pairs if b is None)

    def target(self, name: str) -> str | None:
        for a, b in self.pairs:
            if a == name:
                return b
        raise MappingError(f"{name!r} is not in the mapping")


# Family <-> region correspondence of the sustainable-development typology.
FAMILY_TO_REGION = LevelMapping(
    pairs=(
        ("Total family income", "Gross domestic product (GDP)"),
        ("Total family expenditures", "Budget"),
        ("Family debt", "Debt"),
        ("Borrowing opportunities for development", "Investment"),
        ("Family poverty level", "Poverty"),
        ("Energy reserves", "Internal energy"),
        ("Raw stock", "Extraction of raw materials"),
        ("Need for energy reserves", "Energy opportunities"),
        ("Need for raw stock", "Raw stock opportunities"),
        ("Soil contamination level", "Soil contamination level"),
        ("Water contamination level", "Scope of emissions into water"),
        ("Air contamination level", "Scope of emissions into the air (contamination)"),
        ("Infrastructure of the family allotment", "Infrastructure"),
        ("Number of family members", "Demography"),
        ("Number of working family members", "Working potential"),
        ("Academic level", "Education"),
        ("Life quality", "Life quality"),
        ("Social morbidity", "Social morbidity"),
        ("Ecological morbidity", "Pathologies"),
        ("Family safety level", None),
        ("Level of use of education in the family", "Scientists' remuneration"),
    ),
    from_level=Level.FAMILY,
    to_level=Level.REGION,
)

# Criteria of the world development model (World Bank 2000 extract), in the
# order they are reported.
WORLD_MODEL_INDICATORS = (
    "Education",
    "Internal energy",
    "Extraction of raw materials",
    "Working potential",
    "Demography",
    "Life quality",
    "GDP",
    "Infrastructure",
    "Investment",
    "Raw stock opportunities",
    "Energy opportunities",
    "Country budget",
    "Scientists' remuneration",
    "Debt",
    "Morbidity",
    "Poverty",
)


@dataclass(frozen=True, eq=False)
class IndicatorTable:
    schema: IndicatorSchema
    territory_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = tuple(str(t) for t in self.territory_ids)
        object.__setattr__(self, "territory_ids", ids)
        values = np.array(self.values, dtype=float, copy=True).reshape(len(ids), len(self.schema))
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        dupes = sorted({t for t in ids if ids.count(t) > 1})
        if dupes:
            raise DuplicateKeyError(f"duplicate territory ids: {', '.join(dupes)}")

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.schema.index(name)]

    def select(self, names: Sequence[str]) -> "IndicatorTable":
        """Sub-table with the given columns, in the given order."""
        idx = [self.schema.index(n) for n in names]
        schema = IndicatorSchema(tuple(self.schema.indicators[i] for i in idx))
        return IndicatorTable(schema, self.territory_ids, self.values[:, idx])

    def drop(self, names: Iterable[str]) -> "IndicatorTable":
        names = set(names)
        return self.select([n for n in self.names if n not in names])

    def __eq__(self, other):
        if not isinstance(other, IndicatorTable):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.territory_ids == other.territory_ids
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def _open(source: PathOrStream, mode: str = "r"):
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode, encoding="utf-8", newline=""), True


def _parse_cell(cell: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        return math.nan
    return value if math.isfinite(value) else math.nan


def load_schema(source: PathOrStream, delimiter: str = ",") -> IndicatorSchema:
    """Read a schema file with columns ``name,unit,level`` (unit and level optional)."""
    fh, close = _open(source)
    try:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    finally:
        if close:
            fh.close()
    if not rows:
        raise SchemaError("schema file is empty")
    header = [c.strip().lower() for c in rows[0]]
    if header[0] != "name":
        raise SchemaError("schema header must start with 'name'")
    out = []
    for row in rows[1:]:
        rec = dict(zip(header, (c.strip() for c in row)))
        try:
            level = Level(rec.get("level") or Level.REGION)
        except ValueError:
            raise SchemaError(f"bad level {rec.get('level')!r} for {rec['name']!r}") from None
        out.append(Indicator(rec["name"], rec.get("unit", ""), level))
    return IndicatorSchema(tuple(out))


def write_schema(schema: IndicatorSchema, dest: PathOrStream, delimiter: str = ","):
    fh, close = _open(dest, "w")
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["name", "unit", "level"])
        for ind in schema.indicators:
            w.writerow([ind.name, ind.unit, ind.level.value])
    finally:
        if close:
            fh.close()


def load_indicator_table(
    source: PathOrStream,
    schema: IndicatorSchema | None = None,
    delimiter: str = ",",
) -> IndicatorTable:
    """Parse a delimited table whose first column identifies the territory.

    Columns are reordered to follow `schema`. Empty or non-numeric cells
    become missing (NaN). Without a schema, one is inferred from the header.

    Raises
    ------
    SchemaError
        if the header's indicator columns differ from the schema's.
    DuplicateKeyError
        if a territory id repeats.
    """
    fh, close = _open(source)
    try:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("table has no header row") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    finally:
        if close:
            fh.close()

    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    columns = header[1:]
    if schema is None:
        schema = IndicatorSchema.from_names(columns)
    missing = [n for n in schema.names if n not in columns]
    extra = [c for c in columns if c not in schema.names]
    if missing or extra or len(set(columns)) != len(columns):
        parts = []
        if missing:
            parts.append("missing from header: " + ", ".join(missing))
        if extra:
            parts.append("not in schema: " + ", ".join(extra))
        if len(set(columns)) != len(columns):
            parts.append("repeated header columns")
        raise SchemaError("header/schema mismatch; " + "; ".join(parts))

    order = [columns.index(n) for n in schema.names]
    ids = []
    values = np.full((len(rows), len(schema)), np.nan)
    for r, row in enumerate(rows):
        ids.append(row[0].strip())
        cells = row[1:] + [""] * (len(columns) - len(row) + 1)
        for c, src in enumerate(order):
            values[r, c] = _parse_cell(cells[src].strip())
    dupes = sorted({t for t in ids if ids.count(t) > 1})
    if dupes:
        raise DuplicateKeyError(f"duplicate territory ids: {', '.join(dupes)}")
    return IndicatorTable(schema, tuple(ids), values)


def write_indicator_table(table: IndicatorTable, dest: PathOrStream, delimiter: str = ","):
    """Inverse of `load_indicator_table`; floats are written round-trip exact."""
    fh, close = _open(dest, "w")
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["territory", *table.names])
        for tid, row in zip(table.territory_ids, table.values):
            w.writerow([tid, *("" if math.isnan(v) else repr(float(v)) for v in row)])
    finally:
        if close:
            fh.close()


def dumps_indicator_table(table: IndicatorTable, delimiter: str = ",") -> str:
    buf = io.StringIO()
    write_indicator_table(table, buf, delimiter)
    return buf.getvalue()


def load_level_mapping(
    source: PathOrStream,
    from_level: Level = Level.FAMILY,
    to_level: Level = Level.REGION,
    delimiter: str = ",",
) -> LevelMapping:
    """Read ``from_name,to_name`` rows; a to_name of ``-`` means no target.

    A leading ``from_name,to_name`` header is optional.
    """
    fh, close = _open(source)
    try:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    finally:
        if close:
            fh.close()
    if rows and [c.strip().lower() for c in rows[0][:2]] == ["from_name", "to_name"]:
        rows = rows[1:]
    pairs = []
    for i, row in enumerate(rows):
        if len(row) < 2:
            raise MappingError(f"mapping row {i + 1} needs two fields")
        a, b = row[0].strip(), row[1].strip()
        pairs.append((a, None if b in (NO_TARGET, "") else b))
    return LevelMapping(tuple(pairs), from_level, to_level)


def map_level(table: IndicatorTable, mapping: LevelMapping) -> tuple[IndicatorTable, list[str]]:
    """Rename columns to another level of society.

    Returns the renamed table and the source columns that were dropped,
    either because they have no target or because the mapping omits them.
    Numeric values are carried over unchanged.
    """
    unknown = [a for a, _ in mapping.pairs if a not in table.names]
    if unknown:
        raise MappingError(f"mapping names absent from table: {', '.join(unknown)}")
    targets = dict(mapping.pairs)
    kept, dropped = [], []
    for ind in table.schema.indicators:
        to = targets.get(ind.name)
        if to is None:
            dropped.append(ind.name)
        else:
            kept.append((ind, to))
    if dropped:
        logger.warning("level mapping drops %d column(s): %s", len(dropped), ", ".join(dropped))
    schema = IndicatorSchema(tuple(Indicator(to, ind.unit, mapping.to_level) for ind, to in kept))
    idx = [table.schema.index(ind.name) for ind, _ in kept]
    return IndicatorTable(schema, table.territory_ids, table.values[:, idx]), dropped


class DropReason(str, enum.Enum):
    CONSTANT = "constant"
    TOO_FEW_OBSERVATIONS = "too_few_observations"


@dataclass(frozen=True)
class ValidationReport:
    names: tuple[str, ...]
    dropped_columns: tuple[tuple[str, DropReason], ...]
    missing_cells: dict[str, int]
    pairwise_n: np.ndarray
    flagged_pairs: tuple[tuple[str, str], ...] = field(default=())
    min_pairwise_n: int = 4

    @property
    def dropped_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.dropped_columns)

    def apply(self, table: IndicatorTable) -> IndicatorTable:
        """Drop the flagged columns from `table`."""
        return table.drop(self.dropped_names)

    def summary(self) -> str:
        lines = [f"{len(self.names)} indicator(s), min pairwise n = {self.min_pairwise_n}"]
        for name, reason in self.dropped_columns:
            lines.append(f"dropped {name}: {reason.value}")
        for name in self.names:
            if self.missing_cells[name]:
                lines.append(f"missing cells in {name}: {self.missing_cells[name]}")
        dropped = set(self.dropped_names)
        for a, b in self.flagged_pairs:
            if a in dropped or b in dropped:
                continue
            lines.append(f"too few complete rows for pair {a} / {b}")
        return "\n".join(lines)


def pairwise_counts(values: np.ndarray) -> np.ndarray:
    present = (~np.isnan(values)).astype(np.int64)
    return present.T @ present


def validate_table(table: IndicatorTable, min_pairwise_n: int = 4) -> ValidationReport:
    """Report constant or sparse columns and sparse column pairs. Never raises."""
    values = table.values
    pn = pairwise_counts(values)
    names = table.names
    dropped = []
    for j, name in enumerate(names):
        col = values[:, j]
        col = col[~np.isnan(col)]
        if col.size < min_pairwise_n:
            dropped.append((name, DropReason.TOO_FEW_OBSERVATIONS))
        elif np.all(col == col[0]):
            dropped.append((name, DropReason.CONSTANT))
    for name, reason in dropped:
        logger.warning("column %s flagged: %s", name, reason.value)
    flagged = tuple(
        (names[i], names[j])
        for i in range(len(names))
        for j in range(i + 1, len(names))
        if pn[i, j] < min_pairwise_n
    )
    missing = {name: int(np.isnan(values[:, j]).sum()) for j, name in enumerate(names)}
    pn.flags.writeable = False
    return ValidationReport(names, tuple(dropped), missing, pn, flagged, min_pairwise_n)

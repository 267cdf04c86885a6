"""Standardization, pairwise correlation/regression matrices and edge filtering."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .data import IndicatorTable, PathOrStream, _open, pairwise_counts
from .errors import (
    DegenerateColumnError,
    DimensionError,
    InsufficientDataError,
    SchemaError,
)

R_THRESHOLD = 0.9
ERR_THRESHOLD = 0.1
MIN_PAIRWISE_N = 4


@dataclass(frozen=True, eq=False)
class StandardizedMatrix:
    names: tuple[str, ...]
    values: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray


def standardize(table: IndicatorTable) -> StandardizedMatrix:
    """z-score every column with the sample (n-1) standard deviation.

    Missing cells stay NaN. A column with fewer than two observations or
    zero variance raises `DegenerateColumnError`.
    """
    x = table.values
    present = ~np.isnan(x)
    counts = present.sum(axis=0)
    means = np.zeros(x.shape[1])
    stds = np.zeros(x.shape[1])
    z = np.full_like(x, np.nan)
    for j, name in enumerate(table.names):
        col = x[present[:, j], j]
        if counts[j] < 2:
            raise DegenerateColumnError(f"column {name!r} has fewer than 2 observations")
        m = col.mean()
        s = col.std(ddof=1)
        if not s > 0 or np.all(col == col[0]):
            raise DegenerateColumnError(f"column {name!r} is constant")
        zc = (col - m) / s
        # one refinement pass removes the rounding left by the first
        m2 = zc.mean()
        s2 = (zc - m2).std(ddof=1)
        zc = (zc - m2) / s2
        z[present[:, j], j] = zc
        means[j] = m + s * m2
        stds[j] = s * s2
    for arr in (z, means, stds):
        arr.flags.writeable = False
    return StandardizedMatrix(table.names, z, means, stds)


def pearson_standard_error(r: float, n: int) -> float:
    """Standard error of a sample Pearson r: sqrt((1 - r^2) / (n - 2))."""
    if n <= 2:
        return math.inf
    return math.sqrt(max(0.0, 1.0 - r * r) / (n - 2))


@dataclass(frozen=True, eq=False)
class StatMatrices:
    """Pairwise statistics. ``regr[i, j]`` is the slope of column j regressed on column i."""

    names: tuple[str, ...]
    corr: np.ndarray
    corr_err: np.ndarray
    regr: np.ndarray
    regr_err: np.ndarray
    pairwise_n: np.ndarray

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown indicator {name!r}") from None


def compute_stat_matrices(
    std: StandardizedMatrix,
    min_pairwise_n: int = MIN_PAIRWISE_N,
    corr_error: Callable[[float, int], float] = pearson_standard_error,
) -> StatMatrices:
    """Correlation, its error, regression slope and slope error for every pair.

    Each pair uses only the rows observed in both columns, so on incomplete
    data ``regr`` need not be symmetric.
    """
    z = std.values
    k = z.shape[1]
    if k < 2:
        raise DimensionError("need at least 2 columns")
    present = ~np.isnan(z)
    pn = pairwise_counts(z)
    corr = np.eye(k)
    corr_err = np.zeros((k, k))
    regr = np.eye(k)
    regr_err = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            n = int(pn[i, j])
            if n < min_pairwise_n:
                raise InsufficientDataError(
                    f"pair ({std.names[i]!r}, {std.names[j]!r}) has {n} complete rows, "
                    f"need {min_pairwise_n}"
                )
            rows = present[:, i] & present[:, j]
            a = z[rows, i]
            b = z[rows, j]
            da = a - a.mean()
            db = b - b.mean()
            saa = float(da @ da)
            sbb = float(db @ db)
            sab = float(da @ db)
            if saa == 0.0 or sbb == 0.0:
                raise DegenerateColumnError(
                    f"pair ({std.names[i]!r}, {std.names[j]!r}) is constant on its common rows"
                )
            r = min(1.0, max(-1.0, sab / math.sqrt(saa * sbb)))
            corr[i, j] = corr[j, i] = r
            corr_err[i, j] = corr_err[j, i] = corr_error(r, n)
            one_minus = max(0.0, 1.0 - r * r)
            regr[i, j] = sab / saa
            regr[j, i] = sab / sbb
            if n > 2:
                regr_err[i, j] = math.sqrt(sbb * one_minus / ((n - 2) * saa))
                regr_err[j, i] = math.sqrt(saa * one_minus / ((n - 2) * sbb))
            else:
                regr_err[i, j] = regr_err[j, i] = math.inf
    for arr in (corr, corr_err, regr, regr_err, pn):
        arr.flags.writeable = False
    return StatMatrices(std.names, corr, corr_err, regr, regr_err, pn)


def export_stat_matrices(stats: StatMatrices, directory: str | os.PathLike, delimiter: str = ","):
    """Write corr, corr_err, regr, regr_err and pairwise_n as square grids (12 significant digits)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for key in ("corr", "corr_err", "regr", "regr_err", "pairwise_n"):
        m = getattr(stats, key)
        path = directory / f"{key}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(["", *stats.names])
            for name, row in zip(stats.names, m):
                if key == "pairwise_n":
                    w.writerow([name, *(str(int(v)) for v in row)])
                else:
                    w.writerow([name, *(format(float(v), ".12g") for v in row)])
        written.append(path)
    return written


@dataclass(frozen=True, eq=False)
class DirectionMask:
    """Admissible influence directions; ``allowed[i, j]`` permits edge i -> j."""

    names: tuple[str, ...]
    allowed: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        allowed = np.array(self.allowed, dtype=bool, copy=True)
        if allowed.shape != (len(names), len(names)):
            raise DimensionError(f"mask is {allowed.shape}, expected {len(names)}x{len(names)}")
        if len(set(names)) != len(names):
            raise SchemaError("mask names must be unique")
        if allowed.diagonal().any():
            bad = [n for n, d in zip(names, allowed.diagonal()) if d]
            raise SchemaError(f"mask allows self-loops for: {', '.join(bad)}")
        allowed.flags.writeable = False
        object.__setattr__(self, "allowed", allowed)

    @classmethod
    def full(cls, names: Sequence[str]) -> "DirectionMask":
        k = len(names)
        return cls(tuple(names), ~np.eye(k, dtype=bool))

    @classmethod
    def empty(cls, names: Sequence[str]) -> "DirectionMask":
        k = len(names)
        return cls(tuple(names), np.zeros((k, k), dtype=bool))

    @classmethod
    def from_pairs(cls, names: Sequence[str], pairs: Iterable[tuple[str, str]]) -> "DirectionMask":
        names = tuple(names)
        allowed = np.zeros((len(names), len(names)), dtype=bool)
        for a, b in pairs:
            try:
                allowed[names.index(a), names.index(b)] = True
            except ValueError:
                raise SchemaError(f"mask pair ({a!r}, {b!r}) names an unknown indicator") from None
        return cls(names, allowed)

    def allows(self, a: str, b: str) -> bool:
        return bool(self.allowed[self.names.index(a), self.names.index(b)])

    def restrict(self, names: Sequence[str]) -> "DirectionMask":
        """Sub-mask over `names` (which must all be present), in that order."""
        missing = [n for n in names if n not in self.names]
        if missing:
            raise DimensionError(f"mask lacks indicators: {', '.join(missing)}")
        idx = [self.names.index(n) for n in names]
        return DirectionMask(tuple(names), self.allowed[np.ix_(idx, idx)])

    def pairs(self) -> list[tuple[str, str]]:
        return [(self.names[i], self.names[j]) for i, j in zip(*np.nonzero(self.allowed))]


def load_mask(source: PathOrStream, delimiter: str = ",") -> DirectionMask:
    """Read a square 0/1 grid: header row of target names, first column of source names."""
    fh, close = _open(source)
    try:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    finally:
        if close:
            fh.close()
    if not rows:
        raise SchemaError("mask file is empty")
    cols = [c.strip() for c in rows[0][1:]]
    body = rows[1:]
    row_names = [r[0].strip() for r in body]
    if sorted(row_names) != sorted(cols):
        raise SchemaError("mask row names must match its column names")
    allowed = np.zeros((len(cols), len(cols)), dtype=bool)
    for r in body:
        i = cols.index(r[0].strip())
        cells = [c.strip() for c in r[1:]]
        if len(cells) != len(cols):
            raise SchemaError(f"mask row {r[0].strip()!r} has {len(cells)} cells, expected {len(cols)}")
        for j, c in enumerate(cells):
            if c not in ("0", "1", ""):
                raise SchemaError(f"mask cell must be 0 or 1, got {c!r}")
            allowed[i, j] = c == "1"
    return DirectionMask(tuple(cols), allowed)


def write_mask(mask: DirectionMask, dest: PathOrStream, delimiter: str = ","):
    fh, close = _open(dest, "w")
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["", *mask.names])
        for name, row in zip(mask.names, mask.allowed):
            w.writerow([name, *("1" if v else "0" for v in row)])
    finally:
        if close:
            fh.close()


@dataclass(frozen=True)
class EdgeCandidate:
    source: str
    target: str
    r: float
    r_err: float
    weight: float
    weight_err: float
    n: int

    def __post_init__(self):
        if self.source == self.target:
            raise SchemaError(f"self-loop on {self.source!r}")


def filter_edges(
    stats: StatMatrices,
    mask: DirectionMask,
    r_threshold: float = R_THRESHOLD,
    err_threshold: float = ERR_THRESHOLD,
) -> list[EdgeCandidate]:
    """Keep masked pairs with |r| >= r_threshold and corr_err <= err_threshold.

    The weight of i -> j is the slope of j on i. Output is sorted by |weight|
    descending, then by (source, target).
    """
    mask = mask.restrict(stats.names)
    out = []
    for i, j in zip(*np.nonzero(mask.allowed)):
        r = float(stats.corr[i, j])
        err = float(stats.corr_err[i, j])
        if abs(r) >= r_threshold and err <= err_threshold:
            out.append(
                EdgeCandidate(
                    stats.names[i],
                    stats.names[j],
                    r,
                    err,
                    float(stats.regr[i, j]),
                    float(stats.regr_err[i, j]),
                    int(stats.pairwise_n[i, j]),
                )
            )
    out.sort(key=lambda e: (-abs(e.weight), e.source, e.target))
    return out


EDGE_FIELDS = ("from", "to", "r", "r_err", "weight", "weight_err", "n")


def write_edges(edges: Sequence[EdgeCandidate], dest: PathOrStream, delimiter: str = ","):
    fh, close = _open(dest, "w")
    try:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(EDGE_FIELDS)
        for e in edges:
            w.writerow([e.source, e.target, repr(e.r), repr(e.r_err), repr(e.weight), repr(e.weight_err), e.n])
    finally:
        if close:
            fh.close()


def load_edges(source: PathOrStream, delimiter: str = ",") -> list[EdgeCandidate]:
    fh, close = _open(source)
    try:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None or tuple(reader.fieldnames) != EDGE_FIELDS:
            raise SchemaError(f"edge file header must be {','.join(EDGE_FIELDS)}")
        out = []
        for row in reader:
            try:
                out.append(
                    EdgeCandidate(
                        row["from"], row["to"], float(row["r"]), float(row["r_err"]),
                        float(row["weight"]), float(row["weight_err"]), int(row["n"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"bad edge row {reader.line_num}: {exc}") from None
        return out
    finally:
        if close:
            fh.close()

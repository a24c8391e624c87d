"""Aligned multivariate series with explicit gaps, plus lagged extraction.

Gaps are carried as NaN and are never interpolated. Lagged sample matrices
use complete-case filtering: an anchor time is dropped as soon as any
requested lagged cell is missing, which is what shrinks usable sample
counts as the lag window grows on gappy records.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    DegenerateVariableError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    UnknownVariableError,
)
from .tsgraph import LaggedNode

__all__ = [
    "TimeSeriesSet",
    "LaggedMatrix",
    "SharedBlocks",
    "load_csv",
    "save_csv",
    "standardize",
    "extract_lagged_matrix",
    "extract_shared_blocks",
]


@dataclass(frozen=True)
class TimeSeriesSet:
    """T x N series matrix; NaN marks missing cells, row order is time order."""

    variable_names: tuple[str, ...]
    values: np.ndarray
    step_description: str = ""
    timestamp_name: str | None = None
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self):
        names = tuple(self.variable_names)
        object.__setattr__(self, "variable_names", names)
        if len(set(names)) != len(names) or any(not n for n in names):
            raise SchemaError("variable names must be unique and non-empty",
                              module="timeseries")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise SchemaError("values must be a 2-d matrix", module="timeseries")
        if values.shape[1] != len(names):
            raise SchemaError(
                f"matrix has {values.shape[1]} columns for {len(names)} names",
                module="timeseries")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(self.timestamps))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.variable_names.index(name)
        except ValueError:
            raise UnknownVariableError(
                f"unknown variable {name!r}; data defines {list(self.variable_names)}",
                module="timeseries") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index_of(name)]


def _parse_cell(text: str, missing_token: str) -> float | None:
    cell = text.strip()
    if cell == "" or cell == missing_token:
        return math.nan
    try:
        return float(cell)
    except ValueError:
        return None  # caller decides: timestamp column or parse error


def load_csv(path, missing_token: str = "", step_description: str = "") -> TimeSeriesSet:
    """Load a header-plus-rows CSV.

    Cells equal to ``missing_token`` (or empty) become gaps. A column whose
    non-missing cells are all non-numeric is treated as a timestamp column
    and kept as metadata only; at most one such column is allowed.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty", module="timeseries",
                             operation="load_csv") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dup = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError(f"duplicate column names {dup} in {path}",
                              module="timeseries", operation="load_csv")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"row at line {lineno} has {len(row)} cells, expected {len(header)}",
                    module="timeseries", operation="load_csv")
            rows.append(row)

    n_cols = len(header)
    parsed = [[_parse_cell(rows[r][c], missing_token) for r in range(len(rows))]
              for c in range(n_cols)]
    numeric_cols, ts_cols = [], []
    for c in range(n_cols):
        bad = [i for i, v in enumerate(parsed[c]) if v is None]
        if not bad:
            numeric_cols.append(c)
        elif len(bad) == sum(1 for v in parsed[c]
                             if v is None or not math.isnan(v)):
            ts_cols.append(c)  # every non-missing cell is non-numeric
        else:
            raise ParseError(
                f"column {header[c]!r} mixes numeric and non-numeric cells "
                f"(first bad cell at data row {bad[0] + 1})",
                module="timeseries", operation="load_csv")
    if len(ts_cols) > 1:
        raise SchemaError(
            f"multiple non-numeric columns {[header[c] for c in ts_cols]}; "
            "at most one timestamp column is supported",
            module="timeseries", operation="load_csv")

    names = tuple(header[c] for c in numeric_cols)
    values = np.array([[parsed[c][r] for c in numeric_cols]
                       for r in range(len(rows))], dtype=np.float64)
    if values.size == 0:
        values = values.reshape(len(rows), len(names))
    timestamp_name = header[ts_cols[0]] if ts_cols else None
    timestamps = (tuple(rows[r][ts_cols[0]].strip() for r in range(len(rows)))
                  if ts_cols else None)
    return TimeSeriesSet(names, values, step_description=step_description,
                         timestamp_name=timestamp_name, timestamps=timestamps)


def save_csv(ts: TimeSeriesSet, path, missing_token: str = "") -> None:
    """Write the series back out; gaps become ``missing_token``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ts.variable_names)
        for row in ts.values:
            writer.writerow([missing_token if math.isnan(v) else repr(float(v))
                             for v in row])


def standardize(ts: TimeSeriesSet) -> TimeSeriesSet:
    """Rescale each variable to mean 0 / unit sample sd over its non-missing cells."""
    values = np.array(ts.values, dtype=np.float64)
    for j, name in enumerate(ts.variable_names):
        col = values[:, j]
        present = col[np.isfinite(col)]
        if present.size < 2:
            raise DegenerateVariableError(
                f"variable {name!r} has {present.size} non-missing values; need >= 2",
                module="timeseries", operation="standardize")
        sd = present.std(ddof=1)
        if not sd > 0:
            raise DegenerateVariableError(
                f"variable {name!r} is constant; cannot standardize",
                module="timeseries", operation="standardize",
                hint="drop the variable or supply data with variation")
        values[:, j] = (col - present.mean()) / sd
    return TimeSeriesSet(ts.variable_names, values,
                         step_description=ts.step_description,
                         timestamp_name=ts.timestamp_name,
                         timestamps=ts.timestamps)


@dataclass(frozen=True)
class LaggedMatrix:
    """Complete-case lagged sample matrix plus row bookkeeping."""

    values: np.ndarray
    anchor_times: np.ndarray
    n_dropped: int

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SharedBlocks:
    """Several lagged matrices sharing one complete-case row set."""

    blocks: tuple[np.ndarray, ...]
    anchor_times: np.ndarray
    n_dropped: int

    @property
    def n_rows(self) -> int:
        return int(self.anchor_times.shape[0])


def extract_shared_blocks(ts: TimeSeriesSet,
                          groups: Sequence[Sequence[LaggedNode]]) -> SharedBlocks:
    """Extract one matrix per node group over a single shared row mask.

    Anchor times run over ``[max_lag, T)``; an anchor is kept only if every
    requested lagged cell across *all* groups is present.
    """
    flat = [node for group in groups for node in group]
    if not flat:
        raise ContractViolationError("at least one lagged node is required",
                                     module="timeseries",
                                     operation="extract_shared_blocks")
    max_lag = max(node.lag for node in flat)
    t_len = ts.n_steps
    if max_lag >= t_len:
        raise InsufficientDataError(
            f"max lag {max_lag} >= series length {t_len}",
            module="timeseries", operation="extract_shared_blocks")
    n_anchor = t_len - max_lag
    columns: dict[LaggedNode, np.ndarray] = {}
    for node in flat:
        if node in columns:
            continue
        idx = ts.index_of(node.variable)
        columns[node] = ts.values[max_lag - node.lag: t_len - node.lag, idx]
    mask = np.ones(n_anchor, dtype=bool)
    for col in columns.values():
        mask &= np.isfinite(col)
    n_rows = int(mask.sum())
    if n_rows == 0:
        raise InsufficientDataError(
            "no complete-case rows for nodes "
            f"{[str(n) for n in sorted(set(flat))]} (max lag {max_lag})",
            module="timeseries", operation="extract_shared_blocks",
            hint="reduce the lag window or supply longer data")
    blocks = []
    for group in groups:
        if group:
            block = np.column_stack([columns[node][mask] for node in group])
        else:
            block = np.empty((n_rows, 0), dtype=np.float64)
        blocks.append(block)
    anchor_times = np.arange(max_lag, t_len)[mask]
    return SharedBlocks(tuple(blocks), anchor_times, n_anchor - n_rows)


def extract_lagged_matrix(ts: TimeSeriesSet,
                          nodes: Sequence[LaggedNode]) -> LaggedMatrix:
    """Single-group convenience wrapper around :func:`extract_shared_blocks`."""
    nodes = list(nodes)
    if not nodes:
        raise ContractViolationError("node list must be non-empty",
                                     module="timeseries",
                                     operation="extract_lagged_matrix")
    shared = extract_shared_blocks(ts, [nodes])
    return LaggedMatrix(shared.blocks[0], shared.anchor_times, shared.n_dropped)

"""History decomposition of bundled information flow, single-lag and swept.

For one partition lag tau the target's information from the bundled past
splits into an immediate part (through parents inside the recent window)
and a distant part (through parents beyond it); each part is further
decomposed into redundant / synergistic / unique components over the two
bundles. A sweep evaluates this over a grid of (tau, order, k) and emits a
fixed-schema CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BundleInfoError, ContractViolationError, \
    InsufficientDataError, ParseError, SweepError
from .estimators import EstimatorConfig, fp_cmi
from .graph_reduction import prune_distant_sources
from .pid import PIDResult, pid_from_blocks
from .timeseries import TimeSeriesSet, extract_shared_blocks, standardize
from .tsgraph import (
    BundleSpec,
    LaggedNode,
    Order,
    StationaryGraph,
    compute_node_sets,
    split_by_bundle,
)

__all__ = [
    "SweepConfig",
    "HistoryDecomposition",
    "SweepCell",
    "analyze_at_lag",
    "sweep",
    "SWEEP_COLUMNS",
    "write_sweep_csv",
    "read_sweep_csv",
]

SWEEP_COLUMNS = (
    "order", "k", "tau", "sample_count", "v_size", "w_size", "f_size",
    "T", "J", "D", "chain_residual",
    "R_J", "S_J", "Um_J", "Un_J",
    "R_D", "S_D", "Um_D", "Un_D",
    "R_T", "S_T", "Um_T", "Un_T",
    "error",
)


@dataclass(frozen=True)
class SweepConfig:
    """Grid of (tau, order, k) cells evaluated by :func:`sweep`."""

    tau_values: tuple[int, ...]
    orders: tuple[Order, ...] = (Order.ORDER0, Order.ORDER1)
    k_values: tuple[int, ...] = (5,)
    use_reduction: bool = False
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    direct_total_pid: bool = False

    def __post_init__(self):
        taus = tuple(int(t) for t in self.tau_values)
        object.__setattr__(self, "tau_values", taus)
        object.__setattr__(self, "orders",
                           tuple(Order(o) for o in self.orders))
        object.__setattr__(self, "k_values",
                           tuple(int(k) for k in self.k_values))
        if not taus or any(t < 1 for t in taus) or \
                any(a >= b for a, b in zip(taus, taus[1:])):
            raise ContractViolationError(
                "tau_values must be a non-empty strictly increasing list of "
                "positive integers", module="analysis")
        if not self.orders:
            raise ContractViolationError("orders must be non-empty",
                                         module="analysis")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ContractViolationError("k_values must be positive",
                                         module="analysis")


@dataclass(frozen=True)
class HistoryDecomposition:
    """All quantities estimated at one (tau, order, k) cell, in nats.

    ``total`` is the information from the target's bundled parents in the
    recent window alone, ``immediate`` the same conditioned additionally on
    the distant parent set, ``distant`` the information through the distant
    parent set. ``chain_residual`` = total - immediate - distant is a
    published output, never zeroed. ``pid_total`` is the component-wise sum
    of the two partial decompositions; an independently estimated
    decomposition of the total is available as ``pid_total_direct``.
    """

    tau: int
    order: Order
    k: int
    total: float
    immediate: float
    distant: float
    pid_immediate: PIDResult
    pid_distant: PIDResult
    pid_total: PIDResult
    sample_count: int
    immediate_size: int
    distant_size: int
    condition_size: int
    chain_residual: float
    pid_total_direct: PIDResult | None = None


@dataclass(frozen=True)
class SweepCell:
    order: Order
    k: int
    tau: int
    record: HistoryDecomposition | None
    error: str | None = None


def analyze_at_lag(ts: TimeSeriesSet, graph: StationaryGraph, bundles: BundleSpec,
                   tau: int, order: Order, cfg: EstimatorConfig, *,
                   use_reduction: bool = False, reduction_cache: dict | None = None,
                   direct_total_pid: bool = False) -> HistoryDecomposition:
    """Estimate the history decomposition at one partition lag.

    The series is standardized and a single complete-case row mask is shared
    by every estimate, so the chain identity is evaluated on identical
    samples. With an empty distant set the immediate information *is* the
    total (same estimate object) and the distant part is exactly zero; with
    an empty recent window the total and immediate parts are exactly zero
    while the distant part is still estimated.
    """
    data = standardize(ts)
    order = Order(order)
    sets = compute_node_sets(graph, bundles, tau, order)
    recent = sets.immediate
    distant = sets.distant
    condition = sets.condition

    if use_reduction and distant:
        key = (tau, cfg.k)
        if reduction_cache is not None and key in reduction_cache:
            distant = reduction_cache[key].kept
        else:
            reduction = prune_distant_sources(graph, bundles, tau, ts, cfg)
            if reduction_cache is not None:
                reduction_cache[key] = reduction
            distant = reduction.kept

    target = LaggedNode(bundles.target, 0)
    cond_list = sorted(condition)

    if not recent and not distant:
        shared = extract_shared_blocks(data, [[target], cond_list])
        zero = PIDResult.zero()
        return HistoryDecomposition(
            tau=tau, order=order, k=cfg.k, total=0.0, immediate=0.0,
            distant=0.0, pid_immediate=zero, pid_distant=zero, pid_total=zero,
            sample_count=shared.n_rows, immediate_size=0, distant_size=0,
            condition_size=len(cond_list), chain_residual=0.0)

    v_m, v_n = split_by_bundle(recent, bundles)
    w_m, w_n = split_by_bundle(distant, bundles)
    v_list = sorted(v_m) + sorted(v_n)
    w_list = sorted(w_m) + sorted(w_n)
    shared = extract_shared_blocks(data, [[target], v_list, w_list, cond_list])
    if shared.n_rows < cfg.k + 2:
        raise InsufficientDataError(
            f"tau={tau}: only {shared.n_rows} complete-case rows; "
            f"need >= {cfg.k + 2} for k={cfg.k}",
            module="analysis", operation="analyze_at_lag")
    z_blk, v_blk, w_blk, f_blk = shared.blocks
    fw_blk = np.hstack([f_blk, w_blk])

    if recent:
        pid_immediate = pid_from_blocks(z_blk, v_blk[:, :len(v_m)],
                                        v_blk[:, len(v_m):], fw_blk, cfg)
        immediate = pid_immediate.total
    else:
        pid_immediate = PIDResult.zero()
        immediate = 0.0
    if distant:
        pid_distant = pid_from_blocks(z_blk, w_blk[:, :len(w_m)],
                                      w_blk[:, len(w_m):], f_blk, cfg)
        dist_value = pid_distant.total
    else:
        pid_distant = PIDResult.zero()
        dist_value = 0.0
    if recent and distant:
        total = fp_cmi(z_blk, v_blk, f_blk, cfg).value
    elif recent:
        total = immediate  # no distant set: same conditioning, same estimate
    else:
        total = 0.0

    pid_total_direct = None
    if direct_total_pid and recent:
        pid_total_direct = pid_from_blocks(z_blk, v_blk[:, :len(v_m)],
                                           v_blk[:, len(v_m):], f_blk, cfg)

    return HistoryDecomposition(
        tau=tau, order=order, k=cfg.k, total=total, immediate=immediate,
        distant=dist_value, pid_immediate=pid_immediate,
        pid_distant=pid_distant, pid_total=pid_immediate.add(pid_distant),
        sample_count=shared.n_rows, immediate_size=len(v_list),
        distant_size=len(w_list), condition_size=len(cond_list),
        chain_residual=total - immediate - dist_value,
        pid_total_direct=pid_total_direct)


_ERROR_CODES = {
    "InsufficientDataError": "insufficient_data",
    "DegenerateGeometryError": "degenerate_geometry",
    "DegenerateVariableError": "degenerate_variable",
}


def sweep(ts: TimeSeriesSet, graph: StationaryGraph, bundles: BundleSpec,
          config: SweepConfig, *, reduction_cache: dict | None = None) -> list[SweepCell]:
    """Evaluate the full (order, k, tau) grid.

    Individual cell failures become gap cells instead of aborting the sweep;
    only a sweep in which every cell failed raises. Reduction results are
    cached per (tau, k) and shared across orders (pass ``reduction_cache``
    to inspect them afterwards). Output is sorted by (order, k, tau).
    """
    cells: list[SweepCell] = []
    cache: dict = {} if reduction_cache is None else reduction_cache
    for order in sorted(config.orders):
        for k in sorted(config.k_values):
            est = replace(config.estimator, k=k)
            for tau in config.tau_values:
                try:
                    record = analyze_at_lag(
                        ts, graph, bundles, tau, order, est,
                        use_reduction=config.use_reduction,
                        reduction_cache=cache,
                        direct_total_pid=config.direct_total_pid)
                    cells.append(SweepCell(order, k, tau, record))
                except BundleInfoError as exc:
                    code = _ERROR_CODES.get(type(exc).__name__,
                                            type(exc).__name__.lower())
                    cells.append(SweepCell(order, k, tau, None, error=code))
    if cells and all(cell.record is None for cell in cells):
        raise SweepError("every sweep cell failed; first error: "
                         f"{cells[0].error}", module="analysis",
                         operation="sweep")
    cells.sort(key=lambda c: (int(c.order), c.k, c.tau))
    return cells


def _fmt(value: float) -> str:
    return repr(float(value))


def write_sweep_csv(cells, path) -> None:
    """Emit the fixed-schema sweep CSV; gap cells keep empty numeric fields."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for cell in cells:
            if cell.record is None:
                writer.writerow([int(cell.order), cell.k, cell.tau]
                                + [""] * (len(SWEEP_COLUMNS) - 4)
                                + [cell.error or "error"])
                continue
            r = cell.record
            writer.writerow([
                int(r.order), r.k, r.tau, r.sample_count,
                r.immediate_size, r.distant_size, r.condition_size,
                _fmt(r.total), _fmt(r.immediate), _fmt(r.distant),
                _fmt(r.chain_residual),
                *(_fmt(v) for v in r.pid_immediate.components()),
                *(_fmt(v) for v in r.pid_distant.components()),
                *(_fmt(v) for v in r.pid_total.components()),
                "",
            ])


def read_sweep_csv(path) -> list[dict[str, str]]:
    """Read a sweep CSV back as raw string records (values left verbatim)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path} is empty", module="analysis",
                             operation="read_sweep_csv") from None
        if tuple(header) != SWEEP_COLUMNS:
            raise ParseError(f"{path} does not carry the sweep schema",
                             module="analysis", operation="read_sweep_csv")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SWEEP_COLUMNS):
                raise ParseError(f"malformed sweep row at line {lineno}",
                                 module="analysis", operation="read_sweep_csv")
            records.append(dict(zip(SWEEP_COLUMNS, row)))
    return records

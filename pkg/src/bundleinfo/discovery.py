"""Two-stage lagged-link discovery.

Stage 1 screens every ordered (source, lag, destination) candidate with an
MI permutation test; stage 2 repeatedly re-tests surviving links with a CMI
permutation test conditioned on the strongest currently-known parents of
both endpoints, removing links that fail. This is a deliberately compact,
PC-stable-flavored procedure: condition sets within one sweep are taken
from the sweep-start graph and removals apply between sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolationError
from .estimators import EstimatorConfig, _permutation_test, fp_cmi
from .timeseries import TimeSeriesSet, extract_shared_blocks, standardize
from .tsgraph import LaggedEdge, LaggedNode, StationaryGraph

__all__ = ["DiscoveryConfig", "LinkTest", "DiscoveryResult", "discover_graph",
           "format_report"]

_MAX_SWEEPS = 10


@dataclass(frozen=True)
class DiscoveryConfig:
    max_lag: int
    alpha: float = 0.05
    n_perm: int = 99
    max_condition_size: int = 3
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        if self.max_lag < 1:
            raise ContractViolationError("max_lag must be >= 1",
                                         module="discovery")
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolationError("alpha must lie in (0, 1)",
                                         module="discovery")
        if self.n_perm < 19:
            raise ContractViolationError("n_perm must be >= 19",
                                         module="discovery")
        if self.max_condition_size < 0:
            raise ContractViolationError("max_condition_size must be >= 0",
                                         module="discovery")
        if (1.0 / (self.n_perm + 1.0)) >= self.alpha:
            raise ContractViolationError(
                f"n_perm={self.n_perm} cannot resolve alpha={self.alpha}; "
                f"smallest attainable p-value is {1.0 / (self.n_perm + 1.0):.4f}",
                module="discovery", hint="raise n_perm or alpha")


@dataclass(frozen=True)
class LinkTest:
    """One independence test performed during discovery."""

    stage: int
    sweep: int
    src: str
    lag: int
    dst: str
    condition: tuple[LaggedNode, ...]
    statistic: float
    p_value: float
    removed: bool


@dataclass(frozen=True)
class DiscoveryResult:
    graph: StationaryGraph
    stage1_graph: StationaryGraph
    records: tuple[LinkTest, ...]
    converged: bool


def _test_seed(base: int, *parts: int) -> int:
    seq = np.random.SeedSequence([base, *parts])
    return int(seq.generate_state(1)[0])


def _strongest_parents(weights: dict[tuple[str, int, str], float],
                       src: str, lag: int, dst: str,
                       cap: int) -> tuple[LaggedNode, ...]:
    """Top parents of both endpoints by current weight, excluding the tested source."""
    tested = LaggedNode(src, lag)
    candidates: dict[LaggedNode, float] = {}
    for (p_src, p_lag, p_dst), weight in weights.items():
        if p_dst == dst:
            node = LaggedNode(p_src, p_lag)
            if node != tested:
                candidates[node] = max(candidates.get(node, 0.0), weight)
        if p_dst == src:
            node = LaggedNode(p_src, p_lag + lag)
            candidates[node] = max(candidates.get(node, 0.0), weight)
    ranked = sorted(candidates.items(), key=lambda item: (-item[1], item[0]))
    return tuple(node for node, _ in ranked[:cap])


def discover_graph(ts: TimeSeriesSet, cfg: DiscoveryConfig) -> DiscoveryResult:
    """Learn a stationary lag graph from data.

    Deterministic given the estimator seed: every individual test derives
    its own RNG stream from (seed, stage, endpoints, lag, sweep). Surviving
    edges carry their final CMI statistic (floored at 0) as weight.
    """
    data = standardize(ts)
    names = data.variable_names
    base_seed = cfg.estimator.seed
    records: list[LinkTest] = []

    # Stage 1: pairwise MI screening over all ordered pairs and lags.
    weights: dict[tuple[str, int, str], float] = {}
    for d_idx, dst in enumerate(names):
        for s_idx, src in enumerate(names):
            for lag in range(1, cfg.max_lag + 1):
                shared = extract_shared_blocks(
                    data, [[LaggedNode(src, lag)], [LaggedNode(dst, 0)]])
                est_cfg = replace(cfg.estimator,
                                  seed=_test_seed(base_seed, 1, s_idx, lag, d_idx))
                stat, p = _permutation_test(fp_cmi, shared.blocks[0],
                                            shared.blocks[1], None, est_cfg,
                                            cfg.n_perm)
                keep = p < cfg.alpha
                records.append(LinkTest(1, 0, src, lag, dst, (), stat, p,
                                        removed=not keep))
                if keep:
                    weights[(src, lag, dst)] = max(0.0, stat)
    stage1_graph = StationaryGraph(
        names, [LaggedEdge(s, l, d, w) for (s, l, d), w in weights.items()])

    # Stage 2: CMI pruning conditioned on the strongest current parents.
    converged = len(weights) == 0
    for sweep in range(1, _MAX_SWEEPS + 1):
        snapshot = dict(weights)
        removals: list[tuple[str, int, str]] = []
        updates: dict[tuple[str, int, str], float] = {}
        for (src, lag, dst) in sorted(snapshot):
            s_idx, d_idx = names.index(src), names.index(dst)
            condition = _strongest_parents(snapshot, src, lag, dst,
                                           cfg.max_condition_size)
            shared = extract_shared_blocks(
                data, [[LaggedNode(src, lag)], [LaggedNode(dst, 0)],
                       list(condition)])
            est_cfg = replace(cfg.estimator,
                              seed=_test_seed(base_seed, 2, sweep, s_idx, lag,
                                              d_idx))
            stat, p = _permutation_test(fp_cmi, shared.blocks[0],
                                        shared.blocks[1], shared.blocks[2],
                                        est_cfg, cfg.n_perm)
            removed = p >= cfg.alpha
            records.append(LinkTest(2, sweep, src, lag, dst, condition, stat,
                                    p, removed=removed))
            if removed:
                removals.append((src, lag, dst))
            else:
                updates[(src, lag, dst)] = max(0.0, stat)
        weights.update(updates)
        for key in removals:
            del weights[key]
        if not removals:
            converged = True
            break

    graph = StationaryGraph(
        names, [LaggedEdge(s, l, d, w) for (s, l, d), w in weights.items()])
    return DiscoveryResult(graph=graph, stage1_graph=stage1_graph,
                           records=tuple(records), converged=converged)


def format_report(result: DiscoveryResult) -> str:
    """Human-readable log of every test, p-value, and removal."""
    lines = ["link discovery report", "====================="]
    for rec in result.records:
        cond = ",".join(str(n) for n in rec.condition) or "-"
        verdict = "removed" if rec.removed else "kept"
        lines.append(
            f"stage {rec.stage} sweep {rec.sweep}: {rec.src}@{rec.lag}->{rec.dst}"
            f" | cond [{cond}] | stat {rec.statistic:+.6f}"
            f" | p {rec.p_value:.4f} | {verdict}")
    lines.append(f"converged: {'yes' if result.converged else 'NO (sweep cap hit)'}")
    lines.append("final edges: " + (", ".join(
        f"{e.src}@{e.lag}->{e.dst} (w={e.weight:.4f})"
        for e in sorted(result.graph.edges)) or "none"))
    return "\n".join(lines) + "\n"

"""Information-weighted transitive reduction of the unrolled lag graph.

Edges are weighted with momentary information transfer (Runge et al.,
Phys. Rev. E 86, 061121, 2012): the CMI between the two linked nodes given
both nodes' parents. A direct edge is redundant when some indirect path
can carry at least as much: when the bottleneck (minimum edge weight along
the path, maximized over paths) strictly exceeds the direct weight. Pruning
redundant edges and then dropping distant-history nodes that lost all their
links into the recent window shrinks the conditioning dimension of the
history decomposition.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Mapping

from .errors import ContractViolationError, InsufficientDataError
from .estimators import EstimatorConfig, fp_cmi
from .timeseries import TimeSeriesSet, extract_shared_blocks, standardize
from .tsgraph import (
    BundleSpec,
    LaggedEdge,
    LaggedNode,
    StationaryGraph,
    distant_sources,
    parents_of,
)

__all__ = [
    "WeightedUnrolledGraph",
    "EdgeDecision",
    "DistantReduction",
    "transfer_weight",
    "weighted_transitive_reduction",
    "weighted_transitive_reduction_report",
    "prune_distant_sources",
]


@dataclass(frozen=True)
class WeightedUnrolledGraph:
    """Finite unrolled window of lagged nodes with weighted forward edges."""

    nodes: frozenset[LaggedNode]
    edges: tuple[tuple[LaggedNode, LaggedNode, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        edges = tuple(sorted((src, dst, float(w)) for src, dst, w in self.edges))
        object.__setattr__(self, "edges", edges)
        seen = set()
        for src, dst, weight in edges:
            if src.lag <= dst.lag:
                raise ContractViolationError(
                    f"edge {src}->{dst} does not advance time",
                    module="graph_reduction")
            if not weight >= 0:
                raise ContractViolationError(
                    f"edge {src}->{dst} has negative weight {weight}",
                    module="graph_reduction")
            if src not in self.nodes or dst not in self.nodes:
                raise ContractViolationError(
                    f"edge {src}->{dst} references a node outside the graph",
                    module="graph_reduction")
            if (src, dst) in seen:
                raise ContractViolationError(
                    f"parallel edges between {src} and {dst}",
                    module="graph_reduction")
            seen.add((src, dst))


@dataclass(frozen=True)
class EdgeDecision:
    """Outcome of examining one edge during the reduction."""

    src: LaggedNode
    dst: LaggedNode
    weight: float
    removed: bool
    bottleneck: float | None
    path: tuple[LaggedNode, ...]


@dataclass(frozen=True)
class DistantReduction:
    """Result of pruning the distant-history node set."""

    kept: frozenset[LaggedNode]
    decisions: tuple[EdgeDecision, ...]
    edge_weights: Mapping[LaggedEdge, float]

    @property
    def removed_edges(self) -> tuple[EdgeDecision, ...]:
        return tuple(d for d in self.decisions if d.removed)


def _widest_path(adjacency, src: LaggedNode, dst: LaggedNode,
                 skip) -> tuple[float, tuple[LaggedNode, ...]] | None:
    """Max-bottleneck path src -> dst, excluding the direct edge ``skip``.

    Dijkstra with max-min relaxation; exact because edge weights are finite
    and non-negative. Returns None when no indirect path exists.
    """
    best: dict[LaggedNode, float] = {src: float("inf")}
    prev: dict[LaggedNode, LaggedNode] = {}
    heap = [(-float("inf"), src)]
    done: set[LaggedNode] = set()
    while heap:
        neg, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dst:
            path = [dst]
            while path[-1] != src:
                path.append(prev[path[-1]])
            return -neg, tuple(reversed(path))
        for nxt, weight in adjacency.get(node, ()):
            if (node, nxt) == skip:
                continue
            cand = min(-neg, weight)
            if cand > best.get(nxt, -float("inf")):
                best[nxt] = cand
                prev[nxt] = node
                heapq.heappush(heap, (-cand, nxt))
    return None


def weighted_transitive_reduction_report(
        wg: WeightedUnrolledGraph) -> tuple[WeightedUnrolledGraph,
                                            tuple[EdgeDecision, ...]]:
    """Reduce the graph and report every per-edge decision.

    Edges are examined in ascending weight order (ties broken by node
    order) and removals take effect immediately, so each bottleneck is
    computed on the current graph without the edge under test. An edge is
    removed only when the bottleneck strictly exceeds its weight; ties keep
    the direct edge.
    """
    adjacency: dict[LaggedNode, list[tuple[LaggedNode, float]]] = {}
    for src, dst, weight in wg.edges:
        adjacency.setdefault(src, []).append((dst, weight))
    order = sorted(wg.edges, key=lambda e: (e[2], e[0], e[1]))
    decisions = []
    for src, dst, weight in order:
        found = _widest_path(adjacency, src, dst, (src, dst))
        if found is not None and found[0] > weight:
            adjacency[src] = [(v, w) for v, w in adjacency[src] if v != dst]
            decisions.append(EdgeDecision(src, dst, weight, True,
                                          found[0], found[1]))
        else:
            decisions.append(EdgeDecision(
                src, dst, weight, False,
                None if found is None else found[0],
                () if found is None else found[1]))
    surviving = tuple((src, dst, w)
                      for src, lst in adjacency.items() for dst, w in lst)
    return (WeightedUnrolledGraph(wg.nodes, surviving), tuple(decisions))


def weighted_transitive_reduction(wg: WeightedUnrolledGraph) -> WeightedUnrolledGraph:
    """Remove every edge dominated by a stronger indirect path."""
    return weighted_transitive_reduction_report(wg)[0]


def transfer_weight(g: StationaryGraph, edge: LaggedEdge, ts: TimeSeriesSet,
                    cfg: EstimatorConfig) -> float:
    """Momentary information transfer of one edge, clamped at 0.

    CMI between source and destination given the destination's other
    parents and all of the source's parents, on one shared complete-case
    row set. Negative kNN estimates are floored so downstream bottleneck
    comparisons stay meaningful.
    """
    if (edge.src, edge.lag, edge.dst) not in {(e.src, e.lag, e.dst)
                                              for e in g.edges}:
        raise ContractViolationError(f"edge {edge} is not in the graph",
                                     module="graph_reduction",
                                     operation="transfer_weight")
    src_node = LaggedNode(edge.src, edge.lag)
    dst_node = LaggedNode(edge.dst, 0)
    condition = (parents_of(g, dst_node) - {src_node}) | parents_of(g, src_node)
    shared = extract_shared_blocks(standardize(ts),
                                   [[src_node], [dst_node], sorted(condition)])
    if shared.n_rows < cfg.k + 2:
        raise InsufficientDataError(
            f"{shared.n_rows} rows left for edge {edge}; need >= {cfg.k + 2}",
            module="graph_reduction", operation="transfer_weight")
    value = fp_cmi(shared.blocks[0], shared.blocks[1], shared.blocks[2], cfg).value
    return max(0.0, value)


def prune_distant_sources(g: StationaryGraph, b: BundleSpec, tau: int,
                          ts: TimeSeriesSet,
                          cfg: EstimatorConfig) -> DistantReduction:
    """Drop distant-history nodes whose links into the recent window are redundant.

    The lag graph is unrolled over ``[0, tau + max_lag]``; every edge
    incident to the distant set or the recent bundled window is weighted by
    momentary information transfer (one estimate per stationary edge; the
    weight is shared by all its unrolled copies). After the weighted
    transitive reduction, a distant node is kept if it retains at least one
    direct edge into the recent window; distant nodes that parent the
    target directly are always kept.
    """
    distant = distant_sources(g, b, tau)
    if not distant:
        raise ContractViolationError(
            f"distant source set is empty at tau={tau}; nothing to prune",
            module="graph_reduction", operation="prune_distant_sources")
    recent = {LaggedNode(v, l) for v in b.bundled for l in range(1, tau + 1)}
    relevant = distant | recent
    window = tau + g.max_lag

    weights: dict[LaggedEdge, float] = {}
    unrolled: list[tuple[LaggedNode, LaggedNode, float]] = []
    nodes: set[LaggedNode] = set(relevant)
    for edge in sorted(g.edges):
        for dst_lag in range(0, window - edge.lag + 1):
            src = LaggedNode(edge.src, dst_lag + edge.lag)
            dst = LaggedNode(edge.dst, dst_lag)
            if src not in relevant and dst not in relevant:
                continue
            key = LaggedEdge(edge.src, edge.lag, edge.dst)
            if key not in weights:
                weights[key] = transfer_weight(g, key, ts, cfg)
            unrolled.append((src, dst, weights[key]))
            nodes.add(src)
            nodes.add(dst)

    reduced, decisions = weighted_transitive_reduction_report(
        WeightedUnrolledGraph(frozenset(nodes), tuple(unrolled)))
    still_linked = {src for src, dst, _ in reduced.edges
                    if src in distant and dst in recent}
    target_parents = parents_of(g, LaggedNode(b.target, 0))
    kept = frozenset(node for node in distant
                     if node in still_linked or node in target_parents)
    return DistantReduction(kept=kept, decisions=decisions,
                            edge_weights=dict(weights))

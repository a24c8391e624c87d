"""Stationary lagged graphs over time-series variables.

The graph stores one edge template per (source variable, lag, destination
variable) with lag >= 1, so every edge points forward in time and the
unrolled graph is acyclic by construction. Time-translation invariance is
assumed throughout: the parents of a node at lag ``l`` are the parents of
the lag-0 node shifted by ``l``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import ContractViolationError, SchemaError, UnknownVariableError

__all__ = [
    "LaggedNode",
    "LaggedEdge",
    "StationaryGraph",
    "BundleSpec",
    "Order",
    "AnalysisNodeSets",
    "parents_of",
    "immediate_sources",
    "distant_sources",
    "condition_set",
    "split_by_bundle",
    "compute_node_sets",
    "graph_to_dict",
    "graph_from_dict",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True, order=True)
class LaggedNode:
    """A variable at a non-negative lag behind the anchor time (lag 0 = now)."""

    variable: str
    lag: int

    def __post_init__(self):
        if self.lag < 0:
            raise ContractViolationError(
                f"lagged node {self.variable} has negative lag {self.lag}",
                module="tsgraph")

    def shifted(self, delta: int) -> "LaggedNode":
        return LaggedNode(self.variable, self.lag + delta)

    def __str__(self) -> str:
        return f"{self.variable}@{self.lag}"


@dataclass(frozen=True, order=True)
class LaggedEdge:
    """Directed lagged influence ``src`` (lag steps earlier) -> ``dst`` (now)."""

    src: str
    lag: int
    dst: str
    weight: float | None = None

    def __post_init__(self):
        if self.lag < 1:
            raise ContractViolationError(
                f"edge {self.src}->{self.dst} must have lag >= 1, got {self.lag}",
                module="tsgraph",
                hint="contemporaneous (lag-0) links are not representable")
        if self.weight is not None and not self.weight >= 0:
            raise ContractViolationError(
                f"edge {self.src}-{self.lag}->{self.dst} has negative weight",
                module="tsgraph")

    def __str__(self) -> str:
        return f"{self.src}@{self.lag}->{self.dst}"


class Order(IntEnum):
    """Approximation order of the non-bundled condition set.

    ORDER0 conditions on nothing; ORDER1 conditions on the target's parents
    among the non-bundled (remainder) variables.
    """

    ORDER0 = 0
    ORDER1 = 1


class StationaryGraph:
    """Immutable lagged edge set over a fixed variable list."""

    __slots__ = ("variables", "edges", "_parents_by_dst")

    def __init__(self, variables, edges=()):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise SchemaError("duplicate variable names in graph", module="tsgraph")
        edge_set = frozenset(edges)
        triples = {(e.src, e.lag, e.dst) for e in edge_set}
        if len(triples) != len(edge_set):
            raise SchemaError(
                "duplicate (src, lag, dst) triples with conflicting weights",
                module="tsgraph")
        known = set(variables)
        for e in edge_set:
            if e.src not in known or e.dst not in known:
                raise UnknownVariableError(
                    f"edge {e} references a variable outside {sorted(known)}",
                    module="tsgraph")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "edges", edge_set)
        by_dst: dict[str, list[tuple[str, int]]] = {v: [] for v in variables}
        for e in sorted(edge_set):
            by_dst[e.dst].append((e.src, e.lag))
        object.__setattr__(self, "_parents_by_dst",
                           {k: tuple(v) for k, v in by_dst.items()})

    def __setattr__(self, name, value):
        raise AttributeError("StationaryGraph is immutable")

    def __eq__(self, other):
        return (isinstance(other, StationaryGraph)
                and self.variables == other.variables
                and self.edges == other.edges)

    def __hash__(self):
        return hash((self.variables, self.edges))

    def __repr__(self):
        return f"StationaryGraph(variables={self.variables!r}, n_edges={len(self.edges)})"

    @property
    def max_lag(self) -> int:
        return max((e.lag for e in self.edges), default=0)

    def weight_of(self, src: str, lag: int, dst: str) -> float | None:
        for e in self.edges:
            if (e.src, e.lag, e.dst) == (src, lag, dst):
                return e.weight
        raise UnknownVariableError(f"no edge {src}@{lag}->{dst}", module="tsgraph")


@dataclass(frozen=True)
class BundleSpec:
    """Disjoint variable groups whose joint influence on ``target`` is analyzed."""

    target: str
    bundle_m: frozenset[str]
    bundle_n: frozenset[str]

    def __init__(self, target, bundle_m, bundle_n):
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "bundle_m", frozenset(bundle_m))
        object.__setattr__(self, "bundle_n", frozenset(bundle_n))
        if not self.bundle_m or not self.bundle_n:
            raise ContractViolationError("both bundles must be non-empty",
                                         module="tsgraph")
        if self.bundle_m & self.bundle_n:
            raise ContractViolationError(
                f"bundles overlap on {sorted(self.bundle_m & self.bundle_n)}",
                module="tsgraph")

    @property
    def bundled(self) -> frozenset[str]:
        return self.bundle_m | self.bundle_n


@dataclass(frozen=True)
class AnalysisNodeSets:
    """Markov-reduced node sets used by the history decomposition at one lag.

    ``immediate`` holds the target's parents inside the recent bundled window
    (lags 1..tau), ``distant`` the parents of that window lying deeper in the
    bundled past (lag > tau), and ``condition`` the non-bundled conditioning
    nodes (empty at order 0).
    """

    immediate: frozenset[LaggedNode]
    distant: frozenset[LaggedNode]
    condition: frozenset[LaggedNode]
    tau: int
    order: Order


def _require_variable(g: StationaryGraph, name: str):
    if name not in g._parents_by_dst:
        raise UnknownVariableError(
            f"unknown variable {name!r}; graph defines {sorted(g.variables)}",
            module="tsgraph", operation="parents_of")


def parents_of(g: StationaryGraph, node: LaggedNode) -> frozenset[LaggedNode]:
    """Parents of an unrolled node, shifted by its own lag (stationarity)."""
    _require_variable(g, node.variable)
    return frozenset(LaggedNode(src, node.lag + lag)
                     for src, lag in g._parents_by_dst[node.variable])


def immediate_sources(g: StationaryGraph, b: BundleSpec, tau: int) -> frozenset[LaggedNode]:
    """Target parents inside the recent bundled window: lags 1..tau."""
    if tau < 1:
        raise ContractViolationError(f"tau must be >= 1, got {tau}", module="tsgraph")
    bundled = b.bundled
    return frozenset(p for p in parents_of(g, LaggedNode(b.target, 0))
                     if p.variable in bundled and 1 <= p.lag <= tau)


def distant_sources(g: StationaryGraph, b: BundleSpec, tau: int) -> frozenset[LaggedNode]:
    """Bundled nodes beyond lag tau that parent the recent window or the target.

    The union with the target's own parents goes beyond the minimal
    parent-of-the-window definition: without it, a direct bundled parent of
    the target at lag > tau would fall out of both node sets and break the
    total = immediate + distant chain identity at small tau. The extension
    is empty once tau exceeds the target's maximum parent lag.
    """
    if tau < 1:
        raise ContractViolationError(f"tau must be >= 1, got {tau}", module="tsgraph")
    bundled = b.bundled
    candidates: set[LaggedNode] = set(parents_of(g, LaggedNode(b.target, 0)))
    for variable in sorted(bundled):
        for lag in range(1, tau + 1):
            candidates |= parents_of(g, LaggedNode(variable, lag))
    return frozenset(p for p in candidates
                     if p.variable in bundled and p.lag > tau)


def condition_set(g: StationaryGraph, b: BundleSpec, order: Order) -> frozenset[LaggedNode]:
    """Non-bundled conditioning nodes for the requested approximation order."""
    order = Order(order)
    if order is Order.ORDER0:
        return frozenset()
    bundled = b.bundled
    return frozenset(p for p in parents_of(g, LaggedNode(b.target, 0))
                     if p.variable not in bundled)


def split_by_bundle(nodes, b: BundleSpec) -> tuple[frozenset[LaggedNode], frozenset[LaggedNode]]:
    """Partition bundled nodes into their bundle-m and bundle-n parts."""
    m_part, n_part = set(), set()
    for node in nodes:
        if node.variable in b.bundle_m:
            m_part.add(node)
        elif node.variable in b.bundle_n:
            n_part.add(node)
        else:
            raise ContractViolationError(
                f"node {node} lies in neither bundle", module="tsgraph",
                operation="split_by_bundle")
    return frozenset(m_part), frozenset(n_part)


def compute_node_sets(g: StationaryGraph, b: BundleSpec, tau: int,
                      order: Order) -> AnalysisNodeSets:
    return AnalysisNodeSets(
        immediate=immediate_sources(g, b, tau),
        distant=distant_sources(g, b, tau),
        condition=condition_set(g, b, order),
        tau=tau,
        order=Order(order),
    )


# ---------------------------------------------------------------------------
# JSON persistence (lossless round trip)
# ---------------------------------------------------------------------------

def graph_to_dict(g: StationaryGraph) -> dict:
    return {
        "variables": list(g.variables),
        "edges": [
            {"src": e.src, "lag": e.lag, "dst": e.dst, "weight": e.weight}
            for e in sorted(g.edges)
        ],
    }


def graph_from_dict(data: dict) -> StationaryGraph:
    try:
        variables = data["variables"]
        raw_edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"graph document missing field: {exc}",
                          module="tsgraph", operation="load_graph") from exc
    edges = []
    for rec in raw_edges:
        try:
            edges.append(LaggedEdge(rec["src"], int(rec["lag"]), rec["dst"],
                                    None if rec.get("weight") is None
                                    else float(rec["weight"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad edge record {rec!r}: {exc}",
                              module="tsgraph", operation="load_graph") from exc
    return StationaryGraph(variables, edges)


def save_graph(g: StationaryGraph, path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=2) + "\n",
                          encoding="utf-8")


def load_graph(path) -> StationaryGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"graph file {path} is not valid JSON: {exc}",
                          module="tsgraph", operation="load_graph") from exc
    return graph_from_dict(data)

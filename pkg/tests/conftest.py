"""Shared fixtures and independent oracle implementations.

The oracles here deliberately re-derive results through a different route
than the package (dense distance matrices, exhaustive path enumeration,
plug-in discrete information) so the tests stay two-sided.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.special import digamma

from bundleinfo.tsgraph import LaggedNode

# ---------------------------------------------------------------------------
# Brute-force kNN estimators (dense distance matrices, strict counts)
# ---------------------------------------------------------------------------


def chebyshev_matrix(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    if points.shape[1] == 0:
        return np.zeros((points.shape[0], points.shape[0]))
    return np.max(np.abs(diff), axis=2)


def brute_kth_distance(points: np.ndarray, k: int) -> np.ndarray:
    dist = chebyshev_matrix(points)
    np.fill_diagonal(dist, np.inf)
    return np.sort(dist, axis=1)[:, k - 1]


def brute_strict_counts(points: np.ndarray, eps: np.ndarray) -> np.ndarray:
    dist = chebyshev_matrix(points)
    np.fill_diagonal(dist, np.inf)
    return np.sum(dist < eps[:, None], axis=1)


def brute_cmi(x: np.ndarray, y: np.ndarray, z: np.ndarray | None,
              k: int) -> float:
    """Frenzel-Pompe CMI by full distance matrices (no jitter applied)."""
    n = x.shape[0]
    z = np.empty((n, 0)) if z is None else z
    joint = np.hstack([x, y, z])
    eps = brute_kth_distance(joint, k)
    n_xz = brute_strict_counts(np.hstack([x, z]), eps)
    n_yz = brute_strict_counts(np.hstack([y, z]), eps)
    n_z = brute_strict_counts(z, eps) if z.shape[1] else np.full(n, n - 1)
    return float(digamma(k) - np.mean(digamma(n_xz + 1) + digamma(n_yz + 1)
                                      - digamma(n_z + 1)))


def brute_entropy(x: np.ndarray, k: int) -> float:
    n, dim = x.shape
    eps = brute_kth_distance(x, k)
    return float(digamma(n) - digamma(k) + dim * np.mean(np.log(2.0 * eps)))


# ---------------------------------------------------------------------------
# Discrete plug-in information (for PID oracles)
# ---------------------------------------------------------------------------


def plugin_entropy(joint: np.ndarray, axes: tuple[int, ...]) -> float:
    """Shannon entropy (nats) of the marginal over ``axes`` of a joint table."""
    keep = tuple(i for i in range(joint.ndim) if i not in axes)
    marg = joint.sum(axis=keep) if keep else joint
    probs = marg.reshape(-1)
    probs = probs[probs > 0]
    return float(-np.sum(probs * np.log(probs)))


def plugin_mi(joint: np.ndarray, axes_a: tuple[int, ...],
              axes_b: tuple[int, ...]) -> float:
    return (plugin_entropy(joint, axes_a) + plugin_entropy(joint, axes_b)
            - plugin_entropy(joint, axes_a + axes_b))


# ---------------------------------------------------------------------------
# Exhaustive bottleneck-path oracle for the weighted transitive reduction
# ---------------------------------------------------------------------------


def all_paths_bottleneck(edges: dict[tuple, float], src, dst) -> float | None:
    """Max over all simple src->dst paths (length >= 2) of the min edge weight."""
    adjacency: dict = {}
    for (u, v), w in edges.items():
        adjacency.setdefault(u, []).append((v, w))
    best: list[float] = []

    def walk(node, bottleneck):
        for nxt, w in adjacency.get(node, []):
            if node == src and nxt == dst:
                continue  # skip the direct edge
            cand = min(bottleneck, w)
            if nxt == dst:
                best.append(cand)
            else:
                walk(nxt, cand)

    walk(src, float("inf"))
    return max(best) if best else None


def oracle_reduction(edge_list: list[tuple]) -> set[tuple]:
    """Sequential reduction with enumerated-path bottlenecks.

    Mirrors the pinned procedure (ascending weight order, immediate
    removals, strict inequality) but computes every bottleneck by exhaustive
    enumeration instead of a widest-path search.
    """
    edges = {(u, v): w for u, v, w in edge_list}
    for u, v, w in sorted(edge_list, key=lambda e: (e[2], e[0], e[1])):
        if (u, v) not in edges:
            continue
        bottleneck = all_paths_bottleneck(edges, u, v)
        if bottleneck is not None and bottleneck > w:
            del edges[(u, v)]
    return {(u, v, w) for (u, v), w in edges.items()}


def random_dag_corpus(n_graphs: int, master_seed: int = 20240) -> list[list[tuple]]:
    """Random weighted DAGs (<= 6 nodes, <= 10 edges) with frequent weight ties."""
    corpus = []
    for i in range(n_graphs):
        rng = np.random.default_rng(master_seed + i)
        n_nodes = int(rng.integers(3, 7))
        nodes = [LaggedNode("n", lag) for lag in range(n_nodes)]
        pairs = [(a, b) for a in nodes for b in nodes if a.lag > b.lag]
        rng.shuffle(pairs)
        n_edges = int(rng.integers(2, 11))
        weights = rng.choice([0.5, 1.0, 1.0, 1.5, 2.0, 2.5], size=len(pairs))
        corpus.append([(u, v, float(w))
                       for (u, v), w in zip(pairs[:n_edges], weights)])
    return corpus


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


def correlated_gaussian(n: int, rho: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 1))
    y = rho * x + np.sqrt(1.0 - rho * rho) * rng.standard_normal((n, 1))
    return x, y

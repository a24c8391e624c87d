"""Synthetic systems with known lag structure and closed-form information.

Linear Gaussian vector-autoregressions are the primary oracle family:
their stationary autocovariances follow from a discrete Lyapunov equation
on the companion form, which makes every conditional mutual information
available in closed form. Coupled logistic maps provide a nonlinear
check without closed-form values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    ContractViolationError,
    InstabilityError,
    OracleDegenerateError,
    StationarityError,
)
from .timeseries import TimeSeriesSet
from .tsgraph import LaggedEdge, LaggedNode, StationaryGraph

__all__ = [
    "LinearVARSpec",
    "LogisticNetworkSpec",
    "gen_linear_var",
    "gen_logistic_network",
    "autocovariances",
    "gaussian_info_oracle",
    "companion_matrix",
    "spectral_radius",
]


@dataclass(frozen=True)
class LinearVARSpec:
    """Linear Gaussian VAR: X_t = sum_l A_l X_{t-l} + noise.

    ``coefficients`` holds (src, lag, dst, coefficient) with lag >= 1;
    ``noise_sd`` is one positive value for all variables or a per-variable
    mapping. Instantiation checks stationarity of the companion form.
    """

    variables: tuple[str, ...]
    coefficients: tuple[tuple[str, int, str, float], ...]
    noise_sd: float | Mapping[str, float] = 1.0
    length: int = 1000
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "coefficients",
                           tuple((s, int(l), d, float(c))
                                 for s, l, d, c in self.coefficients))
        if len(set(self.variables)) != len(self.variables):
            raise ContractViolationError("duplicate variable names",
                                         module="synth")
        known = set(self.variables)
        for src, lag, dst, _ in self.coefficients:
            if src not in known or dst not in known:
                raise ContractViolationError(
                    f"coefficient references unknown variable {src!r} or {dst!r}",
                    module="synth")
            if lag < 1:
                raise ContractViolationError("coefficient lags must be >= 1",
                                             module="synth")
        if self.length < 1 or self.burn_in < 0:
            raise ContractViolationError("length must be >= 1 and burn_in >= 0",
                                         module="synth")
        for name in self.variables:
            if not self.sd_of(name) > 0:
                raise ContractViolationError(
                    f"noise sd for {name!r} must be > 0", module="synth")
        radius = spectral_radius(self)
        if radius >= 1.0 - 1e-9:
            raise StationarityError(
                f"companion spectral radius {radius:.6f} >= 1; "
                "the specified system is not stationary",
                module="synth", operation="LinearVARSpec")

    def sd_of(self, name: str) -> float:
        if isinstance(self.noise_sd, Mapping):
            return float(self.noise_sd[name])
        return float(self.noise_sd)

    @property
    def max_lag(self) -> int:
        return max((lag for _, lag, _, _ in self.coefficients), default=1)

    def lag_matrices(self) -> list[np.ndarray]:
        """A_1..A_L with A_l[dst, src] = coefficient."""
        n = len(self.variables)
        index = {v: i for i, v in enumerate(self.variables)}
        mats = [np.zeros((n, n)) for _ in range(self.max_lag)]
        for src, lag, dst, coef in self.coefficients:
            mats[lag - 1][index[dst], index[src]] += coef
        return mats

    def true_graph(self) -> StationaryGraph:
        edges = [LaggedEdge(src, lag, dst)
                 for src, lag, dst, coef in self.coefficients if coef != 0.0]
        return StationaryGraph(self.variables, edges)


def companion_matrix(spec: LinearVARSpec) -> np.ndarray:
    n = len(spec.variables)
    lag = spec.max_lag
    mats = spec.lag_matrices()
    comp = np.zeros((n * lag, n * lag))
    comp[:n, :] = np.hstack(mats)
    if lag > 1:
        comp[n:, :-n] = np.eye(n * (lag - 1))
    return comp


def spectral_radius(spec: LinearVARSpec) -> float:
    if not spec.coefficients:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(spec)))))


def gen_linear_var(spec: LinearVARSpec) -> tuple[TimeSeriesSet, StationaryGraph]:
    """Simulate the VAR and return the data with its true lag graph."""
    rng = np.random.default_rng(spec.seed)
    n = len(spec.variables)
    lag = spec.max_lag
    mats = spec.lag_matrices()
    sds = np.array([spec.sd_of(v) for v in spec.variables])
    total = spec.burn_in + spec.length + lag
    data = np.zeros((total, n))
    noise = rng.standard_normal((total, n)) * sds
    for t in range(lag, total):
        acc = noise[t].copy()
        for l, mat in enumerate(mats, start=1):
            acc += mat @ data[t - l]
        data[t] = acc
    values = data[lag + spec.burn_in:]
    ts = TimeSeriesSet(spec.variables, values,
                       step_description=f"synthetic VAR (seed {spec.seed})")
    return ts, spec.true_graph()


def autocovariances(spec: LinearVARSpec, max_lag: int) -> list[np.ndarray]:
    """Gamma(0..max_lag) with Gamma(h)[i, j] = Cov(X_i(t), X_j(t-h)).

    Gamma(0..L-1) comes from the companion-state Lyapunov equation
    S = A S A' + Q; larger lags follow the Yule-Walker recursion.
    """
    n = len(spec.variables)
    lag = spec.max_lag
    comp = companion_matrix(spec)
    noise = np.zeros_like(comp)
    noise[:n, :n] = np.diag([spec.sd_of(v) ** 2 for v in spec.variables])
    state_cov = linalg.solve_discrete_lyapunov(comp, noise)
    state_cov = (state_cov + state_cov.T) / 2.0
    residual = np.max(np.abs(comp @ state_cov @ comp.T + noise - state_cov))
    scale = max(1.0, float(np.max(np.abs(state_cov))))
    if residual > 1e-12 * scale:
        raise OracleDegenerateError(
            f"Lyapunov solve residual {residual:.3e} exceeds tolerance",
            module="synth", operation="autocovariances")
    gammas = [state_cov[:n, j * n:(j + 1) * n] for j in range(lag)]
    mats = spec.lag_matrices()
    for h in range(lag, max_lag + 1):
        acc = np.zeros((n, n))
        for l, mat in enumerate(mats, start=1):
            acc += mat @ gammas[h - l]
        gammas.append(acc)
    return gammas[: max_lag + 1]


def _node_covariance(spec: LinearVARSpec,
                     nodes: Sequence[LaggedNode]) -> np.ndarray:
    index = {v: i for i, v in enumerate(spec.variables)}
    for node in nodes:
        if node.variable not in index:
            raise ContractViolationError(f"unknown variable {node.variable!r}",
                                         module="synth",
                                         operation="gaussian_info_oracle")
    span = max((abs(a.lag - b.lag) for a in nodes for b in nodes), default=0)
    gammas = autocovariances(spec, span)
    cov = np.empty((len(nodes), len(nodes)))
    for i, a in enumerate(nodes):
        for j, b in enumerate(nodes):
            h = b.lag - a.lag  # Cov(X_a(t-la), X_b(t-lb)) = Gamma(lb-la)[a, b]
            cov[i, j] = gammas[h][index[a.variable], index[b.variable]] if h >= 0 \
                else gammas[-h][index[b.variable], index[a.variable]]
    return cov


def _logdet(cov: np.ndarray, label: str) -> float:
    if cov.shape[0] == 0:
        return 0.0
    sign, value = np.linalg.slogdet(cov)
    if sign <= 0:
        raise OracleDegenerateError(
            f"singular covariance for {label} block",
            module="synth", operation="gaussian_info_oracle",
            hint="requested node sets are linearly dependent")
    return float(value)


def gaussian_info_oracle(spec: LinearVARSpec, x_nodes, y_nodes,
                         z_nodes=()) -> float:
    """Exact Gaussian CMI I(X;Y|Z) in nats for lagged node sets.

    Uses I = 1/2 * (logdet S_xz + logdet S_yz - logdet S_z - logdet S_xyz)
    on the stationary autocovariance implied by the specification. Empty
    X or Y returns 0.
    """
    x = sorted(set(x_nodes))
    y = sorted(set(y_nodes))
    z = sorted(set(z_nodes))
    if not x or not y:
        return 0.0
    nodes = x + y + z
    cov = _node_covariance(spec, nodes)
    nx, ny = len(x), len(y)
    idx_x = np.arange(nx)
    idx_y = np.arange(nx, nx + ny)
    idx_z = np.arange(nx + ny, len(nodes))
    idx_xz = np.concatenate([idx_x, idx_z])
    idx_yz = np.concatenate([idx_y, idx_z])
    value = 0.5 * (_logdet(cov[np.ix_(idx_xz, idx_xz)], "xz")
                   + _logdet(cov[np.ix_(idx_yz, idx_yz)], "yz")
                   - _logdet(cov[np.ix_(idx_z, idx_z)], "z")
                   - _logdet(cov, "xyz"))
    return float(value)


# ---------------------------------------------------------------------------
# Coupled logistic maps (nonlinear validation family)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogisticNetworkSpec:
    """Coupled logistic maps on [0, 1].

    Each variable evolves as x_i(t) = (1 - noise_weight) * f(u_i) +
    noise_weight * eta with f(u) = 4 u (1 - u), where u_i mixes the
    variable's own previous state (``self_weight``) with lagged inputs from
    ``couplings`` = (src, lag, dst, weight). Weights must be non-negative
    and, per destination, sum to at most 1 so the argument stays in [0, 1].
    """

    variables: tuple[str, ...]
    self_weight: float | Mapping[str, float] = 1.0
    couplings: tuple[tuple[str, int, str, float], ...] = ()
    noise_weight: float = 0.0
    burn_in: int = 500

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "couplings",
                           tuple((s, int(l), d, float(w))
                                 for s, l, d, w in self.couplings))
        known = set(self.variables)
        if not 0.0 <= self.noise_weight < 1.0:
            raise ContractViolationError("noise_weight must lie in [0, 1)",
                                         module="synth")
        for src, lag, dst, weight in self.couplings:
            if src not in known or dst not in known:
                raise ContractViolationError(
                    f"coupling references unknown variable {src!r} or {dst!r}",
                    module="synth")
            if lag < 1:
                raise ContractViolationError("coupling lags must be >= 1",
                                             module="synth")
            if weight < 0:
                raise ContractViolationError("coupling weights must be >= 0",
                                             module="synth")
        # per-destination weights summing above 1 are caught at simulation
        # time, when the trajectory actually leaves [0, 1]

    def self_weight_of(self, name: str) -> float:
        if isinstance(self.self_weight, Mapping):
            return float(self.self_weight[name])
        return float(self.self_weight)

    @property
    def max_lag(self) -> int:
        return max((lag for _, lag, _, _ in self.couplings), default=1)

    def true_graph(self) -> StationaryGraph:
        edges = {LaggedEdge(src, lag, dst)
                 for src, lag, dst, weight in self.couplings if weight > 0.0}
        edges |= {LaggedEdge(v, 1, v) for v in self.variables
                  if self.self_weight_of(v) > 0.0}
        return StationaryGraph(self.variables, edges)


def gen_logistic_network(spec: LogisticNetworkSpec, length: int,
                         seed: int) -> tuple[TimeSeriesSet, StationaryGraph]:
    """Iterate the coupled maps and return the data with the true graph."""
    if length < 1:
        raise ContractViolationError("length must be >= 1", module="synth")
    rng = np.random.default_rng(seed)
    n = len(spec.variables)
    index = {v: i for i, v in enumerate(spec.variables)}
    lag = spec.max_lag
    total = spec.burn_in + length + lag
    data = np.empty((total, n))
    data[:lag] = rng.random((lag, n))
    self_w = np.array([spec.self_weight_of(v) for v in spec.variables])
    nw = spec.noise_weight
    for t in range(lag, total):
        u = self_w * data[t - 1]
        for src, l, dst, weight in spec.couplings:
            u[index[dst]] += weight * data[t - l, index[src]]
        if np.any(u < 0.0) or np.any(u > 1.0):
            raise InstabilityError(
                f"trajectory left [0, 1] at step {t}",
                module="synth", operation="gen_logistic_network",
                hint="check that per-destination weights sum to <= 1")
        state = 4.0 * u * (1.0 - u)
        if nw > 0.0:
            state = (1.0 - nw) * state + nw * rng.random(n)
        data[t] = state
    values = data[lag + spec.burn_in:]
    ts = TimeSeriesSet(spec.variables, values,
                       step_description=f"coupled logistic maps (seed {seed})")
    return ts, spec.true_graph()

"""Two-source partial information decomposition with rescaled redundancy.

Redundancy follows the rescaled approach of Goodwell & Kumar (2017):
interpolate between the interaction-information floor R_min = max(0, -II)
and the minimum-source-information ceiling R_mmi = min(I_1, I_2) with the
normalized source dependency I_s = I(S1;S2|C) / min(H(S1|C), H(S2|C))
clipped to [0, 1]. Unique and synergistic terms then follow from the
standard accounting identities, so the four components add up to the total
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError
from .estimators import EstimatorConfig, fp_cmi, kl_entropy
from .timeseries import TimeSeriesSet, extract_shared_blocks, standardize
from .tsgraph import LaggedNode

__all__ = [
    "PIDInputs",
    "PIDResult",
    "pid_decompose",
    "pid_from_blocks",
    "pid_from_samples",
    "ENTROPY_FLOOR",
]

# Floor for the conditional-entropy normalizer; differential entropies of
# standardized continuous data can be <= 0, which the plain ratio cannot handle.
ENTROPY_FLOOR = 1e-6


@dataclass(frozen=True)
class PIDInputs:
    """Information quantities feeding one decomposition, all in nats.

    ``i_total`` = I(T; S1,S2 | C), ``i_1``/``i_2`` the single-source
    informations, ``i_sources`` = I(S1; S2 | C), and ``h_1``/``h_2`` the
    conditional source entropies used to normalize the source dependency.
    """

    i_total: float
    i_1: float
    i_2: float
    i_sources: float
    h_1: float
    h_2: float

    def __post_init__(self):
        for name in ("i_total", "i_1", "i_2", "i_sources", "h_1", "h_2"):
            if not math.isfinite(getattr(self, name)):
                raise ContractViolationError(f"{name} must be finite",
                                             module="pid")


@dataclass(frozen=True)
class PIDResult:
    """Non-negative decomposition components plus bookkeeping.

    ``total`` is the (sanitized) information that was decomposed; the four
    components sum to it exactly up to the recorded ``clamp_residual``.
    """

    redundant: float
    synergistic: float
    unique_m: float
    unique_n: float
    total: float
    source_dependency: float | None = None
    flags: tuple[str, ...] = ()
    clamp_residual: float = 0.0

    @classmethod
    def zero(cls, flags: tuple[str, ...] = ()) -> "PIDResult":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, flags=flags)

    def components(self) -> tuple[float, float, float, float]:
        return (self.redundant, self.synergistic, self.unique_m, self.unique_n)

    def add(self, other: "PIDResult") -> "PIDResult":
        """Component-wise sum (used for the entire-history line)."""
        return PIDResult(
            self.redundant + other.redundant,
            self.synergistic + other.synergistic,
            self.unique_m + other.unique_m,
            self.unique_n + other.unique_n,
            self.total + other.total,
            source_dependency=None,
            flags=tuple(sorted(set(self.flags) | set(other.flags))),
            clamp_residual=self.clamp_residual + other.clamp_residual,
        )


def pid_decompose(inputs: PIDInputs) -> PIDResult:
    """Decompose a total information into R / S / U_m / U_n.

    Noisy estimator inputs are sanitized first: the total is floored at 0
    and the single-source informations are clamped into [0, total]; every
    adjustment is recorded in ``flags``. After sanitation all four
    components are non-negative by algebra, so the final clamp only absorbs
    round-off (tracked in ``clamp_residual``).
    """
    flags: list[str] = []
    total = inputs.i_total
    if total < 0.0:
        total = 0.0
        flags.append("clamped_total")
    i_1 = min(max(inputs.i_1, 0.0), total)
    if i_1 != inputs.i_1:
        flags.append("clamped_i1")
    i_2 = min(max(inputs.i_2, 0.0), total)
    if i_2 != inputs.i_2:
        flags.append("clamped_i2")

    interaction = total - i_1 - i_2
    r_min = max(0.0, -interaction)
    r_mmi = max(0.0, min(i_1, i_2))
    denom = min(inputs.h_1, inputs.h_2)
    if denom <= ENTROPY_FLOOR and inputs.i_sources > 0.0:
        source_dependency = 1.0
        flags.append("normalization_fallback")
    else:
        source_dependency = min(max(inputs.i_sources / max(denom, ENTROPY_FLOOR),
                                    0.0), 1.0)

    redundant = r_min + source_dependency * (r_mmi - r_min)
    unique_m = i_1 - redundant
    unique_n = i_2 - redundant
    synergistic = total - i_1 - i_2 + redundant

    residual = 0.0
    parts = []
    for value in (redundant, synergistic, unique_m, unique_n):
        if value < 0.0:
            residual += value
            value = 0.0
        parts.append(value)
    if residual != 0.0:
        flags.append("clamped_components")
    return PIDResult(parts[0], parts[1], parts[2], parts[3], total,
                     source_dependency=source_dependency,
                     flags=tuple(flags), clamp_residual=residual)


def _degenerate_single_source(estimate: float, missing: str) -> PIDResult:
    """One source contributes no nodes: its side and all interplay vanish."""
    flags = [f"degenerate_source_{missing}"]
    total = estimate
    if total < 0.0:
        total = 0.0
        flags.append("clamped_total")
    unique_m = total if missing == "n" else 0.0
    unique_n = total if missing == "m" else 0.0
    return PIDResult(0.0, 0.0, unique_m, unique_n, total, flags=tuple(flags))


def pid_from_blocks(target_block: np.ndarray, s1_block: np.ndarray,
                    s2_block: np.ndarray, cond_block: np.ndarray,
                    cfg: EstimatorConfig) -> PIDResult:
    """Decompose I(target; S1,S2 | C) from already-extracted sample blocks.

    All five information quantities are estimated on the same rows with the
    same configuration: mixing conditioned and unconditioned terms would
    break the additivity of the decomposition.
    """
    has_1 = s1_block.shape[1] > 0
    has_2 = s2_block.shape[1] > 0
    if not has_1 and not has_2:
        return PIDResult.zero(flags=("degenerate_source_m", "degenerate_source_n"))
    if not has_1:
        est = fp_cmi(target_block, s2_block, cond_block, cfg)
        return _degenerate_single_source(est.value, "m")
    if not has_2:
        est = fp_cmi(target_block, s1_block, cond_block, cfg)
        return _degenerate_single_source(est.value, "n")

    joint = np.hstack([s1_block, s2_block])
    i_total = fp_cmi(target_block, joint, cond_block, cfg).value
    i_1 = fp_cmi(target_block, s1_block, cond_block, cfg).value
    i_2 = fp_cmi(target_block, s2_block, cond_block, cfg).value
    i_sources = fp_cmi(s1_block, s2_block, cond_block, cfg).value
    if cond_block.shape[1]:
        h_cond = kl_entropy(cond_block, cfg).value
        h_1 = kl_entropy(np.hstack([s1_block, cond_block]), cfg).value - h_cond
        h_2 = kl_entropy(np.hstack([s2_block, cond_block]), cfg).value - h_cond
    else:
        h_1 = kl_entropy(s1_block, cfg).value
        h_2 = kl_entropy(s2_block, cfg).value
    return pid_decompose(PIDInputs(i_total, i_1, i_2, i_sources, h_1, h_2))


def pid_from_samples(target: LaggedNode, s1_nodes, s2_nodes, condition_nodes,
                     ts: TimeSeriesSet, cfg: EstimatorConfig) -> PIDResult:
    """Decompose the information two lagged node sets carry about a target.

    The data are standardized, then one shared complete-case row mask is
    used for every estimate. If one source set is empty the result is the
    degenerate decomposition (all information unique to the other source).
    """
    s1 = sorted(set(s1_nodes))
    s2 = sorted(set(s2_nodes))
    cond = sorted(set(condition_nodes))
    if not s1 and not s2:
        raise ContractViolationError("s1_nodes and s2_nodes are both empty",
                                     module="pid", operation="pid_from_samples")
    overlap = set(s1) & set(s2)
    if overlap:
        raise ContractViolationError(
            f"source sets overlap on {[str(n) for n in sorted(overlap)]}",
            module="pid", operation="pid_from_samples",
            hint="bundle membership must be disjoint")
    shared = extract_shared_blocks(standardize(ts),
                                   [[target], s1, s2, cond])
    z_block, s1_block, s2_block, cond_block = shared.blocks
    return pid_from_blocks(z_block, s1_block, s2_block, cond_block, cfg)

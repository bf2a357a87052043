"""Exponential weights over the ``C(d, k)`` subset-experts, kept in log space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from osr.combinatorics import SubsetId, binomial
from osr.estimator import MomentEstimate, contract


def logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + float(np.log(np.sum(np.exp(a - m))))


@dataclass(frozen=True)
class ExpertDistribution:
    """Normalized log-probabilities indexed by colex rank, plus the learning rate."""

    log_weights: np.ndarray
    eta_hedge: float
    d: int
    k: int

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - logsumexp(self.log_weights))

    @property
    def n_experts(self) -> int:
        return self.log_weights.shape[0]


def init_uniform(d: int, k: int, eta_hedge: float = 1.0) -> ExpertDistribution:
    n = binomial(d, k)
    return ExpertDistribution(np.full(n, -np.log(n)), float(eta_hedge), d, k)


def surrogate_cost(w: np.ndarray, moments: MomentEstimate, y: float) -> float:
    """``w^T X w - 2 z^T w + y^2`` for a dense weight vector ``w``.

    With exact moments (``X = x x^T``, ``z = y x``) this is ``(w . x - y)^2``.
    """
    return float(w @ moments.X @ w - 2.0 * (moments.z @ w) + y * y)


def surrogate_costs(
    members: np.ndarray,
    table: np.ndarray,
    moments: MomentEstimate,
    y: float,
    contracted: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Vectorised :func:`surrogate_cost` over every expert.

    ``members[n]`` holds the ``k`` coordinates of expert ``n`` and ``table[n]``
    its weights on those coordinates. ``contracted`` may carry a precomputed
    ``(X_S w_S, z_S)`` pair from :func:`osr.estimator.contract`.
    """
    Xw, z_sub = contracted if contracted is not None else contract(moments, members, table)
    return np.einsum("ni,ni->n", table, Xw - 2.0 * z_sub) + y * y


def hedge_update(dist: ExpertDistribution, costs: np.ndarray) -> ExpertDistribution:
    """Multiply each expert's weight by ``exp(-eta * cost)``, then renormalize.

    Costs are used as given, signed and unclipped.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.shape != dist.log_weights.shape:
        raise ValueError(f"expected {dist.n_experts} costs, got shape {costs.shape}")
    bad = np.flatnonzero(~np.isfinite(costs))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"non-finite cost {costs[i]} for expert rank {i}")
    lw = dist.log_weights - dist.eta_hedge * costs
    lw = lw - logsumexp(lw)
    return ExpertDistribution(lw, dist.eta_hedge, dist.d, dist.k)


def sample_expert(dist: ExpertDistribution, rng: np.random.Generator) -> SubsetId:
    """Draw an expert by inverting the cumulative distribution at a uniform variate."""
    # log-weights are kept normalized; scaling u by cdf[-1] absorbs rounding
    cdf = np.cumsum(np.exp(dist.log_weights))
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    return SubsetId(min(i, dist.n_experts - 1), dist.d, dist.k)

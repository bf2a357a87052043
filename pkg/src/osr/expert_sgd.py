"""One projected-SGD weight vector per subset-expert.

Expert ``S`` stores only its ``k`` coordinates; everything outside ``S`` is
zero by construction. All experts step on the same per-round moment estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from osr.combinatorics import SubsetLex, colex_subsets
from osr.estimator import MomentEstimate, contract


def project_unit_ball(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{||w|| <= 1}``."""
    w = np.asarray(w, dtype=float)
    norm = float(np.sqrt(w @ w))
    if norm > 1.0:
        return w / norm
    return w


def expand(S: SubsetLex, w_S: np.ndarray) -> np.ndarray:
    """Dense ``d``-vector with ``w_S`` on the coordinates of ``S``."""
    out = np.zeros(S.d)
    out[list(S.members)] = w_S
    return out


def stochastic_gradient(S: SubsetLex, w_S: np.ndarray, moments: MomentEstimate) -> np.ndarray:
    """Dense ``2 I_S (X w - z)`` for the expert on ``S`` with weights ``w_S``.

    Unbiased for the gradient of ``(x . w - y)^2`` restricted to ``S``; its norm
    never exceeds ``4/q``.
    """
    idx = list(S.members)
    g = np.zeros(S.d)
    g[idx] = 2.0 * (moments.X[np.ix_(idx, idx)] @ np.asarray(w_S, dtype=float) - moments.z[idx])
    return g


def sgd_step(
    S: SubsetLex, w_S: np.ndarray, moments: MomentEstimate, eta_sgd: float
) -> np.ndarray:
    """``Pi(w - eta * g)`` on the ``k`` coordinates of ``S``."""
    g = stochastic_gradient(S, w_S, moments)[list(S.members)]
    return project_unit_ball(np.asarray(w_S, dtype=float) - eta_sgd * g)


@dataclass(frozen=True)
class ExpertWeights:
    """``table[n]`` are the weights of the expert with colex rank ``n`` on ``members[n]``."""

    members: np.ndarray
    table: np.ndarray
    eta_sgd: float

    @classmethod
    def zeros(cls, d: int, k: int, eta_sgd: float) -> "ExpertWeights":
        members = colex_subsets(d, k)
        return cls(members, np.zeros(members.shape, dtype=float), float(eta_sgd))

    def dense(self, n: int, d: int) -> np.ndarray:
        out = np.zeros(d)
        out[self.members[n]] = self.table[n]
        return out


def update_all(
    experts: ExpertWeights,
    moments: MomentEstimate,
    contracted: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> ExpertWeights:
    """Advance every expert by one :func:`sgd_step` with the shared moments."""
    members, W = experts.members, experts.table
    Xw, z_sub = contracted if contracted is not None else contract(moments, members, W)
    grad = 2.0 * (Xw - z_sub)
    W_new = W - experts.eta_sgd * grad
    norms = np.sqrt(np.einsum("ni,ni->n", W_new, W_new))
    over = norms > 1.0
    if over.any():
        W_new[over] /= norms[over, None]
    return ExpertWeights(members, W_new, experts.eta_sgd)

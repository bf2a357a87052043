"""Unbiased moment estimates of ``x x^T`` and ``y x`` from a random probe set.

Each round the learner probes ``k' - k`` coordinates ``R`` drawn uniformly.
A coordinate lands in ``R`` with probability ``p`` and an ordered pair of
distinct coordinates with probability ``q``; dividing by those inclusion
probabilities makes the estimates unbiased.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

# Slack for the |y| <= 1 and ||x|| <= 1 checks; inputs come from float arithmetic.
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class ProbeParameters:
    d: int
    k: int
    k_prime: int
    p: float
    q: float

    @property
    def n_extra(self) -> int:
        """Size of the uniformly drawn probe set."""
        return self.k_prime - self.k


def make_probe_parameters(d: int, k: int, k_prime: int) -> ProbeParameters:
    """Inclusion probabilities for a uniform ``(k' - k)``-subset of ``range(d)``.

    Raises
    ------
    ValueError
        If ``k_prime < k + 2`` (``q`` would be zero) or ``k_prime > d``.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k_prime < k + 2:
        raise ValueError(
            f"k_prime={k_prime} < k + 2 = {k + 2}: with fewer than two extra probes "
            "the pair-inclusion probability q is zero and x x^T cannot be estimated"
        )
    if k_prime > d:
        raise ValueError(f"k_prime={k_prime} exceeds the dimension d={d}")
    r = k_prime - k
    p = r / d
    q = r * (r - 1) / (d * (d - 1))
    return ProbeParameters(d=d, k=k, k_prime=k_prime, p=p, q=q)


@dataclass(frozen=True)
class MomentEstimate:
    """``X`` estimates ``x x^T`` (dense ``d x d``), ``z`` estimates ``y x``."""

    X: np.ndarray
    z: np.ndarray


def build_moments(
    x_probed: Mapping[int, float],
    y: float,
    R: Iterable[int],
    params: ProbeParameters,
) -> MomentEstimate:
    """Build ``(X, z)`` from the coordinates of ``x`` in the probe set ``R``.

    Only ``x_probed[i]`` for ``i in R`` is read. Diagonal entries of ``X`` and
    all of ``z`` are scaled by ``1/p``; off-diagonal entries of ``X`` by ``1/q``.
    """
    idx = [int(i) for i in R]
    if len(idx) != params.n_extra:
        raise ValueError(f"probe set has {len(idx)} coordinates, expected {params.n_extra}")
    try:
        vals = np.array([x_probed[i] for i in idx], dtype=float)
    except KeyError as err:
        raise KeyError(f"probed coordinate {err.args[0]} missing from the feature map") from None
    if abs(y) > 1.0 + BOUND_SLACK:
        raise ValueError(f"label {y} outside [-1, 1]")
    sq = vals * vals
    if sq.sum() > 1.0 + BOUND_SLACK:
        raise ValueError(f"probed features have norm {np.sqrt(sq.sum())} > 1")

    d = params.d
    rows = np.array(idx, dtype=np.intp)
    X = np.zeros((d, d))
    X[rows[:, None], rows] = vals[:, None] * vals / params.q
    X[rows, rows] = sq / params.p
    z = np.zeros(d)
    z[rows] = y * vals / params.p
    return MomentEstimate(X, z)


def contract(
    moments: MomentEstimate, members: np.ndarray, table: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-expert ``(X[S, S] @ w_S, z[S])`` for ``members``/``table`` of shape ``(n, k)``."""
    X_sub = moments.X[members[:, :, None], members[:, None, :]]
    return np.einsum("nij,nj->ni", X_sub, table), moments.z[members]

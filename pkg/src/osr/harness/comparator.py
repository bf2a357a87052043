"""Best ``k``-sparse weight vector of norm at most 1, in hindsight.

For each size-``k`` support the problem ``min ||A w - y||^2`` over
``||w|| <= 1`` is solved exactly: the minimum-norm least-squares solution if
it lies in the ball, otherwise the point on the sphere where
``(A^T A + lam I) w = A^T y`` for the unique ``lam > 0``. ``||w(lam)||`` decreases
monotonically in ``lam``, so a bracketing root-find pins it.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from osr.combinatorics import colex_subsets

COMPARATOR_BUDGET = 10**6
NORM_TOL = 1e-10


def as_arrays(examples: Iterable, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack examples (objects with ``.x``/``.y`` or ``(x, y)`` pairs) into ``(X, y)``."""
    xs, ys = [], []
    for ex in examples:
        x, y = (ex.x, ex.y) if hasattr(ex, "x") else ex
        xs.append(np.asarray(x, dtype=float))
        ys.append(float(y))
    if not xs:
        return np.zeros((0, d)), np.zeros(0)
    return np.vstack(xs), np.array(ys)


def ball_least_squares(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``argmin ||A w - y||^2`` subject to ``||w|| <= 1``."""
    w0 = np.linalg.lstsq(A, y, rcond=None)[0]
    if np.linalg.norm(w0) <= 1.0:
        return w0
    G = A.T @ A
    b = A.T @ y
    eye = np.eye(G.shape[0])

    def excess_norm(lam: float) -> float:
        if lam == 0.0:
            return float(np.linalg.norm(w0)) - 1.0
        return float(np.linalg.norm(np.linalg.solve(G + lam * eye, b))) - 1.0

    # ||(G + lam I)^{-1} b|| <= ||b|| / lam, so lam = ||b|| is already feasible
    hi = float(np.linalg.norm(b))
    lam = brentq(excess_norm, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if lam == 0.0:
        lam = np.nextafter(0.0, 1.0)
    w = np.linalg.solve(G + lam * eye, b)
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > NORM_TOL:
        raise ArithmeticError(f"norm constraint missed by {abs(norm - 1.0):.3g}")
    return w / max(norm, 1.0)


def comparator_loss(examples, d: int, k: int) -> tuple[np.ndarray, float]:
    """Exact best ``k``-sparse unit-ball regressor and its total square loss.

    ``examples`` is either an iterable of examples or an ``(X, y)`` array pair.
    """
    n_sub = math.comb(d, k)
    if n_sub > COMPARATOR_BUDGET:
        raise ValueError(
            f"C({d}, {k}) = {n_sub} supports exceeds the budget of {COMPARATOR_BUDGET}; "
            "use a smaller d or k"
        )
    if isinstance(examples, tuple) and len(examples) == 2 and isinstance(examples[0], np.ndarray):
        X, y = examples
    else:
        X, y = as_arrays(examples, d)
    best_w, best_loss = np.zeros(d), float(y @ y)
    for S in colex_subsets(d, k):
        A = X[:, S]
        w_S = ball_least_squares(A, y)
        r = A @ w_S - y
        loss = float(r @ r)
        if loss < best_loss:
            best_loss = loss
            best_w = np.zeros(d)
            best_w[S] = w_S
    return best_w, best_loss


def prefix_losses(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Cumulative loss of a fixed ``w`` after each round."""
    return np.cumsum((X @ w - y) ** 2)

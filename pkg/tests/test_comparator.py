import numpy as np
import pytest

from osr.harness.comparator import (
    as_arrays,
    ball_least_squares,
    comparator_loss,
    prefix_losses,
)
from osr.streams import LabeledExample

from oracles import grid_comparator_loss, random_unit_ball


def test_realizable_zero_loss():
    rng = np.random.default_rng(0)
    w = np.array([0.0, 0.6, 0.0, -0.8])
    X = np.array([random_unit_ball(4, rng) for _ in range(30)])
    w_star, loss = comparator_loss((X, X @ w), 4, 2)
    assert loss == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(w_star, w, atol=1e-10)


def test_constraint_active():
    # unconstrained optimum is w = 3, clipped to the boundary
    A = np.array([[0.2], [0.1]])
    w = ball_least_squares(A, 3 * A[:, 0])
    np.testing.assert_allclose(w, [1.0])


def test_boundary_in_two_dimensions():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(20, 2)) * 0.1
    y = A @ np.array([4.0, -3.0])
    w = ball_least_squares(A, y)
    assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-10)


def test_rank_deficient():
    A = np.array([[0.5, 0.5], [0.25, 0.25]])
    w = ball_least_squares(A, np.array([0.5, 0.25]))
    np.testing.assert_allclose(A @ w, [0.5, 0.25], atol=1e-12)
    assert np.linalg.norm(w) <= 1.0


def test_empty_stream():
    w, loss = comparator_loss([], 3, 1)
    assert loss == 0.0 and not w.any()


def test_accepts_examples():
    exs = [LabeledExample(np.array([0.5, 0.0]), 0.25), LabeledExample(np.array([0.0, 0.5]), 0.0)]
    X, y = as_arrays(exs, 2)
    assert X.shape == (2, 2)
    _, loss = comparator_loss(exs, 2, 1)
    assert loss == pytest.approx(0.0, abs=1e-20)


def test_budget():
    with pytest.raises(ValueError, match="exceeds the budget"):
        comparator_loss((np.zeros((1, 40)), np.zeros(1)), 40, 10)


def test_prefix_losses():
    X = np.eye(3)
    np.testing.assert_allclose(prefix_losses(X, np.ones(3), np.zeros(3)), [1, 2, 3])


@pytest.mark.parametrize("seed", range(10))
def test_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    k = int(rng.integers(1, min(2, d) + 1))
    n = int(rng.integers(3, 12))
    X = np.array([random_unit_ball(d, rng) for _ in range(n)])
    y = np.clip(X @ (rng.normal(size=d) * 1.5) + 0.1 * rng.normal(size=n), -1, 1)
    _, loss = comparator_loss((X, y), d, k)
    assert loss == pytest.approx(grid_comparator_loss(X, y, k), abs=1e-4)
    assert loss <= grid_comparator_loss(X, y, k) + 1e-12

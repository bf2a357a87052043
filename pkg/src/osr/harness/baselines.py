"""Reference learners that speak the same round protocol as :class:`OsrLearner`.

``CheatOracle`` is told the label before predicting and exists only to test
the harness; the others respect the information constraint.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional

import numpy as np

from osr.combinatorics import SubsetId, SubsetLex, binomial, colex_subsets
from osr.expert_sgd import project_unit_ball
from osr.learner import RoundQuery, RoundRecord, check_label


class _ProtocolLearner:
    """Round counter and record bookkeeping shared by the baselines."""

    def __init__(self, d: int, budget: int):
        self.d = d
        self.budget = budget
        self.t = 0
        self._y_hat: Optional[float] = None

    def _record(self, query: RoundQuery, y: float) -> RoundRecord:
        y = check_label(y)
        y_hat = self._y_hat
        self._y_hat = None
        self.t += 1
        rank = query.chosen_expert.rank if query.chosen_expert is not None else -1
        return RoundRecord(self.t, y_hat, y, (y_hat - y) ** 2, query.query_set, rank)


class ZeroLearner(_ProtocolLearner):
    """Probes nothing and always predicts 0."""

    def __init__(self, d: int):
        super().__init__(d, budget=0)

    def begin_round(self) -> RoundQuery:
        return RoundQuery(None, None, SubsetLex((), self.d, 0))

    def predict(self, query, x_probed) -> float:
        self._y_hat = 0.0
        return 0.0

    def finish_round(self, query, x_probed, y) -> RoundRecord:
        if self._y_hat is None:
            self.predict(query, x_probed)
        return self._record(query, y)


class CheatOracle(ZeroLearner):
    """Predicts the label exactly; the driver hands it ``y`` through :meth:`peek_label`."""

    def __init__(self, d: int):
        super().__init__(d)
        self._peeked: Optional[float] = None

    def peek_label(self, y: float) -> None:
        self._peeked = float(y)

    def predict(self, query, x_probed) -> float:
        if self._peeked is None:
            raise RuntimeError("CheatOracle.predict called before peek_label")
        self._y_hat, self._peeked = self._peeked, None
        return self._y_hat


class FixedWeightLearner(_ProtocolLearner):
    """Plays one fixed weight vector, probing only its support."""

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=float)
        support = np.flatnonzero(w)
        super().__init__(w.shape[0], budget=len(support))
        self.w = w
        self.support = SubsetLex.of(support, w.shape[0])

    def begin_round(self) -> RoundQuery:
        return RoundQuery(None, None, self.support)

    def predict(self, query, x_probed: Mapping[int, float]) -> float:
        self._y_hat = float(sum(self.w[i] * x_probed[i] for i in self.support))
        return self._y_hat

    def finish_round(self, query, x_probed, y) -> RoundRecord:
        if self._y_hat is None:
            self.predict(query, x_probed)
        return self._record(query, y)


class RandomSubsetLearner(_ProtocolLearner):
    """Uniformly random ``k``-subset each round; only that subset's SGD vector moves.

    The chosen subset is fully observed, so its gradient is exact.
    """

    def __init__(self, d: int, k: int, T: int, rng: np.random.Generator, eta: Optional[float] = None):
        super().__init__(d, budget=k)
        self.k = k
        self.rng = rng
        self.eta = eta if eta is not None else 1.0 / math.sqrt(max(T, 1))
        self.members = colex_subsets(d, k)
        self.table = np.zeros(self.members.shape)

    def begin_round(self) -> RoundQuery:
        n = int(self.rng.integers(binomial(self.d, self.k)))
        return RoundQuery(SubsetId(n, self.d, self.k), None, SubsetLex(tuple(self.members[n]), self.d, self.k))

    def _xs(self, query, x_probed):
        return np.array([x_probed[int(i)] for i in self.members[query.chosen_expert.rank]])

    def predict(self, query, x_probed) -> float:
        self._y_hat = float(self.table[query.chosen_expert.rank] @ self._xs(query, x_probed))
        return self._y_hat

    def finish_round(self, query, x_probed, y) -> RoundRecord:
        if self._y_hat is None:
            self.predict(query, x_probed)
        n = query.chosen_expert.rank
        xs = self._xs(query, x_probed)
        grad = 2.0 * (self._y_hat - float(y)) * xs
        self.table[n] = project_unit_ball(self.table[n] - self.eta * grad)
        return self._record(query, y)

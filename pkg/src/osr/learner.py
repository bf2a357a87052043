"""Exponential weights over subsets with per-subset projected SGD.

Round protocol (shared by every learner in this package):

1. ``begin_round()`` announces the coordinates to probe,
2. the driver reveals exactly those coordinates of ``x_t``,
3. ``predict(query, x_probed)`` returns ``y_hat``,
4. ``finish_round(query, x_probed, y)`` receives the label and updates.

:func:`play_round` is the only place that touches a full feature vector, so a
learner cannot read coordinates it did not announce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Protocol

import numpy as np

from osr.combinatorics import SubsetId, SubsetLex, sample_uniform_subset, union
from osr.estimator import build_moments, contract, make_probe_parameters
from osr.expert_sgd import ExpertWeights, update_all
from osr.hedge import hedge_update, init_uniform, sample_expert, surrogate_costs

LABEL_SLACK = 1e-12


class StreamExhausted(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OsrConfig:
    d: int
    k: int
    k_prime: int
    T: int
    seed: int = 0
    eta_hedge_override: Optional[float] = None
    eta_sgd_override: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.k <= self.k_prime <= self.d:
            raise ValueError(
                f"need 1 <= k <= k_prime <= d, got k={self.k}, k_prime={self.k_prime}, d={self.d}"
            )
        if self.k_prime < self.k + 2:
            raise ValueError(f"k_prime={self.k_prime} must be at least k + 2 = {self.k + 2}")
        if self.T < 0:
            raise ValueError(f"horizon T must be non-negative, got {self.T}")
        for name in ("eta_hedge_override", "eta_sgd_override"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @classmethod
    def with_rates(cls, d: int, k: int, k_prime: int, T: int, seed: int = 0, rates: str = "scaled"):
        """Build a config from a named step-size preset.

        ``"scaled"`` keeps ``eta_hedge = q sqrt(ln d / T)`` and ``eta_sgd = q sqrt(1 / T)``;
        ``"unit"`` drops the factor ``q`` from both, keeping the ``1/sqrt(T)`` scaling.
        """
        if rates == "scaled":
            return cls(d, k, k_prime, T, seed)
        if rates == "unit":
            horizon = max(T, 1)
            return cls(
                d, k, k_prime, T, seed,
                eta_hedge_override=math.sqrt(math.log(d) / horizon),
                eta_sgd_override=math.sqrt(1.0 / horizon),
            )
        raise ValueError(f"unknown rate preset {rates!r}; expected 'scaled' or 'unit'")

    @property
    def q(self) -> float:
        return make_probe_parameters(self.d, self.k, self.k_prime).q

    @property
    def eta_hedge(self) -> float:
        if self.eta_hedge_override is not None:
            return self.eta_hedge_override
        return self.q * math.sqrt(math.log(self.d) / max(self.T, 1))

    @property
    def eta_sgd(self) -> float:
        if self.eta_sgd_override is not None:
            return self.eta_sgd_override
        return self.q * math.sqrt(1.0 / max(self.T, 1))


@dataclass(frozen=True)
class RoundQuery:
    """``query_set`` is the union of the sampled expert's subset and the probe set."""

    chosen_expert: Optional[SubsetId]
    probe_extra: Optional[SubsetLex]
    query_set: SubsetLex


@dataclass(frozen=True)
class RoundRecord:
    t: int
    prediction: float
    label: float
    loss: float
    query_set: SubsetLex
    subset_rank: int = -1


class Learner(Protocol):
    budget: int

    def begin_round(self) -> RoundQuery: ...

    def predict(self, query: RoundQuery, x_probed: Mapping[int, float]) -> float: ...

    def finish_round(
        self, query: RoundQuery, x_probed: Mapping[int, float], y: float
    ) -> RoundRecord: ...


def check_label(y: float) -> float:
    y = float(y)
    if not abs(y) <= 1.0 + LABEL_SLACK:
        raise ValueError(f"label {y} outside [-1, 1]")
    return y


class OsrLearner:
    """Hedge over all ``C(d, k)`` subsets, each running projected SGD on its coordinates.

    Each round costs ``O(C(d, k) * k^2)`` on top of an ``O(d^2)`` moment build.
    """

    def __init__(self, config: OsrConfig, rng: Optional[np.random.Generator] = None):
        self.config = config
        self.params = make_probe_parameters(config.d, config.k, config.k_prime)
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.dist = init_uniform(config.d, config.k, config.eta_hedge)
        self.experts = ExpertWeights.zeros(config.d, config.k, config.eta_sgd)
        self.t = 0
        self.last_costs: Optional[np.ndarray] = None
        self._prediction: Optional[tuple[RoundQuery, float]] = None

    @property
    def budget(self) -> int:
        return self.config.k_prime

    def begin_round(self) -> RoundQuery:
        if self.t >= self.config.T:
            raise RuntimeError(f"horizon T={self.config.T} reached; no round {self.t + 1}")
        chosen = sample_expert(self.dist, self.rng)
        extra = sample_uniform_subset(self.config.d, self.params.n_extra, self.rng)
        members = self.experts.members[chosen.rank]
        return RoundQuery(chosen, extra, union(members, extra.members, self.config.d))

    def predict(self, query: RoundQuery, x_probed: Mapping[int, float]) -> float:
        n = query.chosen_expert.rank
        members = self.experts.members[n]
        try:
            xs = np.array([x_probed[int(i)] for i in members], dtype=float)
        except KeyError as err:
            raise KeyError(f"coordinate {err.args[0]} of the chosen subset was not revealed") from None
        y_hat = float(self.experts.table[n] @ xs)
        self._prediction = (query, y_hat)
        return y_hat

    def finish_round(
        self, query: RoundQuery, x_probed: Mapping[int, float], y: float
    ) -> RoundRecord:
        y = check_label(y)
        if self._prediction is None or self._prediction[0] is not query:
            self.predict(query, x_probed)
        y_hat = self._prediction[1]
        self._prediction = None

        moments = build_moments(x_probed, y, query.probe_extra.members, self.params)
        # both updates read the pre-update weights w_{S,t}
        members, table = self.experts.members, self.experts.table
        contracted = contract(moments, members, table)
        costs = surrogate_costs(members, table, moments, y, contracted)
        self.last_costs = costs
        self.dist = hedge_update(self.dist, costs)
        self.experts = update_all(self.experts, moments, contracted)

        self.t += 1
        return RoundRecord(
            t=self.t,
            prediction=y_hat,
            label=y,
            loss=(y_hat - y) ** 2,
            query_set=query.query_set,
            subset_rank=query.chosen_expert.rank,
        )


def play_round(learner: Learner, x: np.ndarray, y: float) -> RoundRecord:
    """Run one round: reveal only the announced coordinates of ``x``, then the label."""
    query = learner.begin_round()
    if len(query.query_set) > learner.budget:
        raise BudgetExceeded(
            f"learner asked for {len(query.query_set)} coordinates, budget is {learner.budget}"
        )
    x_probed = {i: float(x[i]) for i in query.query_set}
    peek = getattr(learner, "peek_label", None)
    if peek is not None:
        peek(y)
    learner.predict(query, x_probed)
    return learner.finish_round(query, x_probed, y)


def drive(learner: Learner, stream: Iterable, T: int) -> Iterator[RoundRecord]:
    """Yield ``T`` records from ``learner`` on ``stream`` (items with ``.x``, ``.y``)."""
    it = iter(stream)
    for t in range(T):
        try:
            ex = next(it)
        except StopIteration:
            raise StreamExhausted(f"stream ran out before round {t + 1} of {T}") from None
        yield play_round(learner, ex.x, ex.y)


def run(config: OsrConfig, stream: Iterable) -> list[RoundRecord]:
    """Run the learner for ``config.T`` rounds."""
    return list(drive(OsrLearner(config), stream, config.T))

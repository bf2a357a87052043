"""Feed a hardness stream to a learner and threshold its total loss.

On a planted instance some ``k``-sparse vector has zero loss, so a low-regret
learner stays far below ``T / (2 m d k)``. On an uncoverable instance every
probe set misses some row, which costs any learner at least ``1/(m d k)``
per round in expectation.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from osr.learner import Learner, OsrConfig, OsrLearner, RoundRecord, play_round
from osr.seeding import spawn_rngs
from osr.streams import SetCoverInstance, hardness_stream

SATISFIABLE = "satisfiable"
UNSATISFIABLE = "unsatisfiable"


def default_threshold(T: int, m: int, d: int, k: int) -> float:
    return T / (2 * m * d * k)


def guaranteed_horizon(poly_d: float, delta: float, m: int, d: int, k: int) -> int:
    """Horizon at which a ``poly_d * T**(1 - delta)`` regret bound makes the verdict reliable.

    Only for reference: it is astronomically large at any honest parameters.
    """
    return math.ceil(max((2 * poly_d * m * d * k) ** (1 / delta), 256 * m**2 * d**2 * k**2))


@dataclass(frozen=True)
class DistinguisherConfig:
    instance: SetCoverInstance
    learner: OsrConfig
    seed: int = 0
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.instance.d != self.learner.d:
            raise ValueError(
                f"instance has d={self.instance.d} sets but the learner is configured "
                f"for d={self.learner.d}"
            )
        if self.learner.T < 1:
            raise ValueError(f"need T >= 1 rounds, got {self.learner.T}")
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")

    @property
    def T(self) -> int:
        return self.learner.T

    @property
    def k(self) -> int:
        return self.learner.k

    @property
    def effective_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return default_threshold(self.T, self.instance.m, self.instance.d, self.k)


@dataclass(frozen=True)
class Verdict:
    label: str
    total_loss: float
    threshold: float


@dataclass(frozen=True)
class RoundTrace:
    record: RoundRecord
    probe_all_zero: bool


# (config, learner generator) -> learner
LearnerFactory = Callable[[DistinguisherConfig, np.random.Generator], Learner]


def algorithm1_factory(config: DistinguisherConfig, rng: np.random.Generator) -> Learner:
    return OsrLearner(config.learner, rng)


def run_distinguisher(
    config: DistinguisherConfig,
    learner_factory: LearnerFactory = algorithm1_factory,
    trace: Optional[list] = None,
) -> Verdict:
    """Drive a learner for ``T`` rounds on the hardness stream and threshold its loss.

    The stream and the learner get independent generators spawned from
    ``config.seed``. If ``trace`` is a list, one :class:`RoundTrace` per round
    is appended to it.
    """
    stream_rng, learner_rng = spawn_rngs(config.seed, 2)
    learner = learner_factory(config, learner_rng)
    if learner.budget > config.learner.k_prime:
        raise ValueError(f"learner budget {learner.budget} exceeds k'={config.learner.k_prime}")
    stream = hardness_stream(config.instance, config.k, stream_rng)
    total = 0.0
    for _ in range(config.T):
        ex = next(stream)
        rec = play_round(learner, ex.x, ex.y)
        total += rec.loss
        if trace is not None:
            trace.append(RoundTrace(rec, not np.any(ex.x[list(rec.query_set)])))
    thr = config.effective_threshold
    return Verdict(SATISFIABLE if total <= thr else UNSATISFIABLE, total, thr)


@dataclass
class SeparationReport:
    rows: list[dict] = field(default_factory=list)

    def losses(self, kind: str) -> np.ndarray:
        return np.array([r["total_loss"] for r in self.rows if r["instance_kind"] == kind])

    def satisfiable_frequency(self, kind: str) -> float:
        verdicts = [r["verdict"] == SATISFIABLE for r in self.rows if r["instance_kind"] == kind]
        return float(np.mean(verdicts)) if verdicts else float("nan")

    @property
    def loss_gap(self) -> float:
        """Mean uncoverable loss minus mean planted loss."""
        return float(self.losses("uncoverable").mean() - self.losses("planted").mean())

    def summary(self) -> str:
        lines = []
        for kind in ("planted", "uncoverable"):
            ls = self.losses(kind)
            if ls.size:
                lines.append(
                    f"{kind}: satisfiable {self.satisfiable_frequency(kind):.2f} over {ls.size} "
                    f"trials, loss mean {ls.mean():.4g} (min {ls.min():.4g}, max {ls.max():.4g})"
                )
        return "\n".join(lines)


def separation_experiment(
    planted: SetCoverInstance,
    uncoverable: SetCoverInstance,
    config: DistinguisherConfig,
    trials: int,
    learner_factory: LearnerFactory = algorithm1_factory,
) -> SeparationReport:
    """Run the distinguisher on both instances for ``trials`` consecutive seeds.

    ``config.instance`` is replaced by each of the two instances in turn; the
    threshold is recomputed per instance unless fixed in ``config``.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    report = SeparationReport()
    for kind, inst in (("planted", planted), ("uncoverable", uncoverable)):
        for trial in range(trials):
            cfg = dataclasses.replace(config, instance=inst, seed=config.seed + trial)
            v = run_distinguisher(cfg, learner_factory)
            report.rows.append(
                dict(trial=trial, instance_kind=kind, total_loss=v.total_loss,
                     threshold=v.threshold, verdict=v.label)
            )
    return report


REPORT_FIELDS = ("trial", "instance_kind", "total_loss", "threshold", "verdict")


def write_report_csv(report: SeparationReport, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in report.rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

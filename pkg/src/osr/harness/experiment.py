"""Regret experiments: run a learner on a stream, compare with the hindsight optimum."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from osr.harness.baselines import CheatOracle, RandomSubsetLearner, ZeroLearner
from osr.harness.comparator import comparator_loss, prefix_losses
from osr.learner import BudgetExceeded, OsrConfig, OsrLearner, RoundRecord, play_round
from osr.seeding import spawn_rngs
from osr.streams import (
    StochasticModel,
    hardness_stream,
    random_sparse_weights,
    read_instance,
    stochastic_stream,
    zero_stream,
)

LEARNERS = ("algorithm1", "zero", "cheat-oracle", "random-subset")
STREAMS = ("stochastic", "zero", "hardness")
OUTPUT_DIR_ENV = "OSR_OUTPUT_DIR"

RUN_FIELDS = ("t", "loss", "cum_loss", "subset_rank")
SUMMARY_FIELDS = ("comparator_loss", "final_regret", "seed", "d", "k", "kprime", "T")


@dataclass(frozen=True)
class ExperimentConfig:
    """One regret run.

    ``osr.seed`` seeds everything: the stream and the learner draw from
    independent generators spawned from it.
    """

    osr: OsrConfig
    stream: str = "stochastic"
    learner: str = "algorithm1"
    noise: float = 0.0
    weight_norm: float = 1.0
    instance_path: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.stream not in STREAMS:
            raise ValueError(f"unknown stream kind {self.stream!r}; choose from {STREAMS}")
        if self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        if self.stream == "hardness":
            if self.instance_path is None:
                raise ValueError("the hardness stream needs an instance file")
            if not os.path.exists(self.instance_path):
                raise FileNotFoundError(f"instance file not found: {self.instance_path}")

    @property
    def seed(self) -> int:
        return self.osr.seed


@dataclass
class RegretReport:
    records: list[RoundRecord]
    cumulative_loss: np.ndarray
    comparator_loss: float
    comparator_weights: np.ndarray
    regret_curve: np.ndarray
    max_revealed: int
    config: Optional[ExperimentConfig] = field(default=None, repr=False)

    @property
    def total_loss(self) -> float:
        return float(self.cumulative_loss[-1]) if self.cumulative_loss.size else 0.0

    @property
    def regret(self) -> float:
        return self.total_loss - self.comparator_loss


def make_stream(config: ExperimentConfig, rng: np.random.Generator):
    d, k = config.osr.d, config.osr.k
    if config.stream == "zero":
        return zero_stream(d)
    if config.stream == "hardness":
        inst, _ = read_instance(config.instance_path)
        if inst.d != d:
            raise ValueError(f"instance {config.instance_path} has d={inst.d}, config has d={d}")
        return hardness_stream(inst, k, rng)
    w = random_sparse_weights(d, k, rng, norm=config.weight_norm)
    return stochastic_stream(StochasticModel(w, config.noise), rng)


def make_learner(config: ExperimentConfig, rng: np.random.Generator):
    o = config.osr
    if config.learner == "algorithm1":
        return OsrLearner(o, rng)
    if config.learner == "zero":
        return ZeroLearner(o.d)
    if config.learner == "cheat-oracle":
        return CheatOracle(o.d)
    return RandomSubsetLearner(o.d, o.k, o.T, rng, eta=o.eta_sgd_override)


def run_experiment(config: ExperimentConfig) -> RegretReport:
    """Run the configured learner for ``T`` rounds and measure realized regret.

    The full examples are kept here for the comparator only; the learner sees
    just the coordinates it announces. Writes the per-round CSV and a summary
    CSV when ``config.out`` is set.
    """
    o = config.osr
    stream_rng, learner_rng = spawn_rngs(o.seed, 2)
    stream = iter(make_stream(config, stream_rng))
    learner = make_learner(config, learner_rng)

    X = np.zeros((o.T, o.d))
    y = np.zeros(o.T)
    records = []
    max_revealed = 0
    for t in range(o.T):
        ex = next(stream)
        X[t], y[t] = ex.x, ex.y
        rec = play_round(learner, ex.x, ex.y)
        revealed = len(rec.query_set)
        if revealed > o.k_prime:
            raise BudgetExceeded(f"round {t + 1} revealed {revealed} > k'={o.k_prime} coordinates")
        max_revealed = max(max_revealed, revealed)
        records.append(rec)

    cum = np.cumsum([r.loss for r in records]) if records else np.zeros(0)
    w_star, best = comparator_loss((X, y), o.d, o.k)
    report = RegretReport(
        records=records,
        cumulative_loss=cum,
        comparator_loss=best,
        comparator_weights=w_star,
        regret_curve=cum - prefix_losses(X, y, w_star),
        max_revealed=max_revealed,
        config=config,
    )
    if config.out is not None:
        write_run_csv(report, config.out)
        write_summary_csv(report, summary_path(config.out))
    return report


def summary_path(out: str | os.PathLike) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".summary" + (p.suffix or ".csv"))


def default_output_path(osr: OsrConfig) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"regret_d{osr.d}_k{osr.k}_kp{osr.k_prime}_T{osr.T}_s{osr.seed}.csv"


def _open_for_write(path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as err:
        raise OSError(f"cannot write {path}: {err.strerror or err}") from err


def write_run_csv(report: RegretReport, path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_FIELDS)
        for rec, cum in zip(report.records, report.cumulative_loss):
            w.writerow([rec.t, repr(rec.loss), repr(float(cum)), rec.subset_rank])


def write_summary_csv(report: RegretReport, path) -> None:
    o = report.config.osr
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        w.writerow([repr(report.comparator_loss), repr(report.regret), o.seed, o.d, o.k, o.k_prime, o.T])


def mean_and_stderr(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), float("nan")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))

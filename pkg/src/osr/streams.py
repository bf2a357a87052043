"""Example streams and synthetic set-cover instances.

Two instance families drive the hardness experiment:

* planted: some ``k`` columns cover every row exactly once, so the vector with
  ``1/sqrt(k)`` on those columns fits every hardness-stream example exactly;
* uncoverable: no ``k'`` columns cover every row, certified by brute force.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from osr.combinatorics import SubsetLex

VERIFY_BUDGET = 10**6


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class SetCoverInstance:
    """Binary incidence matrix: rows are elements, columns are sets."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.ndim != 2:
            raise ValueError(f"incidence matrix must be 2-D, got shape {M.shape}")
        if not np.isin(M, (0, 1)).all():
            raise ValueError("incidence matrix entries must be 0 or 1")
        M = M.astype(np.int8)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def __eq__(self, other):
        return isinstance(other, SetCoverInstance) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.matrix.shape, self.matrix.tobytes()))


@dataclass(frozen=True)
class CoverCertificate:
    """``kind`` is ``"exact-cover"`` (with a witness) or ``"no-cover"`` (checked exhaustively)."""

    kind: str
    size: int
    witness: Optional[SubsetLex] = None


# ---------------------------------------------------------------------------
# verifiers


def verify_exact_cover(inst: SetCoverInstance, witness: Sequence[int]) -> bool:
    """True iff the witness columns sum to the all-ones vector."""
    cols = list(witness)
    if not cols:
        return inst.m == 0
    return bool((inst.matrix[:, cols].sum(axis=1) == 1).all())


def _check_budget(d: int, r: int) -> int:
    n = math.comb(d, r)
    if n > VERIFY_BUDGET:
        raise ValueError(
            f"exhaustive check over C({d}, {r}) = {n} column subsets exceeds the "
            f"budget of {VERIFY_BUDGET}"
        )
    return n


def verify_no_cover(inst: SetCoverInstance, k_prime: int) -> bool:
    """True iff every choice of ``k_prime`` columns leaves some row uncovered.

    Larger collections only cover more, so subsets of size exactly
    ``min(k_prime, d)`` are enumerated.
    """
    r = min(k_prime, inst.d)
    _check_budget(inst.d, r)
    M = inst.matrix.astype(bool)
    for cols in itertools.combinations(range(inst.d), r):
        if M[:, cols].any(axis=1).all():
            return False
    return True


def uncovered_fraction(inst: SetCoverInstance, S: Sequence[int]) -> float:
    """Fraction of rows that are zero on every column in ``S``."""
    rows_hit = inst.matrix[:, list(S)].any(axis=1)
    return float((~rows_hit).mean())


# ---------------------------------------------------------------------------
# generators


def _shuffled_columns(M: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    perm = rng.permutation(M.shape[1])
    # new column j holds old column perm[j]; old column c lands at inverse[c]
    inverse = np.argsort(perm)
    return M[:, perm], inverse


def gen_planted_exact_cover(
    m: int,
    k: int,
    extra_sets: int,
    rng: np.random.Generator,
    zero_columns: int = 0,
) -> tuple[SetCoverInstance, CoverCertificate]:
    """Partition the ``m`` rows into ``k`` nonempty blocks and plant their indicators.

    Decoys are unions of two or more blocks, so each double-covers relative to
    any planted block it overlaps. With ``k == 1`` no such union exists and
    decoys are all-zero columns. Columns are shuffled; the certificate records
    where the planted blocks ended up.
    """
    if k < 1 or k > m:
        raise ValueError(f"need 1 <= k <= m to plant {k} nonempty blocks over {m} rows")
    if extra_sets < 0 or zero_columns < 0:
        raise ValueError("extra_sets and zero_columns must be non-negative")
    rows = rng.permutation(m)
    cuts = np.sort(rng.choice(np.arange(1, m), size=k - 1, replace=False)) if k > 1 else []
    blocks = np.split(rows, cuts)
    planted = np.zeros((m, k), dtype=np.int8)
    for j, block in enumerate(blocks):
        planted[block, j] = 1

    decoys = np.zeros((m, extra_sets), dtype=np.int8)
    if k >= 2:
        for j in range(extra_sets):
            size = int(rng.integers(2, k + 1))
            chosen = rng.choice(k, size=size, replace=False)
            decoys[:, j] = planted[:, chosen].sum(axis=1)
    M = np.hstack([planted, decoys, np.zeros((m, zero_columns), dtype=np.int8)])
    M, where = _shuffled_columns(M, rng)
    witness = SubsetLex.of(where[:k], M.shape[1])
    inst = SetCoverInstance(M)
    assert verify_exact_cover(inst, witness.members)
    return inst, CoverCertificate("exact-cover", k, witness)


def gen_uncoverable(
    m: int,
    d: int,
    k_prime: int,
    rng: np.random.Generator,
    max_tries: int = 1000,
    density: Optional[float] = None,
) -> tuple[SetCoverInstance, CoverCertificate]:
    """Random incidence matrices, kept only once no ``k_prime`` columns cover all rows.

    When ``m <= k_prime`` a cover always exists unless some row is empty (pick
    one covering column per row), so one random row is zeroed in that regime.
    Density is drawn per try from ``[0.15, 0.6]`` unless given.
    """
    _check_budget(d, min(k_prime, d))
    for _ in range(max_tries):
        rho = density if density is not None else float(rng.uniform(0.15, 0.6))
        M = (rng.random((m, d)) < rho).astype(np.int8)
        if m <= k_prime:
            M[int(rng.integers(m))] = 0
        inst = SetCoverInstance(M)
        if verify_no_cover(inst, k_prime):
            return inst, CoverCertificate("no-cover", k_prime)
    raise RuntimeError(
        f"no certified uncoverable instance with m={m}, d={d}, k'={k_prime} "
        f"after {max_tries} tries"
    )


def pad_zero_columns(inst: SetCoverInstance, count: int) -> SetCoverInstance:
    """Append ``count`` all-zero columns (sets covering nothing)."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    return SetCoverInstance(np.hstack([inst.matrix, np.zeros((inst.m, count), dtype=np.int8)]))


# ---------------------------------------------------------------------------
# instance files: "m d", then m rows of 0/1 digits, then optional "witness: ..."


def format_instance(inst: SetCoverInstance, witness: Optional[Sequence[int]] = None) -> str:
    lines = [f"{inst.m} {inst.d}"]
    lines += [" ".join(str(int(v)) for v in row) for row in inst.matrix]
    if witness is not None:
        lines.append("witness: " + " ".join(str(int(i)) for i in witness))
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> tuple[SetCoverInstance, Optional[SubsetLex]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty instance file")
    try:
        m, d = (int(v) for v in lines[0].split())
    except ValueError:
        raise ValueError(f"bad header line {lines[0]!r}; expected 'm d'") from None
    body = lines[1 : 1 + m]
    if len(body) != m:
        raise ValueError(f"expected {m} matrix rows, found {len(body)}")
    rows = []
    for n, ln in enumerate(body):
        vals = [int(v) for v in ln.split()]
        if len(vals) != d:
            raise ValueError(f"row {n} has {len(vals)} entries, expected {d}")
        rows.append(vals)
    M = np.array(rows, dtype=np.int8).reshape(m, d)
    witness = None
    for ln in lines[1 + m :]:
        if ln.startswith("witness:"):
            witness = SubsetLex.of([int(v) for v in ln[len("witness:") :].split()], d)
        else:
            raise ValueError(f"unexpected trailing line {ln!r}")
    return SetCoverInstance(M), witness


def write_instance(path: str | os.PathLike, inst: SetCoverInstance, witness=None) -> None:
    with open(path, "w") as fh:
        fh.write(format_instance(inst, witness))


def read_instance(path: str | os.PathLike) -> tuple[SetCoverInstance, Optional[SubsetLex]]:
    with open(path) as fh:
        return parse_instance(fh.read())


# ---------------------------------------------------------------------------
# streams


def planted_weights(d: int, witness: Sequence[int]) -> np.ndarray:
    """``1/sqrt(k)`` on the witness columns; maps every row to ``1/sqrt(k)``."""
    w = np.zeros(d)
    w[list(witness)] = 1.0 / math.sqrt(len(witness))
    return w


class HardnessStream:
    """Uniform row ``r`` and sign ``s``; emits ``x = s r / sqrt(d)``, ``y = s / sqrt(dk)``.

    The label is formed as ``s * (1/sqrt(d)) * (1/sqrt(k))`` so the planted
    vector reproduces it bit-for-bit.
    """

    def __init__(self, inst: SetCoverInstance, k: int, rng: np.random.Generator):
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        self.inst = inst
        self.k = k
        self.rng = rng
        self.x_scale = 1.0 / math.sqrt(inst.d)
        self.y_scale = self.x_scale * (1.0 / math.sqrt(k))
        self._rows = inst.matrix.astype(float)

    def __iter__(self) -> "HardnessStream":
        return self

    def __next__(self) -> LabeledExample:
        r = int(self.rng.integers(self.inst.m))
        sign = 1.0 if self.rng.random() < 0.5 else -1.0
        return LabeledExample(sign * self.x_scale * self._rows[r], sign * self.y_scale)


def hardness_stream(inst: SetCoverInstance, k: int, rng: np.random.Generator) -> HardnessStream:
    return HardnessStream(inst, k, rng)


@dataclass(frozen=True)
class StochasticModel:
    """Linear model with Gaussian noise; labels are clipped into ``[-1, 1]``.

    ``design`` is ``None`` for features uniform in the unit ball, otherwise an
    ``(n, d)`` array whose rows are cycled through in order.
    """

    true_weights: np.ndarray
    noise_level: float = 0.0
    design: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        w = np.asarray(self.true_weights, dtype=float)
        if np.linalg.norm(w) > 1.0 + 1e-12:
            raise ValueError(f"true weights have norm {np.linalg.norm(w)} > 1")
        if self.noise_level < 0:
            raise ValueError(f"noise level must be non-negative, got {self.noise_level}")
        if self.design is not None:
            D = np.asarray(self.design, dtype=float)
            if D.ndim != 2 or D.shape[1] != w.shape[0]:
                raise ValueError(f"design shape {D.shape} does not match d={w.shape[0]}")
            if (np.linalg.norm(D, axis=1) > 1.0 + 1e-12).any():
                raise ValueError("design rows must lie in the unit ball")
            object.__setattr__(self, "design", D)
        object.__setattr__(self, "true_weights", w)

    @property
    def d(self) -> int:
        return self.true_weights.shape[0]


def random_sparse_weights(d: int, k: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """A ``k``-sparse vector with uniformly random support and direction, of the given norm."""
    w = np.zeros(d)
    support = rng.choice(d, size=k, replace=False)
    v = rng.standard_normal(k)
    w[support] = norm * v / np.linalg.norm(v)
    return w


def uniform_ball(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return v * rng.random() ** (1.0 / d)


class StochasticStream:
    def __init__(self, model: StochasticModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self._n = 0

    def __iter__(self) -> "StochasticStream":
        return self

    def __next__(self) -> LabeledExample:
        m = self.model
        if m.design is None:
            x = uniform_ball(m.d, self.rng)
        else:
            x = m.design[self._n % m.design.shape[0]].copy()
        self._n += 1
        y = float(m.true_weights @ x)
        if m.noise_level > 0:
            y += m.noise_level * float(self.rng.standard_normal())
        return LabeledExample(x, min(1.0, max(-1.0, y)))


def stochastic_stream(model: StochasticModel, rng: np.random.Generator) -> StochasticStream:
    return StochasticStream(model, rng)


def zero_stream(d: int) -> Iterator[LabeledExample]:
    while True:
        yield LabeledExample(np.zeros(d), 0.0)


def take(stream, n: int) -> list[LabeledExample]:
    return list(itertools.islice(stream, n))



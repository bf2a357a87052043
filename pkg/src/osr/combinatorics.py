"""Size-k subsets of ``range(d)``: binomials, colex rank/unrank, uniform sampling.

The expert table of the learner is a dense array indexed by the colexicographic
rank of each subset, so ``rank``/``unrank`` must be exact bijections onto
``range(C(d, k))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_BINOMIAL_N = 64


def binomial(n: int, r: int) -> int:
    """Return C(n, r) exactly; ``n`` is capped at 64 so results fit in 64 bits."""
    if n < 0 or r < 0 or r > n:
        raise ValueError(f"binomial requires 0 <= r <= n, got (n={n}, r={r})")
    if n > MAX_BINOMIAL_N:
        raise OverflowError(
            f"binomial({n}, {r}) exceeds the supported range n <= {MAX_BINOMIAL_N}"
        )
    return math.comb(n, r)


@lru_cache(maxsize=None)
def binomial_table(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Precomputed ``table[n][r] = C(n, r)`` for ``n <= d``, ``r <= k`` (zero if r > n)."""
    return tuple(
        tuple(binomial(n, r) if r <= n else 0 for r in range(k + 1)) for n in range(d + 1)
    )


@dataclass(frozen=True)
class SubsetLex:
    """A size-``k`` subset of ``range(d)`` stored as strictly increasing members."""

    members: tuple[int, ...]
    d: int
    k: int

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if len(members) != self.k:
            raise ValueError(f"subset has {len(members)} members, expected k={self.k}")
        for a, b in zip(members, members[1:]):
            if a >= b:
                raise ValueError(f"subset members must be strictly increasing: {members}")
        if members and (members[0] < 0 or members[-1] >= self.d):
            raise ValueError(f"subset members must lie in [0, {self.d}): {members}")

    @classmethod
    def of(cls, members: Iterable[int], d: int) -> "SubsetLex":
        """Build from any iterable of distinct indices (sorted here)."""
        ms = tuple(sorted(int(i) for i in members))
        if len(set(ms)) != len(ms):
            raise ValueError(f"subset members must be distinct: {ms}")
        return cls(ms, d, len(ms))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return self.k

    def __contains__(self, i) -> bool:
        return i in self.members


@dataclass(frozen=True)
class SubsetId:
    """Colex rank of a size-``k`` subset of ``range(d)``."""

    rank: int
    d: int
    k: int

    def __post_init__(self):
        total = binomial(self.d, self.k)
        if not 0 <= self.rank < total:
            raise ValueError(
                f"rank {self.rank} out of range [0, {total}) for d={self.d}, k={self.k}"
            )


def rank(subset: SubsetLex) -> SubsetId:
    """Colex rank: ``sum_i C(c_i, i + 1)`` over the sorted members ``c_0 < c_1 < ...``."""
    table = binomial_table(subset.d, subset.k)
    r = 0
    for i, c in enumerate(subset.members):
        r += table[c][i + 1]
    return SubsetId(r, subset.d, subset.k)


def unrank(sid: SubsetId) -> SubsetLex:
    """Inverse of :func:`rank`, peeling off the largest member first."""
    d, k = sid.d, sid.k
    table = binomial_table(d, k)
    r = sid.rank
    members = [0] * k
    c = d - 1
    for i in range(k, 0, -1):
        while table[c][i] > r:
            c -= 1
        members[i - 1] = c
        r -= table[c][i]
        c -= 1
    return SubsetLex(tuple(members), d, k)


def colex_subsets(d: int, k: int) -> np.ndarray:
    """All size-``k`` subsets as a ``(C(d, k), k)`` int array; row ``i`` has rank ``i``."""
    total = binomial(d, k)
    out = np.empty((total, k), dtype=np.intp)
    for i in range(total):
        out[i] = unrank(SubsetId(i, d, k)).members
    return out


def sample_uniform_subset(d: int, r: int, rng: np.random.Generator) -> SubsetLex:
    """Uniform size-``r`` subset via a partial Fisher-Yates shuffle of ``range(d)``."""
    if r < 0 or r > d:
        raise ValueError(f"cannot sample a subset of size {r} from range({d})")
    pool = list(range(d))
    for i in range(r):
        j = int(rng.integers(i, d))
        pool[i], pool[j] = pool[j], pool[i]
    return SubsetLex(tuple(sorted(pool[:r])), d, r)


def union(a: Sequence[int], b: Sequence[int], d: int) -> SubsetLex:
    return SubsetLex.of(set(a) | set(b), d)

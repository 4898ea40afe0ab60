"""Separated sign sets, half-size antichains, and greedy spherical codes.

These are the combinatorial seeds of every separated family built
elsewhere: sign vectors with pairwise correlation at most theta*n, the
antichain of all half-size subsets of a finite set, and (as a variant)
coherence-bounded unit vectors on the Euclidean sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator

import numpy as np

__all__ = [
    "SignSet",
    "Antichain",
    "SphericalCode",
    "hoeffding_tail",
    "exact_binomial_tail",
    "greedy_sign_set",
    "antichain_half_subsets",
    "greedy_spherical_code",
]

EXHAUSTIVE_DIM_LIMIT = 25
ANTICHAIN_ENUM_LIMIT = 10 ** 6
COHERENCE_TOL = 1e-12


class ConstructionFailure(RuntimeError):
    """A postcondition of a greedy construction failed."""


@dataclass
class SignSet:
    """A family of sign vectors with pairwise correlation at most theta*n.

    ``vectors`` is a (K, n) integer array with entries +-1; ``pool_size``
    records how many candidates were examined and ``exhaustive`` whether
    that pool was all of {-1,1}^n (only then is maximality meaningful).
    """

    n: int
    theta: float
    vectors: np.ndarray
    pool_size: int
    exhaustive: bool

    @property
    def size(self) -> int:
        return len(self.vectors)

    def correlation_bound(self) -> float:
        return self.theta * self.n

    def validate(self) -> None:
        """Full pairwise scan in exact integer arithmetic."""
        V = np.asarray(self.vectors, dtype=np.int64)
        if V.size and not np.all(np.abs(V) == 1):
            raise ValueError("sign vectors must have entries +-1")
        G = V @ V.T
        np.fill_diagonal(G, 0)
        limit = int(math.floor(self.correlation_bound() + 1e-9))
        if G.size and np.abs(G).max() > limit:
            raise ValueError(f"pairwise correlation {np.abs(G).max()} exceeds {limit}")
        if len({tuple(v) for v in V.tolist()}) != len(V):
            raise ValueError("duplicate sign vectors")

    def even_size_vectors(self) -> np.ndarray:
        """Vectors trimmed to even count (drops the last one when odd)."""
        K = self.size - (self.size % 2)
        return self.vectors[:K]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "theta": self.theta,
            "size": self.size,
            "pool_size": self.pool_size,
            "exhaustive": self.exhaustive,
            "vectors": self.vectors.astype(int).tolist(),
        }


def hoeffding_tail(theta: float, n: int) -> float:
    """Sub-Gaussian tail bound 2*exp(-theta^2 * n / 2) for |sum of n signs| > theta*n."""
    if not (0.0 < theta <= 1.0):
        raise ValueError(f"theta must be in (0,1], got {theta}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return 2.0 * math.exp(-theta * theta * n / 2.0)


def exact_binomial_tail(theta: float, n: int) -> Fraction:
    """Exact P(|sum of n independent signs| > theta*n) by binomial enumeration.

    Independent of :func:`hoeffding_tail`; used to check it from below.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    cut = theta * n
    total = 0
    for j in range(n + 1):
        if abs(2 * j - n) > cut + 1e-12:
            total += math.comb(n, j)
    return Fraction(total, 2 ** n)


def _lexicographic_candidates(n: int) -> np.ndarray:
    """All sign vectors ordered with +1 before -1 coordinate-wise."""
    ints = np.arange(2 ** n, dtype=np.int64)
    bits = (ints[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _greedy_separated(cands: np.ndarray, bound: float) -> np.ndarray:
    """Indices of the greedy maximal separated subfamily of ``cands``."""
    work = cands.astype(np.float32)
    acc = np.empty((256, cands.shape[1]), dtype=np.float32)
    taken: list[int] = []
    for i in range(len(work)):
        v = work[i]
        if taken and np.abs(acc[: len(taken)] @ v).max() > bound + 1e-6:
            continue
        if len(taken) == acc.shape[0]:
            acc = np.vstack([acc, np.empty_like(acc)])
        acc[len(taken)] = v
        taken.append(i)
    return np.array(taken, dtype=np.int64)


def greedy_sign_set(n: int, theta: float, exhaustive: bool = True,
                    samples: int | None = None, seed: int = 0) -> SignSet:
    """Greedy maximal theta-separated subset of sign vectors.

    Exhaustive mode scans all 2^n vectors in lexicographic order (+ before -)
    and guarantees maximality plus the size lower bound (1/2)exp(theta^2 n/2).
    Sampled mode scans ``samples`` seeded uniform draws; maximality is then
    relative to the examined pool only.
    """
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must be in (0,1), got {theta}")
    if n < 1:
        raise ValueError("n must be >= 1")
    bound = theta * n
    if exhaustive:
        if n > EXHAUSTIVE_DIM_LIMIT:
            raise ValueError(f"exhaustive mode limited to n <= {EXHAUSTIVE_DIM_LIMIT}")
        cands = _lexicographic_candidates(n)
        pool = 2 ** n
    else:
        if samples is None or samples < 1:
            raise ValueError("sampled mode requires samples >= 1")
        rng = np.random.default_rng(seed)
        cands = (1 - 2 * rng.integers(0, 2, size=(samples, n))).astype(np.int8)
        pool = samples
    idx = _greedy_separated(cands, bound)
    T = SignSet(n, theta, cands[idx].astype(np.int8), pool, exhaustive)
    if exhaustive:
        needed = 0.5 * math.exp(theta * theta * n / 2.0)
        if T.size < needed:
            raise ConstructionFailure(
                f"size {T.size} below the guaranteed lower bound {needed:.3f}"
            )
    return T


def is_maximal(T: SignSet) -> bool:
    """Re-scan all 2^n candidates; true iff none can be added."""
    if T.n > EXHAUSTIVE_DIM_LIMIT:
        raise ValueError("maximality scan limited to small n")
    cands = _lexicographic_candidates(T.n).astype(np.float32)
    acc = T.vectors.astype(np.float32)
    bound = T.correlation_bound() + 1e-6
    for lo in range(0, len(cands), 8192):
        blk = cands[lo:lo + 8192]
        if (np.abs(blk @ acc.T) <= bound).all(axis=1).any():
            return False
    return True


@dataclass
class Antichain:
    """Half-size subsets of {0..K-1}; pairwise incomparable under inclusion."""

    ground_size: int
    mode: str  # "exhaustive" | "sampled"
    count: int
    sampled: list[tuple[int, ...]] = field(default_factory=list)
    seed: int | None = None

    def subsets(self) -> Iterator[tuple[int, ...]]:
        if self.mode == "exhaustive":
            yield from combinations(range(self.ground_size), self.ground_size // 2)
        else:
            yield from self.sampled

    def log_count(self) -> float:
        if self.mode == "exhaustive":
            return math.log(math.comb(self.ground_size, self.ground_size // 2))
        return math.log(self.count) if self.count else -math.inf


def antichain_half_subsets(K: int, mode: str = "exhaustive",
                           samples: int | None = None, seed: int = 0) -> Antichain:
    """The antichain of all K/2-subsets of a K-element set.

    Equal-cardinality distinct subsets are automatically incomparable.
    Exhaustive mode enumerates lazily (count = C(K, K/2)); sampled mode
    draws ``samples`` distinct subsets with the given seed.
    """
    if K < 2 or K % 2 != 0:
        raise ValueError(
            f"K must be even and >= 2, got {K}; drop one element from an odd family first"
        )
    if mode == "exhaustive":
        count = math.comb(K, K // 2)
        if count > ANTICHAIN_ENUM_LIMIT:
            raise ValueError(f"C({K},{K//2}) = {count} exceeds enumeration limit")
        if K >= 8 and count < math.exp(K / 2.0):
            raise ConstructionFailure("antichain smaller than exp(K/2)")
        return Antichain(K, "exhaustive", count)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if samples is None or samples < 1:
        raise ValueError("sampled mode requires samples >= 1")
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    attempts = 0
    while len(out) < samples and attempts < 200 * samples:
        attempts += 1
        pick = tuple(sorted(rng.choice(K, size=K // 2, replace=False).tolist()))
        if pick not in seen:
            seen.add(pick)
            out.append(pick)
    return Antichain(K, "sampled", len(out), out, seed)


@dataclass
class SphericalCode:
    """Unit vectors in Euclidean n-space with pairwise |<s,t>| <= theta."""

    n: int
    theta: float
    points: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)

    def validate(self) -> None:
        P = np.asarray(self.points, dtype=np.float64)
        norms = np.linalg.norm(P, axis=1)
        if P.size and np.abs(norms - 1.0).max() > 1e-12:
            raise ValueError("points must be unit vectors")
        G = P @ P.T
        np.fill_diagonal(G, 0.0)
        if G.size and np.abs(G).max() > self.theta + COHERENCE_TOL:
            raise ValueError(f"coherence {np.abs(G).max():.3e} exceeds {self.theta}")


def greedy_spherical_code(n: int, theta: float, samples: int, seed: int = 0) -> SphericalCode:
    """Greedy coherence-theta packing from seeded uniform sphere samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((samples, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    buf = np.empty((64, n))
    k = 0
    for v in pts:
        if k and np.abs(buf[:k] @ v).max() > theta + COHERENCE_TOL:
            continue
        if k == buf.shape[0]:
            buf = np.vstack([buf, np.empty_like(buf)])
        buf[k] = v
        k += 1
    return SphericalCode(n, theta, buf[:k].copy())


def empirical_sign_tail(theta: float, n: int, samples: int, seed: int = 0) -> float:
    """Monte-Carlo frequency of |sum of signs| > theta*n (for bound checks)."""
    rng = np.random.default_rng(seed)
    sums = (1 - 2 * rng.integers(0, 2, size=(samples, n))).sum(axis=1)
    return float(np.mean(np.abs(sums) > theta * n))

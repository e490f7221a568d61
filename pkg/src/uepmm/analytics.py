"""Closed-form decoding probabilities and expected-loss curves.

Decoding probabilities are large-field limits: a set of received packets
decodes whatever its generic coefficient pattern determines.

* NOW: class ``l`` decodes iff at least ``k_l`` of the ``N`` received
  packets chose window ``l``. Summing multinomial window-count weights over
  those compositions marginalises to a binomial tail.
* EW: decodability of a window-count composition is settled by a
  generic-rank oracle, i.e. by instantiating the expanding-window zero
  pattern with random entries over a large prime field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from .coding import Family, WindowDistribution
from .galois import PrimeField, unit_rows
from .importance import ClassMap, LevelAssignment
from .latency import LatencyModel, arrival_pmf
from .tensor import BlockPartition

COMPOSITION_CAP = 64
ORACLE_PRIME = 2**31 - 1
ORACLE_REPS = 3
ORACLE_SEED = 0x5EED


def _gammas(gamma) -> tuple[float, ...]:
    return gamma.gammas if isinstance(gamma, WindowDistribution) else tuple(float(g) for g in gamma)


def compositions(N: int, L: int) -> Iterator[tuple[int, ...]]:
    """All ``(n_1, ..., n_L)`` of nonnegative integers summing to ``N``."""
    if N < 0 or L < 1:
        raise ValueError("need N >= 0 and L >= 1")
    if L == 1:
        yield (N,)
        return
    for first in range(N + 1):
        for rest in compositions(N - first, L - 1):
            yield (first, *rest)


def multinomial_coefficient(n: Sequence[int]) -> int:
    out, total = 1, 0
    for x in n:
        total += x
        out *= math.comb(total, x)
    return out


def multinomial_weight(n: Sequence[int], gamma) -> float:
    """Probability that ``sum(n)`` packets split over windows exactly as ``n``."""
    g = _gammas(gamma)
    if len(n) != len(g) or any(x < 0 for x in n):
        raise ValueError("composition must be nonnegative with one entry per window")
    w = float(multinomial_coefficient(n))
    for x, gi in zip(n, g):
        w *= gi**x
    return w


def binomial_tail(N: int, p: float, k: int) -> float:
    """``P(Binomial(N, p) >= k)``."""
    if k <= 0:
        return 1.0
    return math.fsum(math.comb(N, i) * p**i * (1.0 - p) ** (N - i) for i in range(k, N + 1))


def _check_N(N: int) -> None:
    if N < 0:
        raise ValueError("N must be >= 0")
    if N > COMPOSITION_CAP:
        raise ValueError(f"N = {N} exceeds the composition cap {COMPOSITION_CAP}")


def now_decode_prob(l: int, N: int, gamma, k: Sequence[int], method: str = "tail") -> float:
    """NOW probability that class ``l`` (0-based) decodes from ``N`` packets."""
    _check_N(N)
    g = _gammas(gamma)
    if method == "tail":
        return binomial_tail(N, g[l], k[l])
    if method == "enumerate":
        return math.fsum(multinomial_weight(n, g) for n in compositions(N, len(g)) if n[l] >= k[l])
    raise ValueError(f"unknown method {method!r}")


class GenericRankOracle:
    """Class decodability for a window-count composition, by random instantiation.

    Windows are NOW (window ``i`` = class ``i``) or nested EW (window ``i`` =
    classes ``0..i``). Packets beyond a window's support size add no rank
    generically, so counts are capped before evaluation and results are
    memoised on the capped counts. Each evaluation takes the majority of
    ``reps`` independent instantiations over GF(``prime``).
    """

    def __init__(self, k: Sequence[int], nested: bool, prime: int = ORACLE_PRIME,
                 reps: int = ORACLE_REPS, seed: int = ORACLE_SEED) -> None:
        self.k = tuple(int(x) for x in k)
        self.nested = nested
        self.field = PrimeField(prime)
        self.reps = reps
        self.seed = seed
        bounds = np.cumsum([0, *self.k])
        self._cols = [np.arange(bounds[i], bounds[i + 1]) for i in range(len(self.k))]
        lo = [0 if nested else bounds[i] for i in range(len(self.k))]
        self._support = [(int(lo[i]), int(bounds[i + 1])) for i in range(len(self.k))]
        self._memo: dict[tuple[int, ...], tuple[bool, ...]] = {}

    def cap(self, counts: Sequence[int]) -> tuple[int, ...]:
        return tuple(min(int(c), hi - lo) for c, (lo, hi) in zip(counts, self._support))

    def _instance(self, counts: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        K = sum(self.k)
        rows = []
        for c, (lo, hi) in zip(counts, self._support):
            if c:
                blk = np.zeros((c, K), dtype=np.int64)
                blk[:, lo:hi] = self.field.random((c, hi - lo), rng)
                rows.append(blk)
        return np.vstack(rows) if rows else np.zeros((0, K), dtype=np.int64)

    def decodable(self, counts: Sequence[int]) -> tuple[bool, ...]:
        key = self.cap(counts)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))
        votes = np.zeros(len(self.k), dtype=int)
        for _ in range(self.reps):
            units = unit_rows(self.field, self._instance(key, rng))
            votes += [bool(units[c].all()) for c in self._cols]
        out = tuple(bool(v * 2 > self.reps) for v in votes)
        self._memo[key] = out
        return out

    def decode_prob(self, l: int, N: int, gamma) -> float:
        _check_N(N)
        g = _gammas(gamma)
        return math.fsum(multinomial_weight(n, g) for n in compositions(N, len(g)) if self.decodable(n)[l])


@lru_cache(maxsize=64)
def _oracle(k: tuple[int, ...], nested: bool, prime: int, reps: int, seed: int) -> GenericRankOracle:
    return GenericRankOracle(k, nested, prime, reps, seed)


def ew_decode_prob(l: int, N: int, gamma, k: Sequence[int], prime: int = ORACLE_PRIME,
                   reps: int = ORACLE_REPS, seed: int = ORACLE_SEED) -> float:
    """EW probability that class ``l`` (0-based) decodes from ``N`` packets."""
    return _oracle(tuple(int(x) for x in k), True, prime, reps, seed).decode_prob(l, N, gamma)


def decode_prob_table(family: Family | str, k: Sequence[int], W: int, gamma=None) -> np.ndarray:
    """``P[l, N]`` for every class ``l`` and ``N = 0..W``."""
    family = Family(family)
    L = len(k)
    if family is Family.NOW:
        return np.array([[now_decode_prob(l, N, gamma, k) for N in range(W + 1)] for l in range(L)])
    if family is Family.EW:
        return np.array([[ew_decode_prob(l, N, gamma, k) for N in range(W + 1)] for l in range(L)])
    if family is Family.MDS:
        row = (np.arange(W + 1) >= sum(k)).astype(float)
        return np.tile(row, (L, 1))
    raise ValueError(f"no window-count decoding law for {family.value}")


@dataclass(frozen=True)
class ClassVariances:
    """Per-class entry-variance products of the sub-products.

    ``products[l]`` lists ``sigma2_A * sigma2_B`` for each sub-product of
    class ``l``, so ``E||C_j||_F^2 = U H Q * products[l][i]``. When every
    member of a class shares the same factor variances this reduces to
    ``k_l * sigma2_{l,A} * sigma2_{l,B}``.
    """

    products: tuple[tuple[float, ...], ...]
    U: int = 1
    H: int = 1
    Q: int = 1

    def __post_init__(self) -> None:
        prods = tuple(tuple(float(x) for x in cls) for cls in self.products)
        if any(len(c) == 0 for c in prods):
            raise ValueError("every class needs at least one sub-product")
        if any(x <= 0 for c in prods for x in c):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "products", prods)

    @classmethod
    def uniform(cls, sigma2_A: Sequence[float], sigma2_B: Sequence[float], k: Sequence[int],
                U: int = 1, H: int = 1, Q: int = 1) -> "ClassVariances":
        return cls(tuple((a * b,) * int(n) for a, b, n in zip(sigma2_A, sigma2_B, k)), U, H, Q)

    @classmethod
    def from_levels(cls, classes: ClassMap, levels: LevelAssignment, p: BlockPartition,
                    var_a: Sequence[float], var_b: Sequence[float] | None = None) -> "ClassVariances":
        var_b = var_a if var_b is None else var_b
        prods: list[list[float]] = [[] for _ in range(classes.L)]
        for j, l in enumerate(classes.class_of):
            a, b = p.factors(j)
            prods[l].append(var_a[levels.levels_a[a]] * var_b[levels.levels_b[b]])
        return cls(tuple(tuple(x) for x in prods), p.U, p.H, p.Q)

    @property
    def k(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.products)

    @property
    def M(self) -> int:
        return sum(self.k)

    @property
    def energy(self) -> np.ndarray:
        """``sum_j sigma2_A sigma2_B`` per class."""
        return np.array([math.fsum(c) for c in self.products])

    @property
    def normalizer(self) -> float:
        """``E||C||_F^2`` for independent zero-mean blocks."""
        return self.U * self.H * self.Q * float(self.energy.sum())


ProbSource = np.ndarray | Callable[[int, int], float]


def _prob_table(decode_prob: ProbSource, L: int, W: int) -> np.ndarray:
    if callable(decode_prob):
        return np.array([[decode_prob(l, w) for w in range(W + 1)] for l in range(L)])
    P = np.asarray(decode_prob, dtype=np.float64)
    if P.shape != (L, W + 1):
        raise ValueError(f"decode-probability table has shape {P.shape}, expected {(L, W + 1)}")
    return P


def conditional_loss(cv: ClassVariances, P: np.ndarray) -> np.ndarray:
    """``E[||C - C_hat||^2 | N = w]`` for each ``w`` (row-times-column form)."""
    return cv.U * cv.H * cv.Q * (cv.energy[:, None] * (1.0 - P)).sum(axis=0)


def expected_loss_rxc(cv: ClassVariances, decode_prob: ProbSource, model: LatencyModel, W: int, t: float,
                      normalized: bool = True) -> float:
    """Expected loss at deadline ``t``, averaging the conditional loss over ``N(t)``."""
    P = _prob_table(decode_prob, len(cv.k), W)
    val = float(arrival_pmf(model, W, t) @ conditional_loss(cv, P))
    return val / cv.normalizer if normalized else val


def loss_bound_cxr(cv: ClassVariances, decode_prob: ProbSource, model: LatencyModel, W: int, t: float,
                   normalized: bool = True) -> float:
    """Column-times-row upper bound: ``M`` times the row-times-column expression.

    Normalised by the same ``E||C||_F^2``, so it starts near ``M`` at ``t = 0``.
    """
    return cv.M * expected_loss_rxc(cv, decode_prob, model, W, t, normalized)


def mds_loss(K: int, model: LatencyModel, W: int, t: float) -> float:
    """Normalised loss of an all-or-nothing code needing ``K`` of ``W`` results."""
    if K > W:
        raise ValueError(f"MDS threshold K = {K} exceeds W = {W}")
    return float(math.fsum(arrival_pmf(model, W, t)[:K]))


def repetition_loss(k: int, model: LatencyModel, t: float) -> float:
    """Normalised loss when every sub-product is sent to ``k`` workers.

    A sub-product is lost iff all ``k`` replicas miss the deadline, which
    happens with probability ``(1 - F(omega t))^k`` for every block, so the
    energy weights cancel after normalisation. ``k = 1`` is the uncoded case.
    """
    return float((1.0 - model.cdf(t)) ** k)

"""Per-worker job generation for UEP (NOW / EW), MDS, repetition and uncoded schemes.

Every packet carries a finite-field coefficient row over the *unknowns* of
the linear system the parameter server ends up solving, plus the two real
factors the worker multiplies.

Two packet forms exist:

``subproduct`` (default)
    The packet is a random linear combination of the sub-products in its
    window. The worker receives ``W_A = [c_1 A_a(1), c_2 A_a(2), ...]`` and
    ``W_B = [B_b(1); B_b(2); ...]`` (factors stacked along the inner
    dimension) and returns ``W_A W_B = sum_j c_j C_j``. Unknowns are the
    sub-products themselves.

``factored``
    The literal single-sum encoding ``W_A = sum_i alpha(i) A_i``,
    ``W_B = sum_k beta(k) B_k``. The product contains every pair
    ``A_i B_k`` with coefficient ``alpha(i) beta(k)``, so unknowns are all
    ``n_a * n_b`` factor pairs; in cxr the off-diagonal pairs are nuisance
    terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from .galois import Field, FieldMatrix
from .importance import ClassMap
from .tensor import BlockPartition


class Family(str, Enum):
    NOW = "NOW"
    EW = "EW"
    MDS = "MDS"
    REPETITION = "repetition"
    UNCODED = "uncoded"


FORMS = ("subproduct", "factored")


@dataclass(frozen=True)
class WindowDistribution:
    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        g = tuple(float(x) for x in self.gammas)
        if not g or any(x < 0 for x in g) or abs(sum(g) - 1.0) > 1e-9:
            raise ValueError(f"window probabilities must be nonnegative and sum to 1, got {g}")
        object.__setattr__(self, "gammas", g)

    def __len__(self) -> int:
        return len(self.gammas)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(len(self.gammas), size=size, p=np.asarray(self.gammas))


@dataclass(frozen=True)
class UepCode:
    family: Family
    classes: ClassMap
    partition: BlockPartition
    W: int
    field: Field
    gamma: WindowDistribution | None = None
    repetition: int = 1
    form: str = "subproduct"

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.gamma is not None and not isinstance(self.gamma, WindowDistribution):
            object.__setattr__(self, "gamma", WindowDistribution(tuple(self.gamma)))
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")
        if self.classes.n_sub != self.partition.n_sub:
            raise ValueError("class map and partition disagree on the sub-product count")
        K = self.partition.n_sub
        if self.W < 1:
            raise ValueError("W must be >= 1")
        if self.family in (Family.NOW, Family.EW):
            if self.gamma is None or len(self.gamma) != self.classes.L:
                raise ValueError(f"{self.family.value} needs one window probability per class ({self.classes.L})")
        elif self.family is Family.UNCODED and self.W != K:
            raise ValueError(f"uncoded scheme needs W = {K} workers, got {self.W}")
        elif self.family is Family.REPETITION:
            if self.repetition < 1 or self.W != self.repetition * K:
                raise ValueError(f"{self.repetition}-block repetition needs W = {self.repetition * K}, got {self.W}")

    # -- window structure -------------------------------------------------

    @property
    def n_windows(self) -> int:
        if self.family in (Family.NOW, Family.EW):
            return self.classes.L
        return 1

    @cached_property
    def window_mask(self) -> np.ndarray:
        """``mask[i, j]``: sub-product ``j`` belongs to window ``i``."""
        cls = np.asarray(self.classes.class_of)
        if self.family is Family.NOW:
            return np.stack([cls == i for i in range(self.classes.L)])
        if self.family is Family.EW:
            return np.stack([cls <= i for i in range(self.classes.L)])
        return np.ones((1, len(cls)), dtype=bool)

    @cached_property
    def factor_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """A-side and B-side supports of each window (factored form)."""
        p = self.partition
        ma = np.zeros((self.n_windows, p.n_a), dtype=bool)
        mb = np.zeros((self.n_windows, p.n_b), dtype=bool)
        for i in range(self.n_windows):
            for j in np.flatnonzero(self.window_mask[i]):
                a, b = p.factors(int(j))
                ma[i, a] = True
                mb[i, b] = True
        return ma, mb

    @property
    def n_unknowns(self) -> int:
        p = self.partition
        return p.n_sub if self.form == "subproduct" else p.n_a * p.n_b

    @cached_property
    def wanted_columns(self) -> np.ndarray:
        """Unknown column holding sub-product ``j``."""
        p = self.partition
        if self.form == "subproduct":
            return np.arange(p.n_sub)
        return np.array([a * p.n_b + b for a, b in map(p.factors, range(p.n_sub))])


@dataclass(frozen=True)
class CoefficientDraw:
    """Coefficients of all ``W`` packets of one encoding, as arrays."""

    windows: np.ndarray | None
    coeffs: np.ndarray  # W x n_unknowns, field elements
    alpha: np.ndarray | None = None  # W x n_a (factored form)
    beta: np.ndarray | None = None  # W x n_b (factored form)


@dataclass(frozen=True)
class CodedPacket:
    worker: int
    window: int | None
    coeffs: np.ndarray = field(repr=False)
    alpha: np.ndarray | None = field(default=None, repr=False)
    beta: np.ndarray | None = field(default=None, repr=False)
    payload_a: np.ndarray | None = field(default=None, repr=False)
    payload_b: np.ndarray | None = field(default=None, repr=False)

    def result(self) -> np.ndarray:
        """What the worker sends back: ``W_A W_B``."""
        if self.payload_a is None or self.payload_b is None:
            raise ValueError("packet was encoded without payloads")
        return self.payload_a @ self.payload_b

    def real_coeffs(self) -> np.ndarray:
        """Real coefficients of the unknowns in :meth:`result`."""
        if self.alpha is not None:
            return np.outer(self.alpha.astype(np.float64), self.beta.astype(np.float64)).ravel()
        return self.coeffs.astype(np.float64)


def draw_coefficients(code: UepCode, rng: np.random.Generator) -> CoefficientDraw:
    """Draw windows and coefficient rows for all workers of ``code``."""
    fld = code.field
    p = code.partition
    K = p.n_sub
    W = code.W
    if code.family in (Family.UNCODED, Family.REPETITION):
        sub = np.arange(W) % K
        if code.form == "subproduct":
            coeffs = np.zeros((W, K), dtype=np.int64)
            coeffs[np.arange(W), sub] = 1
            return CoefficientDraw(None, coeffs)
        alpha = np.zeros((W, p.n_a), dtype=np.int64)
        beta = np.zeros((W, p.n_b), dtype=np.int64)
        for w, j in enumerate(sub):
            a, b = p.factors(int(j))
            alpha[w, a] = 1
            beta[w, b] = 1
        coeffs = np.zeros((W, p.n_a * p.n_b), dtype=np.int64)
        coeffs[np.arange(W), code.wanted_columns[sub]] = 1
        return CoefficientDraw(None, coeffs, alpha, beta)

    if code.family is Family.MDS:
        windows = np.zeros(W, dtype=np.int64)
    else:
        windows = code.gamma.sample(W, rng)
    if code.form == "subproduct":
        coeffs = fld.random((W, K), rng, nonzero=True) * code.window_mask[windows]
        return CoefficientDraw(windows, coeffs)
    ma, mb = code.factor_masks
    alpha = fld.random((W, p.n_a), rng, nonzero=True) * ma[windows]
    beta = fld.random((W, p.n_b), rng, nonzero=True) * mb[windows]
    coeffs = fld.mul(alpha[:, :, None], beta[:, None, :]).reshape(W, -1)
    return CoefficientDraw(windows, coeffs, alpha, beta)


def _payloads(code: UepCode, draw: CoefficientDraw, w: int, a_blocks, b_blocks):
    p = code.partition
    if draw.alpha is not None:
        wa = sum(float(c) * a_blocks[i] for i, c in enumerate(draw.alpha[w]) if c)
        wb = sum(float(c) * b_blocks[k] for k, c in enumerate(draw.beta[w]) if c)
        return np.asarray(wa, dtype=np.float64), np.asarray(wb, dtype=np.float64)
    support = np.flatnonzero(draw.coeffs[w])
    pairs = [p.factors(int(j)) for j in support]
    wa = np.hstack([float(draw.coeffs[w, j]) * a_blocks[a] for j, (a, _) in zip(support, pairs)])
    wb = np.vstack([b_blocks[b] for _, b in pairs])
    return wa, wb


def packets_from_draw(code: UepCode, draw: CoefficientDraw, a_blocks=None, b_blocks=None,
                      workers: Sequence[int] | None = None) -> list[CodedPacket]:
    """Wrap rows of a coefficient draw as packets, with payloads if blocks are given."""
    if (a_blocks is None) != (b_blocks is None):
        raise ValueError("give both block lists or neither")
    if a_blocks is not None and (len(a_blocks) != code.partition.n_a or len(b_blocks) != code.partition.n_b):
        raise ValueError("block lists do not match the partition")
    packets = []
    for w in range(code.W) if workers is None else workers:
        w = int(w)
        pa = pb = None
        if a_blocks is not None:
            pa, pb = _payloads(code, draw, w, a_blocks, b_blocks)
        packets.append(CodedPacket(
            worker=w,
            window=None if draw.windows is None else int(draw.windows[w]),
            coeffs=draw.coeffs[w],
            alpha=None if draw.alpha is None else draw.alpha[w],
            beta=None if draw.beta is None else draw.beta[w],
            payload_a=pa,
            payload_b=pb,
        ))
    return packets


def encode(code: UepCode, a_blocks: Sequence[np.ndarray] | None, b_blocks: Sequence[np.ndarray] | None,
           rng: np.random.Generator) -> list[CodedPacket]:
    """One coded job per worker.

    Pass ``a_blocks = b_blocks = None`` to draw coefficients only (enough for
    rank-oracle decoding).
    """
    if (a_blocks is None) != (b_blocks is None):
        raise ValueError("give both block lists or neither")
    return packets_from_draw(code, draw_coefficients(code, rng), a_blocks, b_blocks)


def coefficient_matrix(code: UepCode, packets: Sequence[CodedPacket], side: str = "C") -> FieldMatrix:
    """Stack packet coefficient rows.

    ``side="C"`` gives the effective coefficients over the unknowns;
    ``"A"``/``"B"`` give the factor coefficients and need the factored form.
    """
    if not packets:
        raise ValueError("no packets")
    if side == "C":
        rows = [pk.coeffs for pk in packets]
    elif side in ("A", "B"):
        if code.form != "factored":
            raise ValueError("per-factor coefficients exist only in the factored form")
        rows = [pk.alpha if side == "A" else pk.beta for pk in packets]
    else:
        raise ValueError("side must be 'A', 'B' or 'C'")
    return FieldMatrix(code.field, np.vstack(rows))

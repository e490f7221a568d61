"""Real matrices, block partitioning and the Frobenius loss.

Two partitioning schemes are supported:

* ``rxc`` (row-times-column): ``A`` is split into ``N`` row blocks of shape
  ``U x H`` and ``B`` into ``P`` column blocks of shape ``H x Q``; the product
  ``C`` is an ``N x P`` grid of sub-products ``C_np = A_n B_p``.
* ``cxr`` (column-times-row): ``A`` is split into ``M`` column blocks and
  ``B`` into ``M`` row blocks; ``C = sum_m A_m B_m``.

Sub-products are indexed by a flat ``j``: ``j = n * P + p`` for rxc and
``j = m`` for cxr.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np


class Scheme(str, Enum):
    RXC = "rxc"
    CXR = "cxr"


@dataclass(frozen=True)
class BlockPartition:
    scheme: Scheme
    U: int
    H: int
    Q: int
    N: int = 1
    M: int = 1
    P: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("U", "H", "Q", "N", "M", "P"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.scheme is Scheme.RXC and self.M != 1:
            raise ValueError("row-times-column partitioning requires M = 1")
        if self.scheme is Scheme.CXR and (self.N != 1 or self.P != 1):
            raise ValueError("column-times-row partitioning requires N = P = 1")

    @classmethod
    def rxc(cls, N: int, P: int, U: int, H: int, Q: int) -> "BlockPartition":
        return cls(Scheme.RXC, U=U, H=H, Q=Q, N=N, P=P)

    @classmethod
    def cxr(cls, M: int, U: int, H: int, Q: int) -> "BlockPartition":
        return cls(Scheme.CXR, U=U, H=H, Q=Q, M=M)

    @property
    def n_a(self) -> int:
        return self.N if self.scheme is Scheme.RXC else self.M

    @property
    def n_b(self) -> int:
        return self.P if self.scheme is Scheme.RXC else self.M

    @property
    def n_sub(self) -> int:
        return self.N * self.P if self.scheme is Scheme.RXC else self.M

    @property
    def a_shape(self) -> tuple[int, int]:
        return (self.N * self.U, self.M * self.H)

    @property
    def b_shape(self) -> tuple[int, int]:
        return (self.M * self.H, self.P * self.Q)

    @property
    def c_shape(self) -> tuple[int, int]:
        return (self.N * self.U, self.P * self.Q)

    @property
    def block_shape(self) -> tuple[int, int]:
        return (self.U, self.Q)

    def factors(self, j: int) -> tuple[int, int]:
        """(A-block, B-block) indices multiplied to form sub-product ``j``."""
        if not 0 <= j < self.n_sub:
            raise IndexError(j)
        if self.scheme is Scheme.RXC:
            return divmod(j, self.P)
        return j, j

    def position(self, j: int):
        """Explicit position of sub-product ``j``: ``(n, p)`` or ``m``."""
        return self.factors(j) if self.scheme is Scheme.RXC else j

    def index(self, position) -> int:
        if self.scheme is Scheme.RXC:
            n, p = position
            if not (0 <= n < self.N and 0 <= p < self.P):
                raise IndexError(position)
            return n * self.P + p
        m = int(position)
        if not 0 <= m < self.M:
            raise IndexError(position)
        return m


def frobenius_sq(m: np.ndarray) -> float:
    return float(np.einsum("ij,ij->", m, m))


def split(a: np.ndarray, b: np.ndarray, p: BlockPartition) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Cut ``a`` and ``b`` into the factor blocks of partition ``p``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != p.a_shape or b.shape != p.b_shape:
        raise ValueError(f"shapes {a.shape} x {b.shape} do not match partition {p.a_shape} x {p.b_shape}")
    if p.scheme is Scheme.RXC:
        a_blocks = [a[n * p.U:(n + 1) * p.U, :] for n in range(p.N)]
        b_blocks = [b[:, q * p.Q:(q + 1) * p.Q] for q in range(p.P)]
    else:
        a_blocks = [a[:, m * p.H:(m + 1) * p.H] for m in range(p.M)]
        b_blocks = [b[m * p.H:(m + 1) * p.H, :] for m in range(p.M)]
    return a_blocks, b_blocks


def subproducts(a_blocks, b_blocks, p: BlockPartition) -> list[np.ndarray]:
    """All sub-products ``C_j`` in flat index order."""
    out = []
    for j in range(p.n_sub):
        i, k = p.factors(j)
        out.append(a_blocks[i] @ b_blocks[k])
    return out


def assemble(blocks: Iterable[tuple[object, np.ndarray]], p: BlockPartition) -> np.ndarray:
    """Build the estimate of ``C`` from ``(position, sub-product)`` pairs.

    Missing rxc grid slots stay zero; missing cxr terms contribute nothing.
    """
    c = np.zeros(p.c_shape)
    seen: set[int] = set()
    for pos, blk in blocks:
        j = p.index(pos)
        if j in seen:
            raise ValueError(f"duplicate sub-product at position {pos}")
        seen.add(j)
        blk = np.asarray(blk, dtype=np.float64)
        if blk.shape != p.block_shape:
            raise ValueError(f"block at {pos} has shape {blk.shape}, expected {p.block_shape}")
        if p.scheme is Scheme.RXC:
            n, q = pos
            c[n * p.U:(n + 1) * p.U, q * p.Q:(q + 1) * p.Q] = blk
        else:
            c += blk
    return c


def loss(c: np.ndarray, c_hat: np.ndarray) -> float:
    """Squared Frobenius norm of ``c - c_hat``."""
    c = np.asarray(c, dtype=np.float64)
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if c.shape != c_hat.shape:
        raise ValueError(f"shape mismatch {c.shape} vs {c_hat.shape}")
    return frobenius_sq(c - c_hat)


def assembly_gram(blocks: list[np.ndarray], p: BlockPartition) -> np.ndarray:
    """Gram matrix ``G`` with ``||assemble(S)||_F^2 = u_S^T G u_S``.

    For rxc the sub-products occupy disjoint slots so ``G`` is diagonal.
    """
    k = len(blocks)
    if p.scheme is Scheme.RXC:
        return np.diag([frobenius_sq(b) for b in blocks])
    flat = np.stack([b.ravel() for b in blocks]) if k else np.zeros((0, 0))
    return flat @ flat.T

"""Decide which sub-products the received packets determine, and rebuild C-hat."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .coding import CodedPacket, UepCode
from .galois import unit_rows
from .tensor import BlockPartition, assemble

RESIDUAL_TOL = 1e-6


class Mode(str, Enum):
    RANK_ORACLE = "rank"
    NUMERIC = "numeric"


@dataclass
class DecodeOutcome:
    decodable: np.ndarray  # bool per sub-product
    mode: Mode
    blocks: dict[int, np.ndarray] = field(default_factory=dict, repr=False)


def decodable_from_rows(code: UepCode, rows: np.ndarray) -> np.ndarray:
    """Rank-oracle test on a raw coefficient matrix (rows = received packets)."""
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, code.n_unknowns)
    if rows.shape[0] == 0:
        return np.zeros(code.partition.n_sub, dtype=bool)
    return unit_rows(code.field, rows)[code.wanted_columns]


def _numeric(code: UepCode, received: Sequence[CodedPacket], true_blocks, tol: float):
    K = code.partition.n_sub
    decodable = np.zeros(K, dtype=bool)
    blocks: dict[int, np.ndarray] = {}
    if not received:
        return decodable, blocks
    R = np.vstack([pk.real_coeffs() for pk in received])
    Y = np.vstack([pk.result().ravel() for pk in received])
    u, s, vt = np.linalg.svd(R, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        return decodable, blocks
    rank = int(np.sum(s > s[0] * max(R.shape) * np.finfo(float).eps * 1e3))
    null = vt[rank:]
    X = vt[:rank].T @ ((u[:, :rank].T @ Y) / s[:rank, None])
    y_norm = np.linalg.norm(Y)
    if y_norm > 0 and np.linalg.norm(R @ X - Y) > tol * y_norm:
        return decodable, blocks
    shape = code.partition.block_shape
    for j, col in enumerate(code.wanted_columns):
        if null.shape[0] and np.max(np.abs(null[:, col])) > 1e-8:
            continue
        est = X[col].reshape(shape)
        if true_blocks is not None:
            ref = true_blocks[j]
            scale = max(np.linalg.norm(ref), np.finfo(float).tiny)
            if np.linalg.norm(est - ref) > tol * scale:
                continue
        decodable[j] = True
        blocks[j] = est
    return decodable, blocks


def decode(code: UepCode, received: Sequence[CodedPacket], true_blocks: Sequence[np.ndarray] | None = None,
           mode: Mode | str = Mode.RANK_ORACLE, tol: float = RESIDUAL_TOL) -> DecodeOutcome:
    """Decode the received packets.

    ``RANK_ORACLE`` marks ``j`` decodable iff ``e_j`` is in the row space of
    the received coefficient matrix over the field, and copies the true
    sub-product for decodable ``j`` when ``true_blocks`` is given.
    ``NUMERIC`` solves the real system built from the worker results; a
    sub-product counts only if it is uniquely determined and, with
    ``true_blocks``, matches to relative tolerance ``tol``.
    """
    mode = Mode(mode)
    if mode is Mode.RANK_ORACLE:
        rows = np.vstack([pk.coeffs for pk in received]) if received else np.zeros((0, code.n_unknowns))
        dec = decodable_from_rows(code, rows)
        blocks = {}
        if true_blocks is not None:
            blocks = {int(j): np.asarray(true_blocks[j]) for j in np.flatnonzero(dec)}
        return DecodeOutcome(dec, mode, blocks)
    dec, blocks = _numeric(code, received, true_blocks, tol)
    return DecodeOutcome(dec, mode, blocks)


def reconstruct(outcome: DecodeOutcome, p: BlockPartition) -> np.ndarray:
    """C-hat from the decodable sub-products; everything else is zero."""
    missing = [int(j) for j in np.flatnonzero(outcome.decodable) if int(j) not in outcome.blocks]
    if missing:
        raise ValueError(f"no block data for decodable sub-products {missing}; pass true_blocks to decode")
    return assemble(((p.position(j), outcome.blocks[j]) for j in sorted(outcome.blocks)), p)

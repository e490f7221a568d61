"""Importance levels of factor blocks and the class structure of sub-products."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .tensor import BlockPartition, frobenius_sq


@dataclass(frozen=True)
class LevelAssignment:
    """Level (0 = most important) of every A-block and B-block."""

    levels_a: tuple[int, ...]
    levels_b: tuple[int, ...]
    S: int

    def __post_init__(self) -> None:
        for lv in (*self.levels_a, *self.levels_b):
            if not 0 <= lv < self.S:
                raise ValueError(f"level {lv} outside [0, {self.S})")

    def n_a(self, s: int) -> int:
        return self.levels_a.count(s)

    def n_b(self, s: int) -> int:
        return self.levels_b.count(s)


@dataclass(frozen=True)
class ClassMap:
    """Class index (0 = most important) of every sub-product."""

    class_of: tuple[int, ...]
    L: int

    def __post_init__(self) -> None:
        counts = Counter(self.class_of)
        missing = [l for l in range(self.L) if counts[l] == 0]
        if missing or any(not 0 <= c < self.L for c in self.class_of):
            raise ValueError(f"class labels must cover 0..{self.L - 1} exactly; empty: {missing}")

    @classmethod
    def from_labels(cls, class_of: Sequence[int]) -> "ClassMap":
        class_of = tuple(int(c) for c in class_of)
        return cls(class_of, max(class_of) + 1)

    @property
    def k(self) -> tuple[int, ...]:
        counts = Counter(self.class_of)
        return tuple(counts[l] for l in range(self.L))

    @property
    def n_sub(self) -> int:
        return len(self.class_of)

    def members(self, l: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.class_of) == l)


def classify_by_norm(blocks: Sequence[np.ndarray], S: int, sizes: Sequence[int]) -> tuple[int, ...]:
    """Levels by descending Frobenius norm: the largest ``sizes[0]`` blocks get level 0, and so on.

    Equal norms keep their original order (stable sort), so a lower index
    lands on a more important level.
    """
    if len(sizes) != S:
        raise ValueError(f"expected {S} level sizes, got {len(sizes)}")
    if sum(sizes) != len(blocks) or any(s < 0 for s in sizes):
        raise ValueError(f"level sizes {tuple(sizes)} do not sum to {len(blocks)} blocks")
    norms = np.array([frobenius_sq(b) for b in blocks])
    order = np.argsort(-norms, kind="stable")
    levels = np.empty(len(blocks), dtype=int)
    bounds = np.cumsum([0, *sizes])
    for s in range(S):
        levels[order[bounds[s]:bounds[s + 1]]] = s
    return tuple(int(x) for x in levels)


def parse_class_table(table) -> dict[tuple[int, int], int]:
    """Normalise a class table to ``{(s_a, s_b): l}`` (0-based).

    Accepts a mapping with 0-based keys/values, or an ``S x S`` nested list
    of 1-based class labels with ``None`` for pairs that never occur (the
    JSON config form).
    """
    if isinstance(table, Mapping):
        return {(int(k[0]), int(k[1])): int(v) for k, v in table.items()}
    out = {}
    for sa, row in enumerate(table):
        for sb, lab in enumerate(row):
            if lab is not None:
                if int(lab) < 1:
                    raise ValueError("class labels in table form are 1-based")
                out[(sa, sb)] = int(lab) - 1
    return out


def product_classes(la: LevelAssignment, p: BlockPartition, table) -> ClassMap:
    """Class of every sub-product from the levels of its two factors."""
    tab = parse_class_table(table)
    if len(la.levels_a) != p.n_a or len(la.levels_b) != p.n_b:
        raise ValueError("level assignment does not match the partition")
    labels = []
    for j in range(p.n_sub):
        i, k = p.factors(j)
        key = (la.levels_a[i], la.levels_b[k])
        if key not in tab:
            raise KeyError(f"class table has no entry for level pair {key}")
        labels.append(tab[key])
    return ClassMap.from_labels(labels)


def permute_descending(m: np.ndarray, axis: str = "rows") -> tuple[np.ndarray, np.ndarray]:
    """Reorder rows (or columns) by descending Euclidean norm, stable under ties."""
    m = np.asarray(m)
    if axis not in ("rows", "cols"):
        raise ValueError("axis must be 'rows' or 'cols'")
    ax = 1 if axis == "rows" else 0
    norms = np.sqrt(np.sum(m.astype(np.float64) ** 2, axis=ax))
    perm = np.argsort(-norms, kind="stable")
    return (m[perm] if axis == "rows" else m[:, perm]), perm


def unpermute(m: np.ndarray, perm: np.ndarray, axis: str = "rows") -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return m[inv] if axis == "rows" else m[:, inv]


# Class tables used in the synthetic experiments (1-based, table form).
RXC_TABLE_3 = [[1, 1, 2], [1, 2, 3], [2, 3, 3]]
CXR_DIAGONAL_TABLE_3 = [[1, None, None], [None, 2, None], [None, None, 3]]

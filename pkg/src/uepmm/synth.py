"""Synthetic matrices: Gaussian importance tiers and sparse gradient-like data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import BlockPartition, Scheme


@dataclass(frozen=True)
class GaussianClassSpec:
    """Zero-mean Gaussian blocks whose variance depends on the block's level.

    ``layout_a[i]`` / ``layout_b[i]`` give the level of A-block / B-block
    ``i``; ``variances[s]`` is the entry variance of level ``s``.
    """

    variances: tuple[float, ...]
    layout_a: tuple[int, ...]
    layout_b: tuple[int, ...]
    variances_b: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for vs in (self.variances, self.variances_b or ()):
            if any(v < 0 for v in vs):
                raise ValueError("variances must be nonnegative")
        S = len(self.variances)
        if any(not 0 <= s < S for s in (*self.layout_a, *self.layout_b)):
            raise ValueError("layout refers to an undefined level")

    @classmethod
    def from_sizes(cls, variances: Sequence[float], sizes_a: Sequence[int], sizes_b: Sequence[int],
                   variances_b: Sequence[float] | None = None) -> "GaussianClassSpec":
        """Levels laid out in block order: ``sizes[0]`` blocks of level 0 first, and so on."""
        lay_a = tuple(s for s, n in enumerate(sizes_a) for _ in range(n))
        lay_b = tuple(s for s, n in enumerate(sizes_b) for _ in range(n))
        return cls(tuple(variances), lay_a, lay_b, None if variances_b is None else tuple(variances_b))

    def var_b(self, s: int) -> float:
        return (self.variances_b or self.variances)[s]


def gen_class_matrices(spec: GaussianClassSpec, p: BlockPartition,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if len(spec.layout_a) != p.n_a or len(spec.layout_b) != p.n_b:
        raise ValueError("layout does not cover the partition's blocks")
    a = np.empty(p.a_shape)
    b = np.empty(p.b_shape)
    for i, s in enumerate(spec.layout_a):
        sd = np.sqrt(spec.variances[s])
        if p.scheme is Scheme.RXC:
            a[i * p.U:(i + 1) * p.U, :] = rng.normal(0.0, sd, (p.U, p.H))
        else:
            a[:, i * p.H:(i + 1) * p.H] = rng.normal(0.0, sd, (p.U, p.H))
    for i, s in enumerate(spec.layout_b):
        sd = np.sqrt(spec.var_b(s))
        if p.scheme is Scheme.RXC:
            b[:, i * p.Q:(i + 1) * p.Q] = rng.normal(0.0, sd, (p.H, p.Q))
        else:
            b[i * p.H:(i + 1) * p.H, :] = rng.normal(0.0, sd, (p.H, p.Q))
    return a, b


def threshold_sparsify(m: np.ndarray, tau: float) -> np.ndarray:
    """Zero every entry with ``|x| <= tau``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    m = np.asarray(m, dtype=np.float64)
    return np.where(np.abs(m) > tau, m, 0.0)


@dataclass(frozen=True)
class SparseGaussianSpec:
    """Entries are zero with probability ``sparsity``, otherwise ``N(mean, variance)``.

    With ``rectify`` the dense entries are post-ReLU activations: draws from
    ``N(mean, variance)`` conditioned on being positive, so ``sparsity``
    remains the exact zero fraction. ``tau`` optionally thresholds the result.
    """

    mean: float = 0.0
    variance: float = 1.0
    sparsity: float = 0.0
    rectify: bool = False
    tau: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")


def _positive_normal(mean: float, sd: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """``N(mean, sd^2)`` draws conditioned on ``x > 0``, by rejection."""
    if sd == 0:
        if mean <= 0:
            raise ValueError("a rectified spec needs positive mass above zero")
        return np.full(size, float(mean))
    out = np.empty(0)
    while out.size < size:
        x = rng.normal(mean, sd, 2 * (size - out.size) + 16)
        out = np.concatenate([out, x[x > 0]])
    return out[:size]


def gen_gradient_like(spec: SparseGaussianSpec, shape, rng: np.random.Generator) -> np.ndarray:
    sd = np.sqrt(spec.variance)
    n = int(np.prod(shape))
    if spec.rectify:
        dense = _positive_normal(spec.mean, sd, n, rng).reshape(shape)
    else:
        dense = rng.normal(spec.mean, sd, shape)
    out = np.where(rng.random(shape) < spec.sparsity, 0.0, dense)
    if spec.tau is not None:
        out = threshold_sparsify(out, spec.tau)
    return out


# Fitted statistics of the dense parts of a small MNIST network's
# back-propagation matrices (second entry of N(., .) is the variance),
# with the measured zero fractions.
MNIST_PRESETS = {
    "gradient_layer1": SparseGaussianSpec(-7.09e-05, 7.24e-01, 0.5009),
    "gradient_layer2": SparseGaussianSpec(-3.90e-05, 6.31e-01, 0.5909),
    "gradient_layer3": SparseGaussianSpec(-1.02e-04, 2.56e-04, 0.5797),
    "weight_layer1": SparseGaussianSpec(-1.07e-03, 9.99e-01, 0.0015),
    "weight_layer2": SparseGaussianSpec(-4.40e-03, 1.00e00, 0.0011),
    "weight_layer3": SparseGaussianSpec(-2.71e-02, 9.98e-01, 0.0010),
    "input_layer2": SparseGaussianSpec(-2.40e-01, 2.28e00, 0.3311, rectify=True),
    "input_layer3": SparseGaussianSpec(1.69e-01, 1.66e00, 0.3863, rectify=True),
}

"""Worker response times, deadline filtering and the arrival-count law."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def parse_omega(value) -> Fraction:
    """Load scaling as an exact fraction: accepts ``"9/15"``, ints, floats or Fractions."""
    if isinstance(value, Fraction):
        om = value
    elif isinstance(value, float):
        om = Fraction(value).limit_denominator(10**6)
    else:
        om = Fraction(str(value).strip())
    if om <= 0:
        raise ValueError("omega must be positive")
    return om


@dataclass(frozen=True)
class LatencyModel:
    """i.i.d. worker response times with CDF ``F(omega * t)``.

    ``family`` is ``"exponential"`` (rate ``rate``) or ``"deterministic"``
    (every worker answers at ``delay / omega``).
    """

    family: str = "exponential"
    rate: float = 1.0
    delay: float = 0.0
    omega: Fraction = Fraction(1)
    t_max: float | None = None

    def __post_init__(self) -> None:
        if self.family not in ("exponential", "deterministic"):
            raise ValueError(f"unknown latency family {self.family!r}")
        if self.family == "exponential" and not self.rate > 0:
            raise ValueError("rate must be positive")
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")
        object.__setattr__(self, "omega", parse_omega(self.omega))

    @property
    def effective_rate(self) -> float:
        return self.rate * float(self.omega)

    def cdf(self, t):
        """Scaled response-time CDF ``F(omega * t)``."""
        t = np.asarray(t, dtype=np.float64)
        st = float(self.omega) * t
        if self.family == "exponential":
            out = -np.expm1(-self.rate * np.maximum(st, 0.0))
        else:
            out = (st >= self.delay).astype(np.float64)
        return float(out) if out.ndim == 0 else out


def sample_arrivals(m: LatencyModel, W: int, rng: np.random.Generator) -> np.ndarray:
    if W < 1:
        raise ValueError("W must be >= 1")
    if m.family == "exponential":
        return rng.exponential(1.0 / m.effective_rate, size=W)
    return np.full(W, m.delay / float(m.omega))


def received_at(arrivals, t_max: float) -> np.ndarray:
    """Indices of workers that answered by ``t_max``."""
    return np.flatnonzero(np.asarray(arrivals) <= t_max)


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) pmf over 0..n with exact integer coefficients."""
    q = 1.0 - p
    return np.array([math.comb(n, w) * p**w * q ** (n - w) for w in range(n + 1)])


def arrival_pmf(m: LatencyModel, W: int, t: float) -> np.ndarray:
    """``P(N(t) = w)`` for ``w = 0..W``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return binomial_pmf(W, m.cdf(t))

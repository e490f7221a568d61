"""Finite-field arithmetic and dense linear algebra over GF(2^m) and GF(p).

Elements are plain integers in ``[0, q)``; vectors and matrices are numpy
``int64`` arrays. Binary extension fields use log/antilog tables built from
a primitive polynomial, prime fields use modular arithmetic directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Primitive polynomials (bit i = coefficient of x^i), one per degree.
PRIMITIVE_POLYS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

# (p - 1)^2 must fit in int64 for the vectorised modular product.
_MAX_PRIME = 2**31 - 1


def _polymul_mod(a: int, b: int, poly: int, m: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return r


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class Field:
    """Common interface of the two field families.

    All arithmetic methods accept scalars or integer arrays and broadcast.
    """

    order: int

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def neg(self, a):
        return self.sub(0, a)

    # Scalar kernels on Python ints, used by the small-matrix elimination.
    def _scalar_ops(self):
        raise NotImplementedError

    def random(self, size, rng: np.random.Generator, nonzero: bool = False) -> np.ndarray:
        """Uniform draws over the field (or over its nonzero elements)."""
        low = 1 if nonzero else 0
        return rng.integers(low, self.order, size=size, dtype=np.int64)

    def asarray(self, values) -> np.ndarray:
        arr = np.asarray(values, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.order):
            raise ValueError(f"values outside [0, {self.order}) for {self}")
        return arr


class BinaryField(Field):
    """GF(2^m) with addition as XOR and table-driven multiplication."""

    def __init__(self, m: int = 8, poly: int | None = None) -> None:
        if poly is None:
            if m not in PRIMITIVE_POLYS:
                raise ValueError(f"no default polynomial for m={m}")
            poly = PRIMITIVE_POLYS[m]
        if poly >> m != 1:
            raise ValueError(f"polynomial {poly:#x} does not have degree {m}")
        self.m = m
        self.poly = poly
        self.order = 1 << m
        self._exp, self._log = self._build_tables()

    def _build_tables(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.order
        n = q - 1
        for g in range(2 if q > 2 else 1, q):
            exp = np.zeros(2 * n, dtype=np.int64)
            log = np.full(q, -1, dtype=np.int64)
            x = 1
            ok = True
            for i in range(n):
                if log[x] != -1:
                    ok = False
                    break
                exp[i] = x
                log[x] = i
                if g == 2:
                    x <<= 1
                    if x >> self.m:
                        x ^= self.poly
                else:
                    x = _polymul_mod(x, g, self.poly, self.m)
            if ok and x == 1:
                exp[n:] = exp[:n]
                log[0] = 0
                return exp, log
        raise ValueError(f"polynomial {self.poly:#x} is not irreducible over GF(2)")

    def __repr__(self) -> str:
        return f"GF(2^{self.m})"

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryField) and (self.m, self.poly) == (other.m, other.poly)

    def __hash__(self) -> int:
        return hash(("binary", self.m, self.poly))

    def add(self, a, b):
        return np.bitwise_xor(a, b)

    sub = add

    def neg(self, a):
        return a

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse")
        return self._exp[(self.order - 1) - self._log[a]]

    def _scalar_ops(self):
        exp, log, n = self._exp.tolist(), self._log.tolist(), self.order - 1

        def mul(a: int, b: int) -> int:
            return exp[log[a] + log[b]] if a and b else 0

        def inv(a: int) -> int:
            return exp[n - log[a]]

        return mul, inv, int.__xor__


class PrimeField(Field):
    """GF(p) for a prime p < 2^31."""

    def __init__(self, p: int) -> None:
        if p > _MAX_PRIME or not _is_prime(p):
            raise ValueError(f"{p} is not a prime below 2^31")
        self.p = p
        self.order = p

    def __repr__(self) -> str:
        return f"GF({self.p})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and self.p == other.p

    def __hash__(self) -> int:
        return hash(("prime", self.p))

    def add(self, a, b):
        return (np.asarray(a, dtype=np.int64) + b) % self.p

    def sub(self, a, b):
        return (np.asarray(a, dtype=np.int64) - b) % self.p

    def mul(self, a, b):
        return (np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)) % self.p

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a % self.p == 0):
            raise ZeroDivisionError("zero has no inverse")
        if a.ndim == 0:
            return np.int64(pow(int(a), -1, self.p))
        return np.array([pow(int(x), -1, self.p) for x in a.ravel()], dtype=np.int64).reshape(a.shape)

    def _scalar_ops(self):
        p = self.p
        return (lambda a, b: a * b % p), (lambda a: pow(a, -1, p)), (lambda a, b: (a - b) % p)


def parse_field(spec) -> Field:
    """Build a field from ``"GF(2^16)"``, ``"GF(7)"``, an int order, or a dict.

    Dicts take ``{"kind": "binary", "m": 16, "poly": ...}`` or
    ``{"kind": "prime", "p": 7}``.
    """
    if isinstance(spec, Field):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "binary":
            return BinaryField(int(spec.get("m", 8)), spec.get("poly"))
        if kind == "prime":
            return PrimeField(int(spec["p"]))
        raise ValueError(f"unknown field kind {kind!r}")
    if isinstance(spec, int):
        if spec > 2 and spec & (spec - 1) == 0:
            return BinaryField(spec.bit_length() - 1)
        return PrimeField(spec)
    if isinstance(spec, str):
        s = spec.replace(" ", "")
        mt = re.fullmatch(r"GF\(2\^(\d+)\)", s, flags=re.IGNORECASE)
        if mt:
            return BinaryField(int(mt.group(1)))
        mt = re.fullmatch(r"GF\((\d+)\)", s, flags=re.IGNORECASE)
        if mt:
            return parse_field(int(mt.group(1)))
    raise ValueError(f"cannot parse field spec {spec!r}")


@dataclass(frozen=True)
class FieldMatrix:
    """Dense matrix over a finite field; ``data`` is a read-only int64 array."""

    field: Field
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = self.field.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError("FieldMatrix data must be 2-D")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.field, self.data.T)

    def vstack(self, other) -> "FieldMatrix":
        other = np.atleast_2d(np.asarray(other, dtype=np.int64))
        return FieldMatrix(self.field, np.vstack([self.data, other]))


# Below this many entries a scalar elimination beats numpy's per-call overhead.
_SMALL = 4096
_OPS_CACHE: dict[Field, tuple] = {}


def _rref_small(fld: Field, data: np.ndarray) -> tuple[np.ndarray, list[int]]:
    ops = _OPS_CACHE.get(fld)
    if ops is None:
        ops = _OPS_CACHE.setdefault(fld, fld._scalar_ops())
    mul, inv, sub = ops
    a = data.tolist()
    rows, cols = data.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        i = next((i for i in range(r, rows) if a[i][c]), None)
        if i is None:
            continue
        a[r], a[i] = a[i], a[r]
        piv = a[r]
        if piv[c] != 1:
            s = inv(piv[c])
            piv = a[r] = [mul(x, s) for x in piv]
        nz = [(j, y) for j, y in enumerate(piv) if y]
        for i in range(rows):
            row = a[i]
            f = row[c]
            if i != r and f:
                for j, y in nz:
                    row[j] = sub(row[j], mul(f, y))
        pivots.append(c)
        r += 1
    return np.array(a, dtype=np.int64).reshape(rows, cols), pivots


def rref(fld: Field, data: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form by Gauss-Jordan elimination.

    Returns the reduced matrix and the list of pivot columns.
    """
    a = np.array(data, dtype=np.int64, copy=True)
    if a.size <= _SMALL:
        return _rref_small(fld, a)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        if a[r, c] != 1:
            a[r] = fld.mul(a[r], fld.inv(a[r, c]))
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit] = fld.sub(a[hit], fld.mul(col[hit, None], a[r][None, :]))
        pivots.append(c)
        r += 1
    return a, pivots


def field_rank(m: FieldMatrix) -> int:
    """Row rank of ``m`` by exact elimination over its field."""
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(rref(m.field, m.data)[1])


def in_rowspace(m: FieldMatrix, v: Sequence[int] | np.ndarray) -> bool:
    """True iff ``v`` is a linear combination of the rows of ``m``."""
    v = m.field.asarray(v)
    if v.shape != (m.cols,):
        raise ValueError(f"vector length {v.shape} does not match {m.cols} columns")
    if not v.any():
        return True
    return field_rank(m.vstack(v)) == field_rank(m)


def unit_rows(fld: Field, data: np.ndarray) -> np.ndarray:
    """Boolean mask over columns: ``mask[j]`` iff ``e_j`` lies in the row space.

    ``e_j`` is in the row space exactly when the reduced echelon form has a
    row equal to ``e_j``, so one elimination answers every column at once.
    """
    data = np.asarray(data, dtype=np.int64)
    cols = data.shape[1]
    mask = np.zeros(cols, dtype=bool)
    if data.shape[0] == 0:
        return mask
    red, pivots = rref(fld, data)
    for i, c in enumerate(pivots):
        if np.count_nonzero(red[i]) == 1:
            mask[c] = True
    return mask


def random_field_vector(fld: Field, length: int, rng: np.random.Generator, nonzero: bool = False) -> np.ndarray:
    if length < 1:
        raise ValueError("length must be >= 1")
    return fld.random(length, rng, nonzero=nonzero)


def full_rank_probability(q: int, k: int) -> float:
    """P(a uniform k x k matrix over GF(q) is invertible)."""
    p = 1.0
    for i in range(1, k + 1):
        p *= 1.0 - float(q) ** (-i)
    return p

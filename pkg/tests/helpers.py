"""Small shared instances for the tests."""

from __future__ import annotations

import numpy as np

from uepmm.coding import UepCode
from uepmm.galois import BinaryField
from uepmm.importance import CXR_DIAGONAL_TABLE_3, RXC_TABLE_3, LevelAssignment, product_classes
from uepmm.tensor import BlockPartition, Scheme, split

GAMMA = (0.4, 0.35, 0.25)
GF16 = BinaryField(16)

# one "criterion N: PASS|FAIL ..." line per acceptance check, echoed by conftest
ACCEPTANCE_LINES: list[str] = []


def report(label, ok: bool, detail: str) -> None:
    line = f"criterion {label!s:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def rxc_setup(family="NOW", W=30, form="subproduct", field=GF16, **kw):
    p = BlockPartition.rxc(N=3, P=3, U=2, H=3, Q=2)
    classes = product_classes(LevelAssignment((0, 1, 2), (0, 1, 2), 3), p, RXC_TABLE_3)
    gamma = GAMMA if family in ("NOW", "EW") else None
    return UepCode(family, classes, p, W, field, gamma=gamma, form=form, **kw)


def cxr_setup(family="NOW", W=30, form="subproduct", field=GF16):
    p = BlockPartition.cxr(M=9, U=2, H=2, Q=2)
    lv = (0, 0, 0, 1, 1, 1, 2, 2, 2)
    classes = product_classes(LevelAssignment(lv, lv, 3), p, CXR_DIAGONAL_TABLE_3)
    return UepCode(family, classes, p, W, field, gamma=GAMMA, form=form)


def blocks_for(code, seed=0):
    rng = np.random.default_rng(seed)
    p = code.partition
    return split(rng.normal(size=p.a_shape), rng.normal(size=p.b_shape), p)


def full_product(code, truth):
    """Assemble ``C`` from all true sub-products."""
    p = code.partition
    if p.scheme is Scheme.CXR:
        return sum(truth)
    return np.vstack([np.hstack(truth[n * p.P:(n + 1) * p.P]) for n in range(p.N)])

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uepmm.tensor import (
    BlockPartition,
    Scheme,
    assemble,
    assembly_gram,
    frobenius_sq,
    loss,
    split,
    subproducts,
)


def _rel_err(x, ref):
    return np.linalg.norm(x - ref) / np.linalg.norm(ref)


def _all_blocks(a, b, p):
    a_blocks, b_blocks = split(a, b, p)
    return [(p.position(j), c) for j, c in enumerate(subproducts(a_blocks, b_blocks, p))]


def test_partition_validation():
    with pytest.raises(ValueError):
        BlockPartition(Scheme.RXC, U=1, H=1, Q=1, N=2, M=2, P=1)
    with pytest.raises(ValueError):
        BlockPartition(Scheme.CXR, U=1, H=1, Q=1, N=2, M=2)
    with pytest.raises(ValueError):
        BlockPartition.rxc(0, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        BlockPartition("diagonal", U=1, H=1, Q=1)


def test_partition_shapes():
    p = BlockPartition.rxc(N=3, P=3, U=300, H=900, Q=300)
    assert (p.n_a, p.n_b, p.n_sub) == (3, 3, 9)
    assert p.a_shape == (900, 900) and p.b_shape == (900, 900) and p.c_shape == (900, 900)
    q = BlockPartition.cxr(M=9, U=900, H=100, Q=900)
    assert (q.n_a, q.n_b, q.n_sub) == (9, 9, 9)
    assert q.a_shape == (900, 900) and q.block_shape == (900, 900)


def test_flat_index_roundtrip():
    p = BlockPartition.rxc(N=2, P=3, U=1, H=1, Q=1)
    assert [p.factors(j) for j in range(6)] == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert all(p.index(p.position(j)) == j for j in range(6))
    with pytest.raises(IndexError):
        p.factors(6)
    with pytest.raises(IndexError):
        p.index((2, 0))
    q = BlockPartition.cxr(M=4, U=1, H=1, Q=1)
    assert q.factors(3) == (3, 3) and q.position(3) == 3
    with pytest.raises(IndexError):
        q.index(4)


def test_split_small_rxc():
    p = BlockPartition.rxc(N=2, P=2, U=1, H=2, Q=1)
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    a_blocks, b_blocks = split(a, b, p)
    assert len(a_blocks) == 2 and len(b_blocks) == 2
    assert a_blocks[1].tolist() == [[3.0, 4.0]]
    assert b_blocks[0].tolist() == [[5.0], [7.0]]


def test_split_cxr_nine_blocks():
    p = BlockPartition.cxr(M=9, U=900, H=100, Q=900)
    rng = np.random.default_rng(0)
    a_blocks, b_blocks = split(rng.normal(size=(900, 900)), rng.normal(size=(900, 900)), p)
    assert len(a_blocks) == 9 and len(b_blocks) == 9
    assert a_blocks[0].shape == (900, 100) and b_blocks[0].shape == (100, 900)


def test_split_shape_mismatch():
    p = BlockPartition.rxc(N=2, P=2, U=1, H=2, Q=1)
    with pytest.raises(ValueError):
        split(np.zeros((3, 2)), np.zeros((2, 2)), p)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["rxc", "cxr"]), st.integers(1, 4), st.integers(1, 4), st.integers(1, 5),
       st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_assemble_all_blocks_equals_product(scheme, n, m, u, h, q, seed):
    if scheme == "rxc":
        p = BlockPartition.rxc(N=n, P=m, U=u, H=h, Q=q)
    else:
        p = BlockPartition.cxr(M=n, U=u, H=h, Q=q)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=p.a_shape)
    b = rng.normal(size=p.b_shape)
    c = assemble(_all_blocks(a, b, p), p)
    assert _rel_err(c, a @ b) < 1e-9


def test_assemble_empty_is_zero():
    p = BlockPartition.rxc(N=2, P=2, U=2, H=3, Q=2)
    c = assemble([], p)
    assert c.shape == (4, 4) and not c.any()


def test_assemble_cxr_single_term():
    p = BlockPartition.cxr(M=2, U=3, H=2, Q=4)
    rng = np.random.default_rng(1)
    a_blocks, b_blocks = split(rng.normal(size=p.a_shape), rng.normal(size=p.b_shape), p)
    c1 = a_blocks[0] @ b_blocks[0]
    assert np.array_equal(assemble([(0, c1)], p), c1)


def test_assemble_rejects_duplicates_and_bad_shapes():
    p = BlockPartition.rxc(N=1, P=2, U=2, H=1, Q=2)
    blk = np.ones((2, 2))
    with pytest.raises(ValueError):
        assemble([((0, 0), blk), ((0, 0), blk)], p)
    with pytest.raises(ValueError):
        assemble([((0, 1), np.ones((3, 2)))], p)


def test_loss_examples():
    assert loss(np.eye(3), np.eye(3)) == 0.0
    assert loss(np.array([[3.0, 4.0]]), np.zeros((1, 2))) == 25.0
    with pytest.raises(ValueError):
        loss(np.zeros((2, 2)), np.zeros((2, 3)))


def test_loss_matches_explicit_loop():
    rng = np.random.default_rng(9)
    c, d = rng.normal(size=(10, 10)), rng.normal(size=(10, 10))
    total = 0.0
    for i in range(10):
        for j in range(10):
            total += (c[i, j] - d[i, j]) ** 2
    assert loss(c, d) == pytest.approx(total, rel=1e-12)


@pytest.mark.parametrize("scheme", ["rxc", "cxr"])
def test_assembly_gram_quadratic_form(scheme):
    if scheme == "rxc":
        p = BlockPartition.rxc(N=2, P=3, U=2, H=3, Q=2)
    else:
        p = BlockPartition.cxr(M=5, U=3, H=2, Q=3)
    rng = np.random.default_rng(4)
    a_blocks, b_blocks = split(rng.normal(size=p.a_shape), rng.normal(size=p.b_shape), p)
    blocks = subproducts(a_blocks, b_blocks, p)
    g = assembly_gram(blocks, p)
    for _ in range(20):
        u = rng.random(p.n_sub) < 0.5
        direct = frobenius_sq(assemble([(p.position(j), blocks[j]) for j in np.flatnonzero(u)], p))
        assert u.astype(float) @ g @ u.astype(float) == pytest.approx(direct, rel=1e-10, abs=1e-12)
    if scheme == "rxc":
        assert np.count_nonzero(g - np.diag(np.diag(g))) == 0

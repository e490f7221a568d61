"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s -v`` to see the lines inline;
they are also repeated in the terminal summary.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import time

import numpy as np
import pytest

from uepmm.cli import main
from uepmm.coding import CodedPacket, UepCode, draw_coefficients
from uepmm.config import preset
from uepmm.decoding import Mode, decodable_from_rows, decode
from uepmm.galois import BinaryField, PrimeField
from uepmm.harness import emit, parse_csv, run_analytic, run_monte_carlo
from uepmm.importance import ClassMap
from uepmm.synth import MNIST_PRESETS, gen_gradient_like
from uepmm.tensor import BlockPartition, frobenius_sq

from helpers import GAMMA, report


def cli_rows(*argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(list(argv))
    assert code == 0
    return {(r[0], r[3]): r[4] for r in parse_csv(buf.getvalue())}


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def check(label, checks, elapsed=None, limit=None):
    """``checks``: list of (name, got, want, tol). Reports and asserts."""
    bad = [f"{n}={g:.6g} (want {w:.6g}±{tol:g})" for n, g, w, tol in checks if not abs(g - w) <= tol]
    slow = limit is not None and elapsed > limit
    detail = f"{len(checks) - len(bad)}/{len(checks)} values"
    if elapsed is not None:
        detail += f", {elapsed:.2f}s" + (f" (limit {limit}s)" if limit else "")
    if bad:
        detail += "; off: " + ", ".join(bad)
    report(label, not bad and not slow, detail)
    assert not bad and not slow, detail


def test_criterion_1_now_decode_prob():
    rows, dt = timed(lambda: cli_rows("analyze", "decode-prob", "--max-n", "4"))
    check(1, [
        ("P1(3)", rows[(3.0, "decode_prob_class_1")], 0.064, 1e-9),
        ("P2(3)", rows[(3.0, "decode_prob_class_2")], 0.042875, 1e-9),
        ("P3(3)", rows[(3.0, "decode_prob_class_3")], 0.015625, 1e-9),
        ("P1(4)", rows[(4.0, "decode_prob_class_1")], 0.1792, 1e-9),
    ], dt, 1.0)


def test_criterion_2_ew_decode_prob():
    rows, dt = timed(lambda: cli_rows("analyze", "decode-prob", "--set", 'code.family="EW"'))
    check(2, [
        ("P1(3)", rows[(3.0, "decode_prob_class_1")], 0.064, 1e-9),
        ("P1(9)", rows[(9.0, "decode_prob_class_1")], 1.0, 1e-9),
        ("P3(8)", rows[(8.0, "decode_prob_class_3")], 0.0, 1e-9),
        ("P2(6)", rows[(6.0, "decode_prob_class_2")], 0.10534, 1e-3),
    ], dt, 30.0)


def test_criterion_3_rxc_analytic_loss():
    def go():
        now = cli_rows("analyze", "loss", "--t-grid", "0.45,1.05")
        ew = cli_rows("analyze", "loss", "--set", 'code.family="EW"', "--t-grid", "0.825")
        return now, ew

    (now, ew), dt = timed(go)
    check(3, [
        ("NOW(0.45)", now[(0.45, "normalized_loss")], 0.171875, 1e-3),
        ("NOW(1.05)", now[(1.05, "normalized_loss")], 0.008275, 1e-3),
        ("EW(0.825)", ew[(0.825, "normalized_loss")], 0.000905, 1e-3),
    ], dt, 5.0)


def test_criterion_4_mds_baseline():
    rows = cli_rows("analyze", "loss", "--config", "preset:mds-rxc", "--t-grid", "0.45,0.975")
    check(4, [
        ("MDS(0.45)", rows[(0.45, "normalized_loss")], 0.184923, 1e-5),
        ("MDS(0.975)", rows[(0.975, "normalized_loss")], 8.033e-5, 1e-5),
    ])


@pytest.mark.slow
def test_criterion_5_monte_carlo_matches_analytic():
    cfg = preset("now-rxc").with_overrides({"trials": 10_000})
    assert cfg.code.field == "GF(2^16)"
    (curve, _), dt = timed(lambda: run_monte_carlo(cfg))
    exact = run_analytic(cfg).normalized_loss
    z = np.abs(curve.normalized_loss - exact) / np.maximum(curve.stderr, 1e-300)
    ok_pts = [bool(abs(m - e) <= 3 * s + 1e-12) for m, e, s in zip(curve.normalized_loss, exact, curve.stderr)]
    worst = float(np.max(np.where(curve.stderr > 0, z, 0.0)))
    good = all(ok_pts) and dt < 120
    report(5, good, f"{sum(ok_pts)}/{len(ok_pts)} grid points within 3 sigma (max |z|={worst:.2f}), "
                    f"{cfg.trials} trials/point, {dt:.1f}s (limit 120s)")
    assert good


@pytest.mark.parametrize("family", ["NOW", "EW"])
def test_criterion_6_cxr_bound_dominates(family):
    cfg = preset(f"{family.lower()}-cxr").with_overrides({"trials": 1000})
    curve, _ = run_monte_carlo(cfg)
    ana = run_analytic(cfg)
    sim, bound = curve.normalized_loss, ana.bound
    below = bool((sim <= bound).all())
    gap = bool((bound - sim > 0).all())
    at_zero = abs(bound[0] - 9.0033) <= 0.01
    good = below and gap and at_zero
    report(6, good, f"{family}: sim <= bound at {int((sim <= bound).sum())}/{len(sim)} points, "
                    f"min gap {float(np.min(bound - sim)):.3g}, bound(0)={bound[0]:.4f} (want 9.0033±0.01)")
    assert good


def test_criterion_7_proof_step_inequalities():
    rng = np.random.default_rng(2024)
    fld = BinaryField(8)
    tri = cs = 0
    for _ in range(1000):
        M = int(rng.choice([3, 6, 9]))
        U, H, Q = (int(x) for x in rng.integers(1, 6, size=3))
        p = BlockPartition.cxr(M=M, U=U, H=H, Q=Q)
        classes = ClassMap.from_labels([3 * m // M for m in range(M)])
        code = UepCode("NOW", classes, p, int(rng.integers(M, 3 * M + 1)), fld, gamma=GAMMA)
        scales = 10.0 ** rng.uniform(-2, 2, size=M)
        terms = [s * rng.normal(size=(U, H)) @ rng.normal(size=(H, Q)) for s in scales]
        draw = draw_coefficients(code, rng)
        recv = np.flatnonzero(rng.random(code.W) < rng.random())
        lost = np.flatnonzero(~decodable_from_rows(code, draw.coeffs[recv]))
        norms = np.array([np.sqrt(frobenius_sq(terms[m])) for m in lost])
        lhs = np.sqrt(frobenius_sq(sum((terms[m] for m in lost), np.zeros((U, Q)))))
        s1 = norms.sum()
        tri += lhs > s1 * (1 + 1e-12) + 1e-300
        cs += s1**2 > M * (norms**2).sum() * (1 + 1e-12) + 1e-300
    good = tri == 0 and cs == 0
    report(7, good, f"1000 random cxr instances: {tri} triangle and {cs} Cauchy-Schwarz violations")
    assert good


def span_contains_units(rows, q):
    """All vectors in the GF(q) span of ``rows``, checked for each unit vector."""
    r, K = rows.shape
    if r == 0:
        return np.zeros(K, dtype=bool)
    combos = np.array(list(itertools.product(range(q), repeat=r)), dtype=np.int64)
    span = {tuple(v) for v in (combos @ rows) % q}
    return np.array([tuple(np.eye(K, dtype=np.int64)[j]) in span for j in range(K)])


@pytest.mark.parametrize("form", ["subproduct", "factored"])
def test_criterion_8_rank_oracle_equals_span_enumeration(form):
    fld = PrimeField(7)
    p = BlockPartition.rxc(N=2, P=2, U=1, H=1, Q=1)
    classes = ClassMap.from_labels([0, 0, 1, 1])
    mismatches = total = 0
    for seed in range(5):
        code = UepCode("NOW", classes, p, 6, fld, gamma=(0.5, 0.5), form=form)
        draw = draw_coefficients(code, np.random.default_rng(seed))
        for mask in range(64):
            sub = [w for w in range(6) if mask >> w & 1]
            packets = [CodedPacket(w, int(draw.windows[w]), draw.coeffs[w]) for w in sub]
            oracle = decode(code, packets, mode=Mode.RANK_ORACLE).decodable
            brute = span_contains_units(draw.coeffs[sub].reshape(len(sub), code.n_unknowns), 7)[code.wanted_columns]
            mismatches += not np.array_equal(oracle, brute)
            total += 1
    good = mismatches == 0
    report(8, good, f"{form} form: {total - mismatches}/{total} packet subsets agree (5 instances x 64)")
    assert good


@pytest.mark.parametrize("name", ["now-rxc", "ew-cxr"])
def test_criterion_9_thread_determinism(name):
    cfg = preset(name).with_overrides({"trials": 200, "seed": 17})
    one = emit(run_monte_carlo(cfg, threads=1)[0])
    eight = emit(run_monte_carlo(cfg, threads=8)[0])
    good = one.encode() == eight.encode()
    report(9, good, f"{name}: 1-thread and 8-thread CSV byte-identical ({len(one)} bytes)")
    assert good


SYNTH_SHAPE = (500, 400)


def test_generator_sparsity():
    rng = np.random.default_rng(31)
    checks = []
    for name, spec in sorted(MNIST_PRESETS.items()):
        x = gen_gradient_like(spec, SYNTH_SHAPE, rng)
        checks.append((name, float(np.mean(x == 0)), spec.sparsity, 0.01))
    check("sparsity", checks)


def test_generator_fit_moments():
    from scipy.stats import truncnorm

    rng = np.random.default_rng(32)
    checks = []
    for name, spec in sorted(MNIST_PRESETS.items()):
        x = gen_gradient_like(spec, SYNTH_SHAPE, rng)
        dense = x[x != 0]
        sd = np.sqrt(spec.variance)
        if spec.rectify:
            dist = truncnorm(-spec.mean / sd, np.inf, loc=spec.mean, scale=sd)
            mu, var = float(dist.mean()), float(dist.var())
        else:
            mu, var = spec.mean, spec.variance
        n = dense.size
        m4 = float(np.mean((dense - mu) ** 4))
        checks.append((f"{name}.mean", float(dense.mean()), mu, 3 * np.sqrt(var / n)))
        checks.append((f"{name}.var", float(dense.var(ddof=1)), var, 3 * np.sqrt((m4 - var**2) / n)))
    check("moments", checks)

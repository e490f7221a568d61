"""Monte-Carlo and analytic experiment runners plus CSV/JSON output.

Every trial draws from its own stream, ``SeedSequence(seed, spawn_key=(t_index,
trial))``, so results do not depend on how trials are spread over threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import analytics
from .coding import Family, UepCode, WindowDistribution, draw_coefficients, packets_from_draw
from .config import ConfigError, ExperimentConfig
from .decoding import Mode, decodable_from_rows, decode
from .importance import ClassMap, LevelAssignment, classify_by_norm, product_classes
from .latency import LatencyModel, arrival_pmf, received_at, sample_arrivals
from .synth import GaussianClassSpec, gen_class_matrices, gen_gradient_like
from .tensor import BlockPartition, Scheme, assembly_gram, split, subproducts

CSV_COLUMNS = ("t", "scheme", "partition", "metric", "value")
DATA_STREAM = 0xDA7A


@dataclass
class TrialRecord:
    trial: int
    t: float
    arrivals: np.ndarray = field(repr=False)
    received: int
    class_decoded: tuple[bool, ...]
    loss: float
    normalized_loss: float


@dataclass
class LossCurve:
    """One scheme's curve over a time grid (or over ``N`` for decode-probability tables)."""

    scheme: str
    partition: str
    times: np.ndarray
    normalized_loss: np.ndarray | None = None
    decode_prob: np.ndarray | None = None  # classes x times
    bound: np.ndarray | None = None
    stderr: np.ndarray | None = None

    def rows(self) -> list[tuple[float, str, str, str, float]]:
        out = []
        for i, t in enumerate(self.times):
            if self.normalized_loss is not None:
                out.append((float(t), self.scheme, self.partition, "normalized_loss", float(self.normalized_loss[i])))
            if self.bound is not None:
                out.append((float(t), self.scheme, self.partition, "bound", float(self.bound[i])))
            if self.decode_prob is not None:
                for l in range(self.decode_prob.shape[0]):
                    out.append((float(t), self.scheme, self.partition, f"decode_prob_class_{l + 1}",
                                float(self.decode_prob[l, i])))
        return out


@dataclass
class Instance:
    """Everything a run needs that does not change between trials."""

    partition: BlockPartition
    a_blocks: list[np.ndarray]
    b_blocks: list[np.ndarray]
    levels: LevelAssignment
    classes: ClassMap
    code: UepCode
    blocks: list[np.ndarray]  # true sub-products
    gram: np.ndarray
    c_norm_sq: float
    model: LatencyModel
    members: list[np.ndarray]


def _synthesize(cfg: ExperimentConfig, p: BlockPartition, rng: np.random.Generator):
    cls = cfg.classes
    if cfg.synth.kind == "gaussian":
        spec = GaussianClassSpec.from_sizes(cls.variances, cls.sizes_a, cls.sizes_b, cls.variances_b)
        return gen_class_matrices(spec, p, rng)
    a = gen_gradient_like(cfg.sparse_spec("a"), p.a_shape, rng)
    b = gen_gradient_like(cfg.sparse_spec("b"), p.b_shape, rng)
    if cfg.synth.permute:
        a, b = _permute_for_importance(a, b, p)
    return a, b


def _permute_for_importance(a: np.ndarray, b: np.ndarray, p: BlockPartition):
    if p.scheme is Scheme.RXC:
        ra = np.argsort(-np.linalg.norm(a, axis=1), kind="stable")
        cb = np.argsort(-np.linalg.norm(b, axis=0), kind="stable")
        return a[ra], b[:, cb]
    # the inner index is shared, so A's columns and B's rows move together
    inner = np.argsort(-(np.linalg.norm(a, axis=0) * np.linalg.norm(b, axis=1)), kind="stable")
    return a[:, inner], b[inner]


def prepare(cfg: ExperimentConfig) -> Instance:
    p = cfg.build_partition()
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(DATA_STREAM,)))
    a, b = _synthesize(cfg, p, rng)
    a_blocks, b_blocks = split(a, b, p)
    cls = cfg.classes
    if cls.classify == "norm":
        la = LevelAssignment(classify_by_norm(a_blocks, cls.S, cls.sizes_a),
                             classify_by_norm(b_blocks, cls.S, cls.sizes_b), cls.S)
    else:
        la = LevelAssignment(tuple(s for s, n in enumerate(cls.sizes_a) for _ in range(n)),
                             tuple(s for s, n in enumerate(cls.sizes_b) for _ in range(n)), cls.S)
    try:
        classes = product_classes(la, p, cls.table)
        code = UepCode(cfg.family(), classes, p, cfg.code.W, cfg.code.build_field(),
                       gamma=WindowDistribution(tuple(cfg.code.gamma)) if cfg.code.gamma else None,
                       repetition=cfg.code.repetition, form=cfg.code.form)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    blocks = subproducts(a_blocks, b_blocks, p)
    gram = assembly_gram(blocks, p)
    members = [classes.members(l) for l in range(classes.L)]
    return Instance(p, a_blocks, b_blocks, la, classes, code, blocks, gram, float(gram.sum()),
                    cfg.latency_model(), members)


def run_trial(inst: Instance, cfg: ExperimentConfig, t_index: int, trial: int, t: float) -> TrialRecord:
    code = inst.code
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(t_index, trial)))
    draw = draw_coefficients(code, rng)
    arrivals = sample_arrivals(inst.model, code.W, rng)
    recv = received_at(arrivals, t)
    if cfg.code.decode_mode == "rank":
        dec = decodable_from_rows(code, draw.coeffs[recv])
    else:
        packets = packets_from_draw(code, draw, inst.a_blocks, inst.b_blocks, recv)
        dec = decode(code, packets, inst.blocks, mode=Mode.NUMERIC).decodable
    missing = (~dec).astype(np.float64)
    loss = max(float(missing @ inst.gram @ missing), 0.0)
    norm = loss / inst.c_norm_sq if inst.c_norm_sq > 0 else 0.0
    per_class = tuple(bool(dec[m].all()) for m in inst.members)
    return TrialRecord(trial, t, arrivals, int(recv.size), per_class, loss, norm)


def run_monte_carlo(cfg: ExperimentConfig, threads: int | None = None,
                    instance: Instance | None = None) -> tuple[LossCurve, list[TrialRecord]]:
    """Simulate ``cfg.trials`` independent trials at every grid time."""
    inst = instance or prepare(cfg)
    threads = threads or cfg.threads
    times = cfg.times()
    jobs = [(ti, i) for ti in range(len(times)) for i in range(cfg.trials)]

    def work(chunk):
        return [run_trial(inst, cfg, ti, i, times[ti]) for ti, i in chunk]

    if threads == 1:
        records = work(jobs)
    else:
        size = max(1, math.ceil(len(jobs) / (threads * 4)))
        chunks = [jobs[k:k + size] for k in range(0, len(jobs), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = [r for part in pool.map(work, chunks) for r in part]

    L = inst.classes.L
    mean = np.empty(len(times))
    err = np.empty(len(times))
    dprob = np.empty((L, len(times)))
    for ti in range(len(times)):
        recs = records[ti * cfg.trials:(ti + 1) * cfg.trials]
        vals = np.array([r.normalized_loss for r in recs])
        mean[ti] = math.fsum(vals) / len(vals)
        err[ti] = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        flags = np.array([r.class_decoded for r in recs])
        dprob[:, ti] = flags.sum(axis=0) / len(recs)
    curve = LossCurve(cfg.code.family, inst.partition.scheme.value, np.array(times), mean, dprob, stderr=err)
    return curve, records


def class_variances(cfg: ExperimentConfig, inst: Instance | None = None) -> analytics.ClassVariances:
    if cfg.synth.kind != "gaussian" or cfg.classes.variances is None:
        raise ConfigError("analytic curves need gaussian synthesis with classes.variances")
    p = cfg.build_partition()
    cls = cfg.classes
    la = LevelAssignment(tuple(s for s, n in enumerate(cls.sizes_a) for _ in range(n)),
                         tuple(s for s, n in enumerate(cls.sizes_b) for _ in range(n)), cls.S)
    try:
        classes = inst.classes if inst is not None else product_classes(la, p, cls.table)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if inst is not None:
        la = inst.levels
    var_b = cls.variances_b if cls.variances_b is not None else cls.variances
    return analytics.ClassVariances.from_levels(classes, la, p, cls.variances, var_b)


def run_analytic(cfg: ExperimentConfig) -> LossCurve:
    """Closed-form curve for the configured scheme over the time grid."""
    fam = cfg.family()
    p = cfg.build_partition()
    model = cfg.latency_model()
    W = cfg.code.W
    times = np.array(cfg.times())
    cv = class_variances(cfg)
    L = len(cv.k)
    bound = None
    if fam in (Family.NOW, Family.EW, Family.MDS):
        if fam is Family.MDS and p.n_sub > W:
            raise ConfigError(f"MDS needs W >= {p.n_sub}")
        P = analytics.decode_prob_table(fam, cv.k, W, cfg.code.gamma)
        loss = np.array([analytics.expected_loss_rxc(cv, P, model, W, t) for t in times])
        dprob = np.array([[arrival_pmf(model, W, t) @ P[l] for t in times] for l in range(L)])
        if p.scheme is Scheme.CXR and fam is not Family.MDS:
            bound = np.array([analytics.loss_bound_cxr(cv, P, model, W, t) for t in times])
    else:
        k = cfg.code.repetition if fam is Family.REPETITION else 1
        loss = np.array([analytics.repetition_loss(k, model, t) for t in times])
        dprob = np.tile(1.0 - loss, (L, 1))
    return LossCurve(fam.value, p.scheme.value, times, loss, dprob, bound)


def run_decode_prob(cfg: ExperimentConfig, max_n: int | None = None) -> LossCurve:
    """Per-class decoding probability against the number of received packets."""
    fam = cfg.family()
    if fam not in (Family.NOW, Family.EW, Family.MDS):
        raise ConfigError(f"decode-prob is defined for NOW, EW and MDS, not {fam.value}")
    cv_k = _class_sizes(cfg)
    n = cfg.code.W if max_n is None else max_n
    if n > analytics.COMPOSITION_CAP:
        raise ConfigError(f"N up to {n} exceeds the composition cap {analytics.COMPOSITION_CAP}")
    P = analytics.decode_prob_table(fam, cv_k, n, cfg.code.gamma)
    return LossCurve(fam.value, cfg.partition.scheme, np.arange(n + 1, dtype=float), decode_prob=P)


def _class_sizes(cfg: ExperimentConfig) -> tuple[int, ...]:
    p = cfg.build_partition()
    cls = cfg.classes
    la = LevelAssignment(tuple(s for s, n in enumerate(cls.sizes_a) for _ in range(n)),
                         tuple(s for s, n in enumerate(cls.sizes_b) for _ in range(n)), cls.S)
    try:
        return product_classes(la, p, cls.table).k
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# -- output ----------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def emit(curves: LossCurve | Iterable[LossCurve], path: str | Path | None = None, fmt: str = "csv",
         records: Sequence[TrialRecord] | None = None) -> str:
    """Serialise curves; writes to ``path`` when given and returns the text."""
    if isinstance(curves, LossCurve):
        curves = [curves]
    rows = [r for c in curves for r in c.rows()]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for t, scheme, part, metric, value in rows:
            writer.writerow((_fmt(t), scheme, part, metric, _fmt(value)))
        text = buf.getvalue()
    elif fmt == "json":
        doc: dict = {"rows": [dict(zip(CSV_COLUMNS, (float(_fmt(r[0])), r[1], r[2], r[3], float(_fmt(r[4])))))
                              for r in rows]}
        if records is not None:
            doc["trials"] = [{"trial": r.trial, "t": r.t, "received": r.received,
                              "class_decoded": list(r.class_decoded), "loss": r.loss,
                              "normalized_loss": r.normalized_loss,
                              "arrivals": [float(x) for x in r.arrivals]} for r in records]
        text = json.dumps(doc, indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return text


def parse_csv(text: str) -> list[tuple[float, str, str, str, float]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    return [(float(t), s, p, m, float(v)) for t, s, p, m, v in reader]

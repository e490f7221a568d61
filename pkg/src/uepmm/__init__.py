"""Unequal-error-protection coding for approximate distributed matrix multiplication.

Sub-products of ``A @ B`` are ranked by importance and protected by random
linear codes over a finite field, so that the results from whichever workers
beat a deadline recover the most important parts of ``C`` first.
"""

from __future__ import annotations

from .analytics import (
    ClassVariances,
    GenericRankOracle,
    decode_prob_table,
    ew_decode_prob,
    expected_loss_rxc,
    loss_bound_cxr,
    mds_loss,
    now_decode_prob,
    repetition_loss,
)
from .coding import Family, UepCode, WindowDistribution, coefficient_matrix, draw_coefficients, encode
from .config import ConfigError, ExperimentConfig, preset
from .decoding import DecodeOutcome, Mode, decode, reconstruct
from .galois import BinaryField, FieldMatrix, PrimeField, field_rank, in_rowspace, parse_field, unit_rows
from .harness import LossCurve, TrialRecord, emit, parse_csv, run_analytic, run_decode_prob, run_monte_carlo
from .importance import ClassMap, LevelAssignment, classify_by_norm, product_classes
from .latency import LatencyModel, arrival_pmf, received_at, sample_arrivals
from .synth import MNIST_PRESETS, GaussianClassSpec, SparseGaussianSpec, gen_class_matrices, gen_gradient_like
from .tensor import BlockPartition, Scheme, assemble, split, subproducts

__version__ = "0.1.0"

__all__ = [
    "BinaryField", "BlockPartition", "ClassMap", "ClassVariances", "ConfigError", "DecodeOutcome",
    "ExperimentConfig", "Family", "FieldMatrix", "GaussianClassSpec", "GenericRankOracle", "LatencyModel",
    "LevelAssignment", "LossCurve", "MNIST_PRESETS", "Mode", "PrimeField", "Scheme", "SparseGaussianSpec",
    "TrialRecord", "UepCode", "WindowDistribution", "arrival_pmf", "assemble", "classify_by_norm",
    "coefficient_matrix", "decode", "decode_prob_table", "draw_coefficients", "emit", "encode",
    "ew_decode_prob", "expected_loss_rxc", "field_rank", "gen_class_matrices", "gen_gradient_like",
    "in_rowspace", "loss_bound_cxr", "mds_loss", "now_decode_prob", "parse_csv", "parse_field", "preset",
    "product_classes", "received_at", "reconstruct", "repetition_loss", "run_analytic", "run_decode_prob",
    "run_monte_carlo", "sample_arrivals", "split", "subproducts", "unit_rows",
]

"""Experiment configuration: a JSON document mirroring :class:`ExperimentConfig`."""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .coding import FORMS, Family, WindowDistribution
from .galois import Field, parse_field
from .latency import LatencyModel, parse_omega
from .synth import MNIST_PRESETS, SparseGaussianSpec
from .tensor import BlockPartition

DEFAULT_T_GRID = tuple(round(0.075 * i, 10) for i in range(15))
DEFAULT_GAMMA = (0.40, 0.35, 0.25)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class PartitionConfig:
    scheme: str = "rxc"
    U: int = 300
    H: int = 900
    Q: int = 300
    N: int = 3
    M: int = 1
    P: int = 3

    def build(self) -> BlockPartition:
        return BlockPartition(self.scheme, U=self.U, H=self.H, Q=self.Q, N=self.N, M=self.M, P=self.P)


@dataclass
class CodeConfig:
    family: str = "NOW"
    gamma: list[float] | None = field(default_factory=lambda: list(DEFAULT_GAMMA))
    W: int = 30
    field: Any = "GF(2^16)"
    repetition: int = 1
    form: str = "subproduct"
    decode_mode: str = "rank"

    def build_field(self) -> Field:
        return parse_field(self.field)


@dataclass
class LatencyConfig:
    family: str = "exponential"
    rate: float = 1.0
    delay: float = 0.0
    omega: Any = "1"
    t_max: float | None = None
    t_grid: list[float] | None = None


@dataclass
class ClassesConfig:
    S: int = 3
    sizes_a: list[int] = field(default_factory=lambda: [1, 1, 1])
    sizes_b: list[int] = field(default_factory=lambda: [1, 1, 1])
    table: Any = field(default_factory=lambda: [[1, 1, 2], [1, 2, 3], [2, 3, 3]])
    variances: list[float] | None = field(default_factory=lambda: [10.0, 1.0, 0.1])
    variances_b: list[float] | None = None
    classify: str = "norm"


@dataclass
class SynthConfig:
    kind: str = "gaussian"
    a: Any = None
    b: Any = None
    permute: bool = True


@dataclass
class ExperimentConfig:
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    code: CodeConfig = field(default_factory=CodeConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    classes: ClassesConfig = field(default_factory=ClassesConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    trials: int = 10_000
    seed: int = 0
    threads: int = 1
    output: str | None = None
    format: str = "csv"

    # -- (de)serialisation ------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        kwargs = {}
        sections = {f.name: f for f in dataclasses.fields(cls)}
        for key, value in data.items():
            if key not in sections:
                raise ConfigError(f"unknown config field {key!r}")
            sub = _SECTION_TYPES.get(key)
            if sub is not None:
                kwargs[key] = _build_section(sub, key, value)
            else:
                kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def with_overrides(self, overrides: dict[str, Any]) -> "ExperimentConfig":
        """Copy with dotted-path fields replaced, e.g. ``{"code.W": 15}``."""
        data = copy.deepcopy(self.to_dict())
        for path, value in overrides.items():
            node = data
            parts = path.split(".")
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"unknown config field {path!r}")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"unknown config field {path!r}")
            node[parts[-1]] = value
        return ExperimentConfig.from_dict(data)

    # -- derived objects --------------------------------------------------

    def build_partition(self) -> BlockPartition:
        try:
            return self.partition.build()
        except ValueError as exc:
            raise ConfigError(f"partition: {exc}") from exc

    def family(self) -> Family:
        return Family(self.code.family)

    def omega(self) -> Fraction:
        om = self.latency.omega
        if isinstance(om, str) and om.strip().lower() == "auto":
            return Fraction(self.build_partition().n_sub, self.code.W)
        return parse_omega(om)

    def latency_model(self) -> LatencyModel:
        lat = self.latency
        return LatencyModel(lat.family, rate=lat.rate, delay=lat.delay, omega=self.omega(), t_max=lat.t_max)

    def times(self) -> list[float]:
        if self.latency.t_grid is not None:
            return [float(t) for t in self.latency.t_grid]
        if self.latency.t_max is not None:
            return [float(self.latency.t_max)]
        return list(DEFAULT_T_GRID)

    def sparse_spec(self, side: str) -> SparseGaussianSpec:
        raw = getattr(self.synth, side)
        if isinstance(raw, str):
            return MNIST_PRESETS[raw]
        return SparseGaussianSpec(**raw)

    # -- validation -------------------------------------------------------

    def validate(self) -> None:
        errors: list[str] = []
        try:
            p = self.partition.build()
        except (ValueError, TypeError) as exc:
            errors.append(f"partition: {exc}")
            p = None
        try:
            fam = Family(self.code.family)
        except ValueError:
            errors.append(f"code.family: unknown family {self.code.family!r}")
            fam = None
        cls = self.classes
        if len(cls.sizes_a) != cls.S or len(cls.sizes_b) != cls.S:
            errors.append("classes: sizes_a and sizes_b need S entries")
        if p is not None:
            if sum(cls.sizes_a) != p.n_a:
                errors.append(f"classes.sizes_a sums to {sum(cls.sizes_a)}, partition has {p.n_a} A-blocks")
            if sum(cls.sizes_b) != p.n_b:
                errors.append(f"classes.sizes_b sums to {sum(cls.sizes_b)}, partition has {p.n_b} B-blocks")
        if cls.classify not in ("norm", "layout"):
            errors.append("classes.classify must be 'norm' or 'layout'")
        if self.synth.kind == "gaussian":
            if cls.variances is None or len(cls.variances) != cls.S:
                errors.append("classes.variances needs S entries for gaussian synthesis")
        elif self.synth.kind == "gradient_like":
            for side in ("a", "b"):
                raw = getattr(self.synth, side)
                if isinstance(raw, str):
                    if raw not in MNIST_PRESETS:
                        errors.append(f"synth.{side}: unknown preset {raw!r}")
                elif isinstance(raw, dict):
                    try:
                        SparseGaussianSpec(**raw)
                    except (TypeError, ValueError) as exc:
                        errors.append(f"synth.{side}: {exc}")
                else:
                    errors.append(f"synth.{side} must be a preset name or an object")
        else:
            errors.append(f"synth.kind: unknown kind {self.synth.kind!r}")
        code = self.code
        if code.W < 1:
            errors.append("code.W must be >= 1")
        if code.form not in FORMS:
            errors.append(f"code.form must be one of {FORMS}")
        if code.decode_mode not in ("rank", "numeric"):
            errors.append("code.decode_mode must be 'rank' or 'numeric'")
        try:
            parse_field(code.field)
        except (ValueError, TypeError) as exc:
            errors.append(f"code.field: {exc}")
        if fam in (Family.NOW, Family.EW):
            try:
                WindowDistribution(tuple(code.gamma or ()))
            except ValueError as exc:
                errors.append(f"code.gamma: {exc}")
        if p is not None and fam is Family.UNCODED and code.W != p.n_sub:
            errors.append(f"code.W must equal {p.n_sub} for the uncoded scheme")
        if p is not None and fam is Family.REPETITION and code.W != code.repetition * p.n_sub:
            errors.append(f"code.W must equal repetition * {p.n_sub}")
        try:
            self.latency_model()
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            errors.append(f"latency: {exc}")
        if any(t < 0 for t in self.times()):
            errors.append("latency: times must be nonnegative")
        if self.trials < 1:
            errors.append("trials must be >= 1")
        if self.threads < 1:
            errors.append("threads must be >= 1")
        if self.format not in ("csv", "json"):
            errors.append("format must be 'csv' or 'json'")
        if errors:
            raise ConfigError("; ".join(errors))


_SECTION_TYPES = {
    "partition": PartitionConfig,
    "code": CodeConfig,
    "latency": LatencyConfig,
    "classes": ClassesConfig,
    "synth": SynthConfig,
}


def _build_section(cls, name: str, value):
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(value) - known
    if unknown:
        raise ConfigError(f"unknown field(s) in {name}: {sorted(unknown)}")
    return cls(**value)


# Ready-made configurations for the synthetic experiments.


def preset(name: str) -> ExperimentConfig:
    """Named configurations; see :data:`PRESETS`."""
    try:
        data = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return ExperimentConfig.from_dict(copy.deepcopy(data))


def _rxc(family: str) -> dict:
    return {
        "partition": {"scheme": "rxc", "N": 3, "P": 3, "M": 1, "U": 300, "H": 900, "Q": 300},
        "code": {"family": family, "gamma": list(DEFAULT_GAMMA), "W": 30, "field": "GF(2^16)"},
        "classes": {"S": 3, "sizes_a": [1, 1, 1], "sizes_b": [1, 1, 1],
                    "table": [[1, 1, 2], [1, 2, 3], [2, 3, 3]], "variances": [10.0, 1.0, 0.1]},
    }


def _cxr(family: str) -> dict:
    return {
        "partition": {"scheme": "cxr", "N": 1, "P": 1, "M": 9, "U": 900, "H": 100, "Q": 900},
        "code": {"family": family, "gamma": list(DEFAULT_GAMMA), "W": 30, "field": "GF(2^16)"},
        "classes": {"S": 3, "sizes_a": [3, 3, 3], "sizes_b": [3, 3, 3],
                    "table": [[1, None, None], [None, 2, None], [None, None, 3]],
                    "variances": [10.0, 1.0, 0.1]},
    }


def _gradient_setup(family: str, W: int, omega: str, repetition: int = 1) -> dict:
    return {
        "partition": {"scheme": "rxc", "N": 3, "P": 3, "M": 1, "U": 64, "H": 128, "Q": 64},
        "code": {"family": family, "gamma": list(DEFAULT_GAMMA) if family in ("NOW", "EW") else None,
                 "W": W, "field": "GF(2^16)", "repetition": repetition},
        "latency": {"rate": 0.5, "omega": omega, "t_grid": [0.25, 0.5, 1.0, 2.0]},
        "classes": {"S": 3, "sizes_a": [1, 1, 1], "sizes_b": [1, 1, 1],
                    "table": [[1, 1, 2], [1, 2, 3], [2, 3, 3]], "variances": None, "classify": "norm"},
        "synth": {"kind": "gradient_like", "a": "input_layer2", "b": "gradient_layer2", "permute": True},
        "trials": 2000,
    }


PRESETS: dict[str, dict] = {
    "now-rxc": _rxc("NOW"),
    "ew-rxc": _rxc("EW"),
    "mds-rxc": _rxc("MDS"),
    "now-cxr": _cxr("NOW"),
    "ew-cxr": _cxr("EW"),
    "uncoded-gradient": _gradient_setup("uncoded", 9, "9/9"),
    "now-gradient": _gradient_setup("NOW", 15, "9/15"),
    "ew-gradient": _gradient_setup("EW", 15, "9/15"),
    "repetition-gradient": _gradient_setup("repetition", 18, "9/18", repetition=2),
}

"""Command-line entry point.

::

    uepmm analyze decode-prob --config cfg.json
    uepmm analyze loss --config preset:now-rxc
    uepmm simulate --config cfg.json --trials 10000 --seed 1 --threads 8
    uepmm sweep --config cfg.json --param code.W --values 15,30

Exit status is 0 on success, 2 for configuration errors and 1 for any
other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

from . import harness
from .config import ConfigError, ExperimentConfig, preset

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _value(text: str) -> Any:
    """JSON literal when it parses, otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _values(text: str) -> list:
    text = text.strip()
    if text.startswith("["):
        vals = _value(text)
        if not isinstance(vals, list):
            raise ConfigError(f"--values: cannot parse {text!r}")
        return vals
    return [_value(v.strip()) for v in text.split(",") if v.strip()]


def load_config(spec: str | None) -> ExperimentConfig:
    """A JSON file path, ``preset:NAME``, or ``None`` for the defaults."""
    if spec is None:
        return ExperimentConfig.from_dict({})
    if spec.startswith("preset:"):
        return preset(spec.split(":", 1)[1])
    return ExperimentConfig.load(spec)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in args.set or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = _value(raw.strip())
    flags = {
        "trials": "trials",
        "seed": "seed",
        "threads": "threads",
        "rate": "latency.rate",
        "omega": "latency.omega",
        "t_max": "latency.t_max",
        "workers": "code.W",
        "field": "code.field",
        "format": "format",
        "output": "output",
    }
    for attr, path in flags.items():
        val = getattr(args, attr, None)
        if val is not None:
            out[path] = val
    if getattr(args, "t_grid", None) is not None:
        out["latency.t_grid"] = [float(x) for x in _values(args.t_grid)]
    return out


def _config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config)
    ov = _overrides(args)
    return cfg.with_overrides(ov) if ov else cfg


def _run(cfg: ExperimentConfig, mode: str, max_n: int | None = None):
    if mode == "decode-prob":
        return [harness.run_decode_prob(cfg, max_n)], None
    if mode == "loss":
        return [harness.run_analytic(cfg)], None
    curve, records = harness.run_monte_carlo(cfg)
    return [curve], records


def _emit(cfg: ExperimentConfig, curves, records=None, keep_trials: bool = False) -> None:
    text = harness.emit(curves, cfg.output, cfg.format, records if keep_trials else None)
    if cfg.output is None:
        sys.stdout.write(text)


def cmd_analyze(args: argparse.Namespace) -> None:
    cfg = _config(args)
    curves, _ = _run(cfg, args.what, args.max_n)
    _emit(cfg, curves)


def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = _config(args)
    curves, records = _run(cfg, "simulate")
    _emit(cfg, curves, records, args.records)


def cmd_sweep(args: argparse.Namespace) -> None:
    base = _config(args)
    curves = []
    for val in _values(args.values):
        cfg = base.with_overrides({args.param: val})
        for c in _run(cfg, args.mode)[0]:
            c.scheme = f"{c.scheme}[{args.param}={json.dumps(val)}]"
            curves.append(c)
    _emit(base, curves)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config path or preset:NAME (default: built-in defaults)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field by dotted path, e.g. code.W=15 (repeatable)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--rate", type=float, help="latency rate lambda")
    p.add_argument("--omega", help="load scaling, e.g. 9/15 or auto")
    p.add_argument("--t-max", dest="t_max", type=float, help="single deadline")
    p.add_argument("--t-grid", dest="t_grid", help="comma-separated deadlines")
    p.add_argument("--workers", type=int, help="number of workers W")
    p.add_argument("--field", help="coding field, e.g. GF(2^16) or GF(7)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uepmm", description="UEP-coded approximate matrix multiplication")
    sub = parser.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="closed-form curves")
    an.add_argument("what", choices=("decode-prob", "loss"))
    an.add_argument("--max-n", dest="max_n", type=int, help="largest packet count for decode-prob (default W)")
    _common(an)
    an.set_defaults(func=cmd_analyze)

    sim = sub.add_parser("simulate", help="Monte-Carlo loss curve")
    _common(sim)
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--records", action="store_true", help="include per-trial records (JSON only)")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="repeat an analysis over values of one config field")
    _common(sw)
    sw.add_argument("--param", required=True, help="dotted config field, e.g. code.W")
    sw.add_argument("--values", required=True, help="comma-separated values or a JSON list")
    sw.add_argument("--mode", choices=("loss", "decode-prob", "simulate"), default="loss")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--threads", type=int)
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

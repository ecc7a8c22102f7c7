"""Command-line interface.

Subcommands: simulate (one run), fig2 (one realization per rule), fig3
(quantizer-grid seed sweep), analyze (static graph report), check
(invariant/property suite). Exit codes: 0 success, 1 validation error,
2 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
import yaml

from . import checks, engine, experiments
from .errors import InvariantViolation, ValidationError
from .graph import from_laplacian, load_laplacian


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError(f"could not read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError(f"config {path!r} must be a mapping")
    return cfg


def _spec_from_config(cfg: dict, out_dir: str | None = None) -> experiments.ExperimentSpec:
    lap = cfg.get("laplacian")
    if lap is None:
        raise ValidationError("config needs a 'laplacian' (path or inline matrix)")
    if isinstance(lap, str):
        graph = load_laplacian(lap)
    else:
        graph = from_laplacian(np.asarray(lap, dtype=float))

    rules = cfg.get("rules", list(experiments.RULES))
    if isinstance(rules, str):
        rules = [rules]

    kwargs = dict(
        graph=graph,
        rules=tuple(rules),
        delta_u=float(cfg.get("delta_u", 0.5)),
        delta_prime=float(cfg.get("delta_prime", 0.25)),
        deltas=cfg.get("deltas", 0.25),
        n_seeds=int(cfg.get("n_seeds", 100)),
        seed0=int(cfg.get("seed", 0)),
        t_end=float(cfg.get("t_end", 10.0)),
        sample_count=int(cfg.get("samples", engine.DEFAULT_SAMPLE_COUNT)),
        window_fraction=float(cfg.get("window_fraction", 0.2)),
        workers=int(cfg.get("workers", 0)),
    )
    if "delta_u_grid" in cfg:
        kwargs["delta_u_grid"] = tuple(float(v) for v in cfg["delta_u_grid"])
    if "x0_range" in cfg:
        lo, hi = cfg["x0_range"]
        kwargs["x0_range"] = (float(lo), float(hi))
    if "x0" in cfg:
        kwargs["x0"] = tuple(float(v) for v in cfg["x0"])
    kwargs["output_dir"] = Path(out_dir or cfg.get("out_dir", "results"))
    return experiments.ExperimentSpec(**kwargs)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg, args.out)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed0=args.seed)
    rule = cfg.get("rule", spec.rules[0])
    trace = engine.run(experiments.make_config(spec, rule, spec.delta_u, spec.seed0))
    engine.verify_trace(trace)
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    engine.write_trace_csv(trace, out / "trace.csv")
    engine.write_triggers_csv(trace, out / "triggers.csv")
    summary = experiments.summarize(trace, spec.window_fraction)
    print(f"rule={rule} seed={spec.seed0} delta_u={spec.delta_u}")
    for key, value in summary.items():
        print(f"  {key}: {value}")
    print(f"wrote {out / 'trace.csv'} and {out / 'triggers.csv'}")
    return 0


def _cmd_fig2(args) -> int:
    spec = _spec_from_config(_load_config(args.config), args.out)
    report = experiments.run_fig2(spec)
    for rule, summary in report["summaries"].items():
        print(f"{rule}: tail_spread={summary['tail_spread']:.4f} "
              f"events={summary['events']}")
    print(f"wrote {len(report['paths'])} files under {spec.output_dir}")
    return 0


def _cmd_fig3(args) -> int:
    spec = _spec_from_config(_load_config(args.config), args.out)
    path = experiments.run_fig3(spec)
    print(f"wrote {path}")
    return 0


def _cmd_analyze(args) -> int:
    report = experiments.analyze_graph(args.laplacian, args.delta_prime)
    print(f"agents: {report['n']}")
    print(f"max in-degree: {report['l_max']}")
    print(f"spanning tree: {report['has_spanning_tree']}")
    print(f"max threshold with spanning tree: {report['max_delta_spanning_tree']}")
    if report["left_null_vector"] is not None:
        xi = ", ".join(f"{v:.6f}" for v in report["left_null_vector"])
        print(f"conserved weights: [{xi}]")
    if report["trigger_bounds"] is not None:
        lo, hi = report["trigger_bounds"]
        print(f"centralized interval at margin {report['delta_prime']}: "
              f"({lo:.6f}, {hi:.6f})")
    return 0


def _cmd_check(args) -> int:
    results = checks.run_all()
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed}/{len(results)} checks failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stcon",
        description="Self-triggered consensus simulation lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fig2", help="one realization per rule: traces + summary")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fig2)

    p = sub.add_parser("fig3", help="quantizer-grid seed sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fig3)

    p = sub.add_parser("analyze", help="static report on a Laplacian file")
    p.add_argument("--laplacian", required=True)
    p.add_argument("--delta-prime", type=float, default=0.25, dest="delta_prime")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("check", help="run the invariant/property suite")
    p.add_argument("--all", action="store_true", help="run every check (default)")
    p.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

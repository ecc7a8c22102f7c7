"""Experiment runner: demo network, seed sweeps, and analysis reports.

Reproduces the two standard experiments at desk scale: the evolution of
the disagreement d(x(t)) under all four rules for one realization
("fig2"), and the mean tail disagreement across a grid of quantizer
resolutions averaged over many seeds ("fig3"). Output is plot-ready CSV;
every file regenerates byte-identically from the same spec and seeds.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine
from .engine import SimConfig, SimTrace, seed_streams
from .errors import ValidationError
from .graph import (
    Digraph,
    from_laplacian,
    has_delta_spanning_tree,
    has_spanning_tree,
    load_laplacian,
)
from .protocol import (
    InputMode,
    TriggerMode,
    centralized_bounds,
    centralized_plan,
    distributed_plan,
)
from .quantize import UniformQuantizer
from .stochmat import left_null_vector

# Bundled 7-agent benchmark network: reducible, spanning tree rooted in
# the {5,6,7} source component, max in-degree 14.
DEMO_LAPLACIAN = np.array(
    [
        [9, -2, 0, 0, -7, 0, 0],
        [0, 8, -4, 0, 0, 0, -4],
        [0, -3, 10, -4, 0, 0, -3],
        [-4, 0, -5, 14, 0, -5, 0],
        [0, 0, 0, 0, 6, -6, 0],
        [0, 0, 0, 0, 0, 7, -7],
        [0, 0, 0, 0, -5, -4, 9],
    ],
    dtype=float,
)

RULES = (
    "centralized-comm",
    "distributed-comm",
    "centralized-sensing",
    "distributed-sensing",
)

_RULE_MAP = {
    "centralized-comm": (TriggerMode.CENTRALIZED, InputMode.QUANTIZED_COMM),
    "distributed-comm": (TriggerMode.DISTRIBUTED, InputMode.QUANTIZED_COMM),
    "centralized-sensing": (TriggerMode.CENTRALIZED, InputMode.QUANTIZED_SENSING),
    "distributed-sensing": (TriggerMode.DISTRIBUTED, InputMode.QUANTIZED_SENSING),
}

DEFAULT_DELTA_U_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))


def parse_rule(rule: str) -> tuple[TriggerMode, InputMode]:
    try:
        return _RULE_MAP[rule]
    except KeyError:
        raise ValidationError(
            f"unknown rule {rule!r}; expected one of {', '.join(RULES)}"
        ) from None


@dataclass(frozen=True)
class ExperimentSpec:
    """Template for a batch of runs over rules, quantizer levels, and seeds."""

    graph: Digraph
    rules: tuple[str, ...] = RULES
    delta_u: float = 0.5
    delta_prime: float = 0.25
    deltas: float = 0.25
    delta_u_grid: tuple[float, ...] = DEFAULT_DELTA_U_GRID
    n_seeds: int = 100
    seed0: int = 0
    t_end: float = 10.0
    x0_range: tuple[float, float] = (-5.0, 5.0)
    x0: Optional[tuple[float, ...]] = None
    sample_count: int = 500
    window_fraction: float = 0.2
    output_dir: Path = field(default_factory=lambda: Path("results"))
    workers: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        for rule in self.rules:
            parse_rule(rule)
        if self.n_seeds < 1:
            raise ValidationError(f"n_seeds must be >= 1, got {self.n_seeds}")
        grid = np.asarray(self.delta_u_grid, dtype=float)
        if grid.size and (np.any(grid <= 0) or np.any(np.diff(grid) <= 0)):
            raise ValidationError("delta_u_grid must be positive and increasing")
        if not self.x0_range[0] < self.x0_range[1]:
            raise ValidationError("x0_range must be an increasing pair")


def make_config(spec: ExperimentSpec, rule: str, delta_u: float, seed: int) -> SimConfig:
    """One concrete run: seed fixes both the initial state and all draws."""
    trig_mode, input_mode = parse_rule(rule)
    g = spec.graph
    if spec.x0 is not None:
        x0 = np.asarray(spec.x0, dtype=float)
    else:
        x0_seed, _ = seed_streams(seed, g.n)
        lo, hi = spec.x0_range
        x0 = np.random.default_rng(x0_seed).uniform(lo, hi, g.n)
    if trig_mode == TriggerMode.CENTRALIZED:
        plan = centralized_plan(g, spec.delta_prime)
    else:
        plan = distributed_plan(g, spec.deltas)
    return SimConfig(
        graph=g,
        mode=input_mode,
        plan=plan,
        quantizer=UniformQuantizer(delta_u),
        x0=x0,
        t_end=spec.t_end,
        master_seed=seed,
        sample_count=spec.sample_count,
    )


def summarize(trace: SimTrace, window_fraction: float = 0.2) -> dict:
    """Scalar summary of one run, as written to the summary CSVs."""
    lo, hi = engine.min_max_gap(trace)
    residual = None
    if trace.config.mode == InputMode.QUANTIZED_COMM and has_spanning_tree(
        trace.config.graph
    ):
        residual = engine.conservation_residual(
            trace, left_null_vector(trace.config.graph)
        )
    return {
        "tail_spread": engine.tail_spread(trace, window_fraction),
        "min_gap": lo,
        "max_gap": hi,
        "events": len(trace.events),
        "conservation_residual": residual,
    }


def _job(args: tuple) -> tuple:
    spec, rule, delta_u, seed = args
    trace = engine.run(make_config(spec, rule, delta_u, seed))
    return rule, delta_u, seed, summarize(trace, spec.window_fraction)


def sweep(
    spec: ExperimentSpec,
    rules: Sequence[str],
    delta_us: Sequence[float],
    seeds: Sequence[int],
) -> dict[tuple[str, float, int], dict]:
    """Run every (rule, delta_u, seed) combination, possibly in parallel.

    Results are keyed by the combination, so aggregation never depends on
    completion order and sweeps stay deterministic.
    """
    jobs = [
        (spec, rule, du, seed) for rule in rules for du in delta_us for seed in seeds
    ]
    workers = spec.workers if spec.workers > 0 else (os.cpu_count() or 1)
    results: dict[tuple[str, float, int], dict] = {}
    if workers <= 1 or len(jobs) < 8:
        done = map(_job, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        try:
            done = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
        finally:
            pool.shutdown()
    for rule, du, seed, summary in done:
        results[(rule, du, seed)] = summary
    return results


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_fig2(spec: ExperimentSpec) -> dict:
    """One realization per rule: d(x(t)) trace, trigger times, summary row.

    Writes fig2_<rule>_trace.csv and fig2_<rule>_triggers.csv per rule
    plus fig2_summary.csv, all under spec.output_dir.
    """
    if not has_spanning_tree(spec.graph):
        raise ValidationError("graph has no spanning tree; consensus is unreachable")
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    summaries = {}
    paths = []
    for rule in spec.rules:
        trace = engine.run(make_config(spec, rule, spec.delta_u, spec.seed0))
        trace_path = out / f"fig2_{rule}_trace.csv"
        trig_path = out / f"fig2_{rule}_triggers.csv"
        engine.write_trace_csv(trace, trace_path)
        engine.write_triggers_csv(trace, trig_path)
        paths.extend([trace_path, trig_path])
        summaries[rule] = summarize(trace, spec.window_fraction)

    summary_path = out / "fig2_summary.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["rule", "tail_spread", "min_gap", "max_gap", "events",
             "conservation_residual"]
        )
        for rule in spec.rules:
            s = summaries[rule]
            writer.writerow(
                [rule, _fmt(s["tail_spread"]), _fmt(s["min_gap"]),
                 _fmt(s["max_gap"]), s["events"], _fmt(s["conservation_residual"])]
            )
    paths.append(summary_path)
    return {"summaries": summaries, "paths": paths}


def run_fig3(spec: ExperimentSpec) -> Path:
    """Mean/std tail disagreement per (rule, delta_u) over n_seeds realizations.

    The same seed list is reused at every grid point, so grid points are
    paired and the monotonicity comparison is noise-matched. Writes
    fig3_sweep.csv under spec.output_dir and returns its path.
    """
    if not spec.delta_u_grid:
        raise ValidationError("delta_u_grid must not be empty")
    if not has_spanning_tree(spec.graph):
        raise ValidationError("graph has no spanning tree; consensus is unreachable")
    seeds = range(spec.seed0, spec.seed0 + spec.n_seeds)
    results = sweep(spec, spec.rules, spec.delta_u_grid, list(seeds))

    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "fig3_sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["rule", "delta_u", "mean_tail_spread", "std_tail_spread", "n_seeds"]
        )
        for rule in spec.rules:
            for du in spec.delta_u_grid:
                tails = np.array(
                    [results[(rule, du, s)]["tail_spread"] for s in seeds]
                )
                writer.writerow(
                    [rule, _fmt(float(du)), _fmt(float(tails.mean())),
                     _fmt(float(tails.std())), spec.n_seeds]
                )
    return path


def analyze_graph(source, delta_prime: float = 0.25) -> dict:
    """Static report on a network: size, degrees, connectivity, weights.

    `source` may be a Digraph, a Laplacian array, or a path to a
    Laplacian text file. The report carries the spanning-tree verdict,
    the largest threshold at which a thresholded spanning tree survives,
    the conserved-weight vector (when defined), and the centralized
    trigger interval for the given margin.
    """
    if isinstance(source, Digraph):
        g = source
    elif isinstance(source, (str, Path)):
        g = load_laplacian(source)
    else:
        g = from_laplacian(source)

    tree = has_spanning_tree(g)
    max_delta = None
    if tree:
        weights = sorted(set(g.adjacency[g.adjacency > 0.0].tolist()))
        if weights:
            lo, hi = 0, len(weights) - 1
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if has_delta_spanning_tree(g.adjacency, weights[mid]):
                    lo = mid
                else:
                    hi = mid - 1
            max_delta = weights[lo] if has_delta_spanning_tree(g.adjacency, weights[lo]) else None

    xi = left_null_vector(g).tolist() if tree else None
    bounds = centralized_bounds(g, delta_prime) if g.l_max > 0 or g.n == 1 else None
    return {
        "n": g.n,
        "l_max": g.l_max,
        "has_spanning_tree": tree,
        "max_delta_spanning_tree": max_delta,
        "left_null_vector": xi,
        "delta_prime": delta_prime,
        "trigger_bounds": bounds,
    }

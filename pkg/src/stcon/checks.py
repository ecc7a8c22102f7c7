"""Self-contained invariant and property suite, runnable from the CLI.

Each check returns a CheckResult instead of raising, so `stcon check`
can report every verdict in one pass. The pytest suite drives the same
functions; keeping them here means the shipped tool can audit itself
without a test framework installed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, experiments, protocol, stochmat
from .errors import StconError
from .graph import from_laplacian, has_delta_spanning_tree
from .quantize import UniformQuantizer


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_quantizer_error_bound(samples: int = 1_000_000, seed: int = 2026) -> CheckResult:
    """|q(a) - a| <= delta on random points, plus grid and idempotence facts."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1e6, 1e6, samples)
    deltas = rng.uniform(1e-6, 10.0, samples)
    steps = 2.0 * deltas
    q = steps * np.floor(a / steps + 0.5)
    err = np.abs(q - a)
    # half-ulp slack: boundary points and the multiply-back step can each
    # land one representable value over the exact bound
    eps = np.finfo(float).eps
    bound = deltas * (1.0 + 1e-12) + 2 * eps * np.maximum(np.abs(a), np.abs(q))
    worst = float((err - bound).max())
    multiples = q / steps
    on_grid = np.allclose(multiples, np.round(multiples))
    q2 = steps * np.floor(q / steps + 0.5)
    idempotent = np.array_equal(q, q2)
    passed = worst <= 0 and on_grid and idempotent
    return _result(
        "quantizer-error-bound",
        passed,
        f"worst excess {worst:.3e}, grid={on_grid}, idempotent={idempotent}",
    )


def _random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.random((n, n))
    return m / m.sum(axis=1, keepdims=True)


def check_contraction_inequality(trials: int = 1000, seed: int = 2026) -> CheckResult:
    """Hajnal diameter contracts: D(AB) <= (1 - mu(A)) D(B) + 1e-12."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        a, b = _random_stochastic(rng, n), _random_stochastic(rng, n)
        lhs = stochmat.hajnal_diameter(a @ b)
        rhs = (1.0 - stochmat.ergodicity_coefficient(a)) * stochmat.hajnal_diameter(b)
        worst = max(worst, lhs - rhs)
    return _result(
        "contraction-inequality", worst <= 1e-12, f"worst violation {worst:.3e}"
    )


def check_spread_inequality(trials: int = 1000, seed: int = 2026) -> CheckResult:
    """spread(Ax) <= D(A) spread(x) <= D(A) sqrt(2) ||x|| + 1e-12."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        a = _random_stochastic(rng, n)
        x = rng.normal(0.0, 3.0, n)
        diam = stochmat.hajnal_diameter(a)
        first = stochmat.spread(a @ x) - diam * stochmat.spread(x)
        second = diam * stochmat.spread(x) - diam * np.sqrt(2.0) * np.linalg.norm(x)
        worst = max(worst, first, second)
    return _result("spread-inequality", worst <= 1e-12, f"worst violation {worst:.3e}")


def random_tree_stochastic(
    rng: np.random.Generator, n: int, diag_floor: float, tree_floor: float
) -> np.ndarray:
    """Random stochastic matrix with diagonal >= diag_floor and a spanning
    tree at level tree_floor, built as a convex combination so both floors
    hold exactly."""
    order = rng.permutation(n)
    tree = np.zeros((n, n))
    for pos in range(1, n):
        child = order[pos]
        parent = order[int(rng.integers(0, pos))]
        tree[child, parent] = 1.0
    tree[order[0], order[0]] = 1.0
    rest = _random_stochastic(rng, n)
    return diag_floor * np.eye(n) + tree_floor * tree + (
        1.0 - diag_floor - tree_floor
    ) * rest


def check_product_scrambling(trials: int = 100, seed: int = 2026) -> CheckResult:
    """Products of n-1 well-connected stochastic factors are scrambling.

    Each factor has diagonal >= 0.2 and a 0.2-level spanning tree; the
    left product of n-1 of them must have a positive ergodicity
    coefficient in every trial.
    """
    rng = np.random.default_rng(seed)
    failures = 0
    worst = np.inf
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        ms = [random_tree_stochastic(rng, n, 0.2, 0.2) for _ in range(n - 1)]
        mu = stochmat.window_scrambling_coefficient(ms)
        worst = min(worst, mu)
        if not mu > 0:
            failures += 1
    return _result(
        "product-scrambling",
        failures == 0,
        f"{trials - failures}/{trials} trials scrambling, min mu {worst:.3e}",
    )


def check_coefficient_bounds(trials: int = 300, seed: int = 2026) -> CheckResult:
    """For stochastic M: mu and the diameter lie in [0, 1]; scrambling at
    level s implies mu >= s."""
    rng = np.random.default_rng(seed)
    ok = True
    detail = "all bounds held"
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        m = _random_stochastic(rng, n)
        mu = stochmat.ergodicity_coefficient(m)
        diam = stochmat.hajnal_diameter(m)
        if not (-1e-12 <= mu <= 1 + 1e-12 and -1e-12 <= diam <= 1 + 1e-12):
            ok, detail = False, f"mu={mu}, diameter={diam} out of [0,1]"
            break
        level = float(m.min() + 1e-12)
        if level > 0 and stochmat.is_scrambling(m, level) and mu < level - 1e-12:
            ok, detail = False, f"scrambling at {level} but mu={mu}"
            break
    return _result("coefficient-bounds", ok, detail)


def _demo_spec(**overrides) -> experiments.ExperimentSpec:
    g = from_laplacian(experiments.DEMO_LAPLACIAN)
    return experiments.ExperimentSpec(graph=g, **overrides)


def check_matrix_form_oracle(seed: int = 7, min_events: int = 100) -> CheckResult:
    """Centralized communication engine vs the closed-form step matrices.

    Over every event transition, x(t_{k+1}) must equal
    (I - dt_k L) x(t_k) - dt_k L (q(x(t_k)) - x(t_k)) to 1e-12.
    """
    spec = _demo_spec(t_end=10.0)
    trace = engine.run(experiments.make_config(spec, "centralized-comm", 0.5, seed))
    if len(trace.events) < min_events + 1:
        return _result("matrix-form-oracle", False, "trace too short")
    lap = trace.config.graph.laplacian
    qv = trace.config.quantizer.quantize_vector
    worst = 0.0
    for k in range(len(trace.events) - 1):
        xk = trace.events[k].x
        dt = trace.events[k + 1].t - trace.events[k].t
        a_k = np.eye(lap.shape[0]) - dt * lap
        predicted = a_k @ xk - dt * (lap @ (qv(xk) - xk))
        worst = max(worst, float(np.abs(predicted - trace.events[k + 1].x).max()))
    return _result(
        "matrix-form-oracle",
        worst <= 1e-12,
        f"{len(trace.events) - 1} events, worst error {worst:.3e}",
    )


def check_lifted_replay(seed: int = 7, max_events: int = 60) -> CheckResult:
    """Distributed communication trace replays through the stacked update."""
    spec = _demo_spec(t_end=10.0)
    trace = engine.run(experiments.make_config(spec, "distributed-comm", 0.5, seed))
    tau1, _ = protocol.plan_interleaving_bounds(trace.config.plan)
    first = tau1
    last = min(len(trace.events) - 2, first + max_events)
    if last < first:
        return _result("lifted-replay", False, "trace too short for the history window")
    try:
        for k in range(first, last + 1):
            stochmat.lifted_transition(trace, k, tau1, trace.config.plan.deltas)
    except StconError as exc:
        return _result("lifted-replay", False, f"event {k}: {exc}")
    return _result(
        "lifted-replay", True, f"events {first}..{last} replayed (history {tau1})"
    )


def check_conservation(seed: int = 7) -> CheckResult:
    """Weighted mean xi . x(t) is conserved under both communication rules."""
    spec = _demo_spec(t_end=10.0)
    xi = stochmat.left_null_vector(spec.graph)
    worst = 0.0
    for rule in ("centralized-comm", "distributed-comm"):
        trace = engine.run(experiments.make_config(spec, rule, 0.5, seed))
        residual = engine.conservation_residual(trace, xi)
        allowed = 1e-9 * max(1.0, float(np.linalg.norm(trace.config.x0)))
        worst = max(worst, residual / allowed)
    return _result(
        "conservation", worst <= 1.0, f"worst residual at {worst:.3e} of budget"
    )


def check_interval_compliance(seed: int = 7) -> CheckResult:
    """Trace invariants (strict gaps, event-count bound) for all four rules."""
    spec = _demo_spec(t_end=10.0)
    try:
        for rule in experiments.RULES:
            trace = engine.run(experiments.make_config(spec, rule, 0.5, seed))
            engine.verify_trace(trace)
    except StconError as exc:
        return _result("interval-compliance", False, f"{rule}: {exc}")
    return _result("interval-compliance", True, "all four rules verified")


def check_interleaving(seed: int = 7) -> CheckResult:
    """Distributed event-interleaving bounds hold on realized traces."""
    spec = _demo_spec(t_end=10.0)
    try:
        for rule in ("distributed-comm", "distributed-sensing"):
            trace = engine.run(experiments.make_config(spec, rule, 0.5, seed))
            tau1, tau2 = engine.verify_interleaving(trace)
    except StconError as exc:
        return _result("interleaving", False, str(exc))
    return _result("interleaving", True, f"bounds ({tau1}, {tau2}) verified")


def check_determinism(seed: int = 7) -> CheckResult:
    """Identical configs produce bitwise-identical traces."""
    spec = _demo_spec(t_end=5.0)
    for rule in experiments.RULES:
        t1 = engine.run(experiments.make_config(spec, rule, 0.5, seed))
        t2 = engine.run(experiments.make_config(spec, rule, 0.5, seed))
        same = (
            np.array_equal(t1.sample_x, t2.sample_x)
            and np.array_equal(t1.sample_t, t2.sample_t)
            and len(t1.events) == len(t2.events)
            and all(a.t == b.t and a.agents == b.agents
                    for a, b in zip(t1.events, t2.events))
        )
        if not same:
            return _result("determinism", False, f"{rule}: replays diverged")
    return _result("determinism", True, "all four rules replay bitwise")


def check_quantizer_scaling(n_seeds: int = 100) -> CheckResult:
    """Halving the quantizer error does not raise the ensemble-mean tail."""
    spec = _demo_spec(t_end=10.0, n_seeds=n_seeds)
    seeds = list(range(n_seeds))
    coarse = experiments.sweep(spec, ["centralized-comm"], [0.5], seeds)
    fine = experiments.sweep(spec, ["centralized-comm"], [0.25], seeds)
    mean_coarse = float(
        np.mean([coarse[("centralized-comm", 0.5, s)]["tail_spread"] for s in seeds])
    )
    mean_fine = float(
        np.mean([fine[("centralized-comm", 0.25, s)]["tail_spread"] for s in seeds])
    )
    return _result(
        "quantizer-scaling",
        mean_fine <= mean_coarse,
        f"mean tail {mean_fine:.4f} (delta 0.25) vs {mean_coarse:.4f} (delta 0.5)",
    )


def check_demo_graph() -> CheckResult:
    """Static facts about the bundled network."""
    g = from_laplacian(experiments.DEMO_LAPLACIAN)
    report = experiments.analyze_graph(g)
    facts = (
        report["n"] == 7
        and report["l_max"] == 14.0
        and report["has_spanning_tree"]
        and has_delta_spanning_tree(g.adjacency, 2.0)
        and not has_delta_spanning_tree(g.adjacency, 8.0)
    )
    return _result("demo-graph", facts, f"report: {report['max_delta_spanning_tree']=}")


ALL_CHECKS = (
    check_quantizer_error_bound,
    check_contraction_inequality,
    check_spread_inequality,
    check_product_scrambling,
    check_coefficient_bounds,
    check_demo_graph,
    check_matrix_form_oracle,
    check_lifted_replay,
    check_conservation,
    check_interval_compliance,
    check_interleaving,
    check_determinism,
    check_quantizer_scaling,
)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]

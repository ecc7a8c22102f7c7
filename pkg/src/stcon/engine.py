"""Deterministic event-driven simulator for the self-triggered rules.

State trajectories are exactly piecewise linear: inputs only change at
trigger events, so between events every agent moves with constant
velocity and the engine advances states in closed form. Events are
processed from a priority queue keyed by (time, agent index); agents
whose scheduled times coincide exactly are handled inside one system
event, in ascending index order, all reading the pre-event state.

Per-agent trigger draws come from independent named substreams of one
master seed, so a run is bitwise reproducible and the draws of one agent
do not depend on how many events other agents generate.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvariantViolation, ModeMismatch, ValidationError
from .graph import Digraph, has_spanning_tree
from .protocol import (
    InputMode,
    TriggerMode,
    TriggerPlan,
    draw_next_trigger,
    plan_interleaving_bounds,
)
from .quantize import UniformQuantizer
from .stochmat import left_null_vector

DEFAULT_SAMPLE_COUNT = 500


def seed_streams(
    master_seed: int, n: int
) -> tuple[np.random.SeedSequence, list[np.random.SeedSequence]]:
    """Split a master seed into the x0 stream and n per-agent trigger streams."""
    children = np.random.SeedSequence(master_seed).spawn(n + 1)
    return children[0], children[1:]


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; two configs that compare equal replay identically."""

    graph: Digraph
    mode: InputMode
    plan: TriggerPlan
    quantizer: UniformQuantizer
    x0: np.ndarray
    t_end: float = 10.0
    master_seed: int = 0
    sample_count: int = DEFAULT_SAMPLE_COUNT
    sample_period: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        self.x0.setflags(write=False)

    def validate(self) -> None:
        n = self.graph.n
        if self.plan.n != n:
            raise ValidationError(
                f"plan is for {self.plan.n} agents but graph has {n}"
            )
        if self.x0.shape != (n,):
            raise ValidationError(f"x0 must have shape ({n},), got {self.x0.shape}")
        if not np.all(np.isfinite(self.x0)):
            raise ValidationError("x0 must be finite")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValidationError(f"t_end must be positive, got {self.t_end}")
        if self.sample_period is not None and not self.sample_period > 0:
            raise ValidationError("sample_period must be positive")
        if self.sample_period is None and self.sample_count < 2:
            raise ValidationError("sample_count must be at least 2")


@dataclass(frozen=True)
class EventRecord:
    """One system event: time, who triggered, inputs before/after, exact state."""

    t: float
    agents: tuple[int, ...]
    u_before: np.ndarray
    u_after: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class SimTrace:
    """Full record of one run: events, per-agent triggers, sampled trajectory."""

    config: SimConfig
    events: tuple[EventRecord, ...]
    trigger_times: tuple[np.ndarray, ...]
    sample_t: np.ndarray
    sample_x: np.ndarray
    sample_d: np.ndarray
    conservation: Optional[np.ndarray]
    final_state: np.ndarray

    @property
    def event_times(self) -> np.ndarray:
        return np.array([ev.t for ev in self.events])


def advance(x, u, dt: float) -> np.ndarray:
    """Exact affine step x + dt * u of the constant-input dynamics."""
    if dt < 0:
        raise ValidationError(f"dt must be >= 0, got {dt}")
    return np.asarray(x, dtype=float) + dt * np.asarray(u, dtype=float)


def _strict_draw(t: float, lo: float, hi: float, rng: np.random.Generator) -> float:
    # redraw until the *realized* gap (after rounding t + gap) is interior
    while True:
        nxt = draw_next_trigger(t, (lo, hi), rng)
        gap = nxt - t
        if lo < gap < hi:
            return nxt


def run(config: SimConfig) -> SimTrace:
    """Simulate one run and record the full trace.

    At each system event: triggering agents refresh their frozen
    quantities (a quantized self-state broadcast under communication, a
    quantized relative measurement under sensing), the affected inputs
    are recomputed, and the triggering agents schedule their next draws.
    """
    config.validate()
    g = config.graph
    n = g.n
    lap = g.laplacian
    adj = g.adjacency
    plan = config.plan
    qz = config.quantizer.quantize
    comm = config.mode == InputMode.QUANTIZED_COMM
    centralized = plan.mode == TriggerMode.CENTRALIZED
    t_end = config.t_end

    _, agent_seeds = seed_streams(config.master_seed, n)
    rngs = [np.random.default_rng(s) for s in agent_seeds]
    system_rng = rngs[0]

    # agents whose broadcasts feed agent i's input (includes i itself)
    needed = [np.nonzero(lap[i] != 0.0)[0] for i in range(n)]
    nbrs = [np.nonzero(adj[i] > 0.0)[0] for i in range(n)]
    weights = [adj[i, nbrs[i]] for i in range(n)]

    heap: list[tuple[float, int]] = [(float(plan.first[i]), i) for i in range(n)]
    heapq.heapify(heap)

    x = config.x0.copy()
    u = np.zeros(n)
    t = 0.0
    broadcasts = np.zeros(n)
    has_broadcast = np.zeros(n, dtype=bool)
    all_ready = False

    events: list[EventRecord] = []
    trigger_times: list[list[float]] = [[] for _ in range(n)]
    last_trigger = [None] * n

    bp_t: list[float] = [0.0]
    bp_x: list[np.ndarray] = [x.copy()]
    bp_u: list[np.ndarray] = [u.copy()]

    while heap and heap[0][0] <= t_end:
        t_ev = heap[0][0]
        trig: list[int] = []
        while heap and heap[0][0] == t_ev:
            trig.append(heapq.heappop(heap)[1])
        trig.sort()

        x = x + (t_ev - t) * u
        t = t_ev
        u_before = u.copy()

        if comm:
            for i in trig:
                broadcasts[i] = qz(x[i])
                has_broadcast[i] = True
            if not all_ready:
                all_ready = bool(has_broadcast.all())
            if all_ready:
                u = -(lap @ broadcasts)
            else:
                u = np.zeros(n)
                for i in range(n):
                    if has_broadcast[needed[i]].all():
                        u[i] = -(lap[i] @ broadcasts)
        else:
            u = u.copy()
            for i in trig:
                total = 0.0
                xi = x[i]
                w = weights[i]
                js = nbrs[i]
                for idx in range(len(js)):
                    total += w[idx] * qz(x[js[idx]] - xi)
                u[i] = total

        for i in trig:
            prev = last_trigger[i]
            if prev is not None:
                gap = t_ev - prev
                lo, hi = plan.lower[i], plan.upper[i]
                if not (lo < gap < hi):
                    raise InvariantViolation(
                        f"agent {i} realized gap {gap!r} outside ({lo}, {hi})"
                    )
            last_trigger[i] = t_ev
            trigger_times[i].append(t_ev)

        events.append(
            EventRecord(
                t=t_ev,
                agents=tuple(trig),
                u_before=u_before,
                u_after=u.copy(),
                x=x.copy(),
            )
        )
        if bp_t[-1] == t_ev:
            bp_x[-1] = x.copy()
            bp_u[-1] = u.copy()
        else:
            bp_t.append(t_ev)
            bp_x.append(x.copy())
            bp_u.append(u.copy())

        if centralized:
            lo, hi = plan.lower[0], plan.upper[0]
            if math.isfinite(lo):
                nxt = _strict_draw(t_ev, lo, hi, system_rng)
                for i in trig:
                    heapq.heappush(heap, (nxt, i))
        else:
            for i in trig:
                if plan.retriggers(i):
                    nxt = _strict_draw(
                        t_ev, float(plan.lower[i]), float(plan.upper[i]), rngs[i]
                    )
                    heapq.heappush(heap, (nxt, i))

    final_state = x + (t_end - t) * u

    sample_t = _sample_grid(config, [ev.t for ev in events])
    bt = np.array(bp_t)
    bx = np.array(bp_x)
    bu = np.array(bp_u)
    seg = np.searchsorted(bt, sample_t, side="right") - 1
    sample_x = bx[seg] + (sample_t - bt[seg])[:, None] * bu[seg]
    sample_d = sample_x.max(axis=1) - sample_x.min(axis=1)

    conservation = None
    if comm and has_spanning_tree(g):
        xi = left_null_vector(g)
        conservation = sample_x @ xi

    return SimTrace(
        config=config,
        events=tuple(events),
        trigger_times=tuple(np.array(ts) for ts in trigger_times),
        sample_t=sample_t,
        sample_x=sample_x,
        sample_d=sample_d,
        conservation=conservation,
        final_state=final_state,
    )


def _sample_grid(config: SimConfig, event_times: list[float]) -> np.ndarray:
    if config.sample_period is not None:
        grid = np.arange(0.0, config.t_end * (1 + 1e-12), config.sample_period)
        grid = np.append(grid, config.t_end)
    else:
        grid = np.linspace(0.0, config.t_end, config.sample_count)
    return np.union1d(grid, np.asarray(event_times))


def tail_spread(trace: SimTrace, window_fraction: float = 0.2) -> float:
    """Mean disagreement d(x(t)) over the final fraction of the horizon."""
    if not (0.0 < window_fraction <= 1.0):
        raise ValidationError(
            f"window_fraction must lie in (0, 1], got {window_fraction}"
        )
    cutoff = (1.0 - window_fraction) * trace.config.t_end
    sel = trace.sample_t >= cutoff
    if not sel.any():
        raise ValidationError("no samples fall inside the requested tail window")
    return float(trace.sample_d[sel].mean())


def conservation_residual(trace: SimTrace, xi) -> float:
    """max over samples of |xi . x(t) - xi . x(0)|.

    Only quantized-communication runs carry this guarantee; sensing
    traces are rejected.
    """
    if trace.config.mode != InputMode.QUANTIZED_COMM:
        raise ModeMismatch(
            "conservation holds for quantized-communication runs only"
        )
    xi = np.asarray(xi, dtype=float)
    ref = float(xi @ trace.config.x0)
    return float(np.abs(trace.sample_x @ xi - ref).max())


def min_max_gap(trace: SimTrace) -> tuple[float, float]:
    """Smallest and largest realized inter-trigger interval across agents."""
    gaps = [np.diff(ts) for ts in trace.trigger_times if len(ts) > 1]
    if not gaps:
        return (math.nan, math.nan)
    allg = np.concatenate(gaps)
    return float(allg.min()), float(allg.max())


def verify_trace(trace: SimTrace) -> None:
    """Check the structural trace invariants; raise InvariantViolation on failure.

    Verifies strictly increasing event times, strict interval compliance
    of every realized inter-trigger gap, the no-accumulation event-count
    bound n*ceil(T/t_min) + n, and d-sample consistency.
    """
    times = trace.event_times
    if times.size and np.any(np.diff(times) <= 0):
        raise InvariantViolation("event times are not strictly increasing")

    plan = trace.config.plan
    for i, ts in enumerate(trace.trigger_times):
        if len(ts) > 1:
            gaps = np.diff(ts)
            lo, hi = plan.lower[i], plan.upper[i]
            if np.any(gaps <= lo) or np.any(gaps >= hi):
                raise InvariantViolation(
                    f"agent {i} has a gap outside its open interval ({lo}, {hi})"
                )

    n = trace.config.graph.n
    finite = np.isfinite(plan.lower)
    if finite.any():
        t_min = float(plan.lower[finite].min())
        bound = n * math.ceil(trace.config.t_end / t_min - 1e-9) + n
    else:
        bound = n
    if len(trace.events) > bound:
        raise InvariantViolation(
            f"{len(trace.events)} events exceed the bound {bound}"
        )

    d = trace.sample_x.max(axis=1) - trace.sample_x.min(axis=1)
    if not np.array_equal(d, trace.sample_d):
        raise InvariantViolation("stored d samples disagree with sampled states")


def verify_interleaving(trace: SimTrace) -> tuple[int, int]:
    """Check the distributed event-interleaving bounds on a realized trace.

    Returns the (per_interval, full_cycle) bounds that were verified: no
    agent's inter-trigger interval contains more than `per_interval`
    system events, and within every complete window of `full_cycle`
    consecutive events each re-triggering agent triggers at least once.
    """
    tau1, tau2 = plan_interleaving_bounds(trace.config.plan)
    times = trace.event_times
    for i, ts in enumerate(trace.trigger_times):
        for a, b in zip(ts[:-1], ts[1:]):
            count = int(np.sum((times > a) & (times <= b)))
            if count > tau1:
                raise InvariantViolation(
                    f"agent {i} saw {count} events in one interval (bound {tau1})"
                )
    plan = trace.config.plan
    retrig = [i for i in range(trace.config.graph.n) if plan.retriggers(i)]
    k_events = len(trace.events)
    for start in range(k_events - tau2):
        window = trace.events[start + 1 : start + 1 + tau2]
        seen = set()
        for ev in window:
            seen.update(ev.agents)
        missing = [i for i in retrig if i not in seen]
        if missing:
            raise InvariantViolation(
                f"agents {missing} silent through events "
                f"{start + 1}..{start + tau2} (bound {tau2})"
            )
    return tau1, tau2


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trace_csv(trace: SimTrace, path) -> None:
    """Samples (grid plus events) as t,event_agents,x_1..x_n,d rows.

    `event_agents` is a ';'-separated list of 1-based agent ids, empty
    for pure grid samples.
    """
    n = trace.config.graph.n
    by_time = {ev.t: ev.agents for ev in trace.events}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "event_agents"] + [f"x_{i + 1}" for i in range(n)] + ["d"])
        for idx, t in enumerate(trace.sample_t):
            agents = by_time.get(float(t), ())
            writer.writerow(
                [_fmt(t), ";".join(str(a + 1) for a in agents)]
                + [_fmt(v) for v in trace.sample_x[idx]]
                + [_fmt(trace.sample_d[idx])]
            )


def write_triggers_csv(trace: SimTrace, path) -> None:
    """Per-agent trigger times as agent,k,t rows (both ids 1-based)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "k", "t"])
        for i, ts in enumerate(trace.trigger_times):
            for k, t in enumerate(ts):
                writer.writerow([i + 1, k + 1, _fmt(t)])

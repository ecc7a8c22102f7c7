"""Self-triggered consensus rules: trigger intervals and control inputs.

Four rule combinations exist, the cross product of the trigger mode
(centralized: all agents share one trigger sequence; distributed: each
agent draws its own) and the input mode (quantized communication: inputs
built from the latest quantized broadcast states; quantized sensing:
inputs built from quantized relative positions measured at the agent's
own triggers).

An agent with in-degree zero has no information to react to; it keeps
its first trigger (so its constant state is broadcast once) and never
re-triggers, marked by infinite interval bounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Digraph
from .quantize import UniformQuantizer


class TriggerMode(str, enum.Enum):
    CENTRALIZED = "centralized"
    DISTRIBUTED = "distributed"


class InputMode(str, enum.Enum):
    QUANTIZED_COMM = "comm"
    QUANTIZED_SENSING = "sensing"


NEVER = math.inf


def _check_margin(value: float, name: str) -> None:
    if not (0.0 < value < 0.5):
        raise ValidationError(f"{name} must lie in (0, 1/2), got {value}")


def centralized_bounds(g: Digraph, delta_prime: float) -> tuple[float, float]:
    """Shared inter-trigger interval (delta'/L_max, (1-delta')/L_max).

    A single isolated agent (n=1) gets the never-triggering marker; a
    larger graph with no edges at all is rejected.
    """
    _check_margin(delta_prime, "delta_prime")
    if g.l_max <= 0.0:
        if g.n > 1:
            raise ValidationError(
                "graph has no edges (max in-degree 0); centralized rule undefined"
            )
        return (NEVER, NEVER)
    return (delta_prime / g.l_max, (1.0 - delta_prime) / g.l_max)


def distributed_bounds(g: Digraph, deltas) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent interval bounds (delta_i/l_ii, (1-delta_i)/l_ii).

    Agents with zero in-degree receive infinite bounds (never re-trigger).
    """
    d = np.broadcast_to(np.asarray(deltas, dtype=float), (g.n,)).copy()
    for i, di in enumerate(d):
        _check_margin(float(di), f"deltas[{i}]")
    degree = g.in_degree
    lower = np.where(degree > 0, d / np.where(degree > 0, degree, 1.0), NEVER)
    upper = np.where(degree > 0, (1.0 - d) / np.where(degree > 0, degree, 1.0), NEVER)
    return lower, upper


@dataclass(frozen=True)
class TriggerPlan:
    """Per-agent trigger interval bounds plus first-trigger times.

    `lower[i] = upper[i] = inf` marks an agent that never re-triggers
    after its first trigger.
    """

    mode: TriggerMode
    lower: np.ndarray
    upper: np.ndarray
    first: np.ndarray
    deltas: np.ndarray

    def __post_init__(self) -> None:
        n = self.lower.shape[0]
        for arr in (self.lower, self.upper, self.first, self.deltas):
            if arr.shape != (n,):
                raise ValidationError("trigger plan arrays must share one length")
            arr.setflags(write=False)
        finite = np.isfinite(self.lower)
        if not np.array_equal(finite, np.isfinite(self.upper)):
            raise ValidationError("lower/upper never-trigger markers disagree")
        if np.any(self.lower[finite] <= 0) or np.any(
            self.upper[finite] <= self.lower[finite]
        ):
            raise ValidationError("need 0 < lower < upper for every triggering agent")
        if np.any(~np.isfinite(self.first)) or np.any(self.first < 0):
            raise ValidationError("first trigger times must be finite and >= 0")

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def retriggers(self, i: int) -> bool:
        return bool(np.isfinite(self.lower[i]))


def centralized_plan(g: Digraph, delta_prime: float, first: float = 0.0) -> TriggerPlan:
    lo, hi = centralized_bounds(g, delta_prime)
    n = g.n
    return TriggerPlan(
        mode=TriggerMode.CENTRALIZED,
        lower=np.full(n, lo),
        upper=np.full(n, hi),
        first=np.full(n, float(first)),
        deltas=np.full(n, float(delta_prime)),
    )


def distributed_plan(g: Digraph, deltas, first=0.0) -> TriggerPlan:
    lo, hi = distributed_bounds(g, deltas)
    d = np.broadcast_to(np.asarray(deltas, dtype=float), (g.n,)).copy()
    f = np.broadcast_to(np.asarray(first, dtype=float), (g.n,)).copy()
    return TriggerPlan(
        mode=TriggerMode.DISTRIBUTED, lower=lo, upper=hi, first=f, deltas=d
    )


def draw_next_trigger(
    prev: float, bounds: tuple[float, float], rng: np.random.Generator
) -> float:
    """prev plus a uniform draw from the open interval (lower, upper).

    Endpoint hits (possible because uniform sampling is half-open) are
    rejected and redrawn, so realized gaps are strictly interior.
    """
    lo, hi = bounds
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError(f"degenerate trigger interval ({lo}, {hi})")
    while True:
        gap = rng.uniform(lo, hi)
        if lo < gap < hi:
            return prev + gap


def input_qcomm(g: Digraph, i: int, broadcasts, own_broadcast: float) -> float:
    """Quantized-communication input for agent i.

    `broadcasts[j]` must hold in-neighbor j's latest quantized state and
    `own_broadcast` agent i's own; a missing (NaN/None) neighbor value is
    an error. Evaluates sum_j a_ij * (broadcasts[j] - own_broadcast),
    the i-th entry of -L q(y).
    """
    total = 0.0
    row = g.adjacency[i]
    for j in np.nonzero(row > 0.0)[0]:
        val = broadcasts[j]
        if val is None or not math.isfinite(val):
            raise ValidationError(
                f"agent {i} is missing the broadcast of in-neighbor {j}"
            )
        total += row[j] * (float(val) - own_broadcast)
    return total


def input_qsens(
    g: Digraph, i: int, x_at_trigger, quantizer: UniformQuantizer
) -> float:
    """Quantized-sensing input: sum_j a_ij * q(x_j - x_i) at agent i's trigger."""
    x = np.asarray(x_at_trigger, dtype=float)
    if x.shape != (g.n,) or not np.all(np.isfinite(x)):
        raise ValidationError("need a finite state vector sampled at the trigger")
    total = 0.0
    row = g.adjacency[i]
    for j in np.nonzero(row > 0.0)[0]:
        total += row[j] * quantizer.quantize(x[j] - x[i])
    return total


def interleaving_bounds(t_min: float, t_max: float, n: int) -> tuple[int, int]:
    """Worst-case event interleaving counts for the distributed rule.

    Returns (per_interval, full_cycle): no agent sees more than
    `per_interval` system events within one of its own inter-trigger
    intervals, and every agent triggers within any `full_cycle`
    consecutive system events.
    """
    if not (0 < t_min <= t_max) or not math.isfinite(t_max):
        raise ValidationError(f"need 0 < t_min <= t_max, got ({t_min}, {t_max})")
    if n < 1:
        raise ValidationError(f"agent count must be >= 1, got {n}")
    # the 1e-9 backoff keeps binary-float noise from inflating the ceiling
    ratio = math.ceil(t_max / t_min - 1e-9)
    return (ratio + 1) * (n - 1), (ratio + 1) * n


def plan_interleaving_bounds(plan: TriggerPlan) -> tuple[int, int]:
    """Interleaving bounds computed from a plan's finite interval bounds."""
    finite = np.isfinite(plan.lower)
    if not finite.any():
        raise ValidationError("no agent in the plan ever re-triggers")
    return interleaving_bounds(
        float(plan.lower[finite].min()), float(plan.upper[finite].max()), plan.n
    )


def spread_bound_constant(n: int, delta_prime: float, scrambling_coeff: float) -> float:
    """Asymptotic-spread constant ((n-1)/s + 1) * 4 * (1 - delta') for the
    centralized communication rule; the bound on the spread is this value
    times the quantizer error.

    `scrambling_coeff` is the (empirical) scrambling level of windowed
    step-matrix products and must satisfy 0 < s < delta' < 1/2.
    """
    _check_margin(delta_prime, "delta_prime")
    if not (0.0 < scrambling_coeff < delta_prime):
        raise ValidationError(
            f"need 0 < scrambling_coeff < delta_prime, got "
            f"({scrambling_coeff}, {delta_prime})"
        )
    if n < 1:
        raise ValidationError(f"agent count must be >= 1, got {n}")
    return ((n - 1) / scrambling_coeff + 1.0) * 4.0 * (1.0 - delta_prime)

"""Numerical toolkit for stochastic matrices and disagreement contraction.

Covers the ergodicity coefficient, Hajnal diameter, scrambling / SIA
detection, sign-pattern comparison, the spread (max - min) disagreement
metric, left null vectors of Laplacians, products of stochastic matrices,
and the lifted-step reconstruction that replays one system event of a
distributed quantized-communication run as a stacked linear update.

Matrix products follow the left-product convention: the product of the
sequence [A_1, ..., A_k] is A_k @ ... @ A_1.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantViolation, ValidationError
from .graph import Digraph, has_spanning_tree, threshold_matrix

# Entries smaller than this count as zero in sign-pattern comparisons.
SIGN_PATTERN_TOL = 1e-12
STOCHASTIC_TOL = 1e-9


def _square(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {m.shape}")
    return m


def _require_stochastic(m: np.ndarray, tol: float = STOCHASTIC_TOL) -> None:
    if np.any(m < -tol):
        raise ValidationError("matrix has negative entries; not row-stochastic")
    err = np.abs(m.sum(axis=1) - 1.0).max()
    if err > tol:
        raise ValidationError(f"matrix rows must sum to 1, worst error {err:.3e}")


def ergodicity_coefficient(matrix) -> float:
    """min over row pairs (i, j) of sum_k min(m_ik, m_jk)."""
    m = _square(matrix)
    best = np.inf
    for i in range(m.shape[0]):
        pair_sums = np.minimum(m[i], m[i:]).sum(axis=1)
        best = min(best, float(pair_sums.min()))
    return best


def hajnal_diameter(matrix) -> float:
    """max over row pairs (i, j) of sum_k max(0, m_ik - m_jk)."""
    m = _square(matrix)
    worst = 0.0
    for i in range(m.shape[0]):
        diffs = np.maximum(m[i] - m, 0.0).sum(axis=1)
        worst = max(worst, float(diffs.max()))
    return worst


def is_scrambling(matrix, threshold: float) -> bool:
    """True iff every row pair of the thresholded matrix shares a positive column.

    The matrix must be row-stochastic; the decision is taken on the
    thresholded copy, so this tests scrambling "at level threshold".
    """
    m = _square(matrix)
    _require_stochastic(m)
    if not threshold > 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    support = m >= threshold
    n = m.shape[0]
    for i in range(n):
        if not (support[i] & support[i + 1:]).any(axis=1).all():
            return False
    return True


def is_sia(matrix, tol: float = 1e-9, max_power: int | None = None) -> bool:
    """Numerically decide whether powers of a stochastic matrix become rank one.

    Declared true once the Hajnal diameter of M^k drops below `tol`;
    declared false when the diameter stalls (non-decreasing for 50
    consecutive powers) or `max_power` (default 10*n^2) is exhausted.
    """
    m = _square(matrix)
    _require_stochastic(m)
    if not tol > 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    n = m.shape[0]
    if max_power is None:
        max_power = 10 * n * n
    if max_power < 1:
        raise ValidationError(f"max_power must be >= 1, got {max_power}")

    power = m
    prev = np.inf
    stalled = 0
    for _ in range(max_power):
        diam = hajnal_diameter(power)
        if diam < tol:
            return True
        stalled = stalled + 1 if diam >= prev - 1e-15 else 0
        if stalled >= 50:
            return False
        prev = diam
        power = power @ m
    return False


def same_sign_pattern(a, b) -> bool:
    """True iff two nonnegative matrices are zero / positive in the same places."""
    ma, mb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if ma.shape != mb.shape:
        raise ValidationError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    if np.any(ma < -SIGN_PATTERN_TOL) or np.any(mb < -SIGN_PATTERN_TOL):
        raise ValidationError("sign-pattern comparison expects nonnegative matrices")
    return bool(np.array_equal(ma >= SIGN_PATTERN_TOL, mb >= SIGN_PATTERN_TOL))


def spread(x) -> float:
    """max_i x_i - min_i x_i, the disagreement metric."""
    v = np.asarray(x, dtype=float).ravel()
    if v.size == 0:
        raise ValidationError("spread of an empty vector is undefined")
    return float(v.max() - v.min())


def left_null_vector(g: Digraph, residual_tol: float = 1e-10) -> np.ndarray:
    """Nonnegative xi with xi @ L = 0 and sum(xi) = 1.

    Requires the graph to contain a spanning tree, which makes the left
    null space of the Laplacian one-dimensional. Computed via SVD; the
    returned vector satisfies ``max|xi @ L| <= residual_tol``.
    """
    if g.n == 1:
        return np.ones(1)
    if not has_spanning_tree(g):
        raise ValidationError("graph has no spanning tree; left null vector not unique")

    _, sing, vh = np.linalg.svd(g.laplacian.T)
    scale = max(sing[0], 1.0)
    if sing[-2] <= 1e-12 * scale * g.n:
        raise ValidationError("laplacian null space is numerically degenerate")
    xi = vh[-1]
    total = xi.sum()
    if abs(total) < 1e-12:
        raise ValidationError("null vector has vanishing sum; cannot normalize")
    xi = xi / total
    if xi.min() < -residual_tol:
        raise ValidationError(
            f"null vector has a negative component {xi.min():.3e}; degenerate graph"
        )
    xi = np.maximum(xi, 0.0)
    xi /= xi.sum()
    residual = float(np.abs(xi @ g.laplacian).max())
    if residual > residual_tol:
        raise InvariantViolation(
            f"left null vector residual {residual:.3e} exceeds {residual_tol:.1e}"
        )
    return xi


def left_product(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Product of [A_1, ..., A_k] in the order A_k @ ... @ A_1."""
    if len(matrices) == 0:
        raise ValidationError("cannot form the product of an empty sequence")
    out = np.asarray(matrices[0], dtype=float)
    for m in matrices[1:]:
        out = np.asarray(m, dtype=float) @ out
    return out


def window_scrambling_coefficient(matrices: Sequence[np.ndarray]) -> float:
    """Ergodicity coefficient of the left product of a stochastic sequence."""
    if len(matrices) == 0:
        raise ValidationError("window must contain at least one matrix")
    shape = np.asarray(matrices[0]).shape
    for m in matrices:
        sq = _square(m)
        if sq.shape != shape:
            raise ValidationError("all matrices in the window must share a size")
        _require_stochastic(sq)
    return ergodicity_coefficient(left_product(matrices))


def min_window_scrambling(
    matrices: Sequence[np.ndarray], window: int, floor: float = 1e-6
) -> float:
    """Minimum window scrambling coefficient over all length-`window` slices.

    Used as an empirical stand-in for the (never constructed) scrambling
    level of realized step-matrix products; floored away from zero so it
    can safely divide a bound.
    """
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if len(matrices) < window:
        raise ValidationError(
            f"need at least {window} matrices, got {len(matrices)}"
        )
    worst = min(
        window_scrambling_coefficient(matrices[i : i + window])
        for i in range(len(matrices) - window + 1)
    )
    return max(worst, floor)


@dataclass(frozen=True)
class LiftedStep:
    """One system event of a distributed run, rewritten as a stacked update.

    The stacked state holds the `history + 1` most recent per-agent
    sampled states; `transition` is row-stochastic and the paired
    `noise_gain` matrix has zero row sums, so the update
    ``z_after = transition @ z_before + noise_gain @ (q(z_before) - z_before)``
    separates the averaging part from the quantization-error part.
    """

    k: int
    transition: np.ndarray
    noise_gain: np.ndarray
    z_before: np.ndarray
    z_after: np.ndarray
    a_blocks: tuple[np.ndarray, ...]
    b_blocks: tuple[np.ndarray, ...]


def lifted_transition(trace, k: int, history: int, deltas) -> LiftedStep:
    """Reconstruct the stacked update for the transition event k -> k+1.

    `trace` must come from a distributed quantized-communication run,
    `history` must be at least the worst-case number of system events
    between consecutive triggers of any one agent, and `deltas` are the
    per-agent trigger margins (their minimum lower-bounds the diagonal
    of the leading block).

    Raises ValidationError when the trace is too short around k, and
    InvariantViolation when the reconstruction fails to reproduce the
    recorded states (which signals an engine bug).
    """
    events = trace.events
    n = trace.config.graph.n
    lap = trace.config.graph.laplacian
    quantizer = trace.config.quantizer
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), (n,))
    delta_min = float(deltas.min())

    if history < 1:
        raise ValidationError(f"history must be >= 1, got {history}")
    if k - history < 0 or k + 1 >= len(events):
        raise ValidationError(
            f"event window [{k - history}, {k + 1}] not contained in trace "
            f"of {len(events)} events"
        )

    # Per-agent sorted lists of event indices at which the agent triggered.
    trig_idx: list[list[int]] = [[] for _ in range(n)]
    for m, ev in enumerate(events):
        for i in ev.agents:
            trig_idx[i].append(m)

    def sampled_state(i: int, m: int) -> float:
        # Agent i's state at its latest trigger <= event m; before any
        # trigger the state has never moved, so the current value is exact.
        p = bisect_right(trig_idx[i], m) - 1
        if p < 0:
            return float(events[m].x[i])
        return float(events[events_idx(i, p)].x[i])

    def events_idx(i: int, p: int) -> int:
        return trig_idx[i][p]

    def y_vec(m: int) -> np.ndarray:
        return np.array([sampled_state(i, m) for i in range(n)])

    times = [ev.t for ev in events]
    gaps = [times[m + 1] - times[m] for m in range(len(times) - 1)]

    a_blocks = [np.zeros((n, n)) for _ in range(history + 1)]
    b_blocks = [np.zeros((n, n)) for _ in range(history + 1)]

    triggering = set(events[k + 1].agents)
    for i in range(n):
        if i not in triggering:
            a_blocks[0][i, i] = 1.0
            continue
        pos = bisect_right(trig_idx[i], k) - 1
        if pos < 0:
            raise ValidationError(
                f"agent {i} triggers at event {k + 1} with no prior trigger; "
                "the reconstruction window starts too early"
            )
        prev_event = trig_idx[i][pos]
        lag = k - prev_event
        if lag > history:
            raise ValidationError(
                f"agent {i} was silent for {lag + 1} events, exceeding history={history}"
            )
        own_gap = times[k + 1] - times[prev_event]
        a_blocks[0][i, i] = 1.0 - own_gap * lap[i, i]
        b_blocks[0][i, i] = -own_gap * lap[i, i]
        for m in range(lag + 1):
            coeff = -gaps[k - m] * lap[i]
            coeff[i] = 0.0
            a_blocks[m][i] += coeff
            b_blocks[m][i] += coeff

    dim = n * (history + 1)
    transition = np.zeros((dim, dim))
    noise_gain = np.zeros((dim, dim))
    for m in range(history + 1):
        transition[:n, m * n : (m + 1) * n] = a_blocks[m]
        noise_gain[:n, m * n : (m + 1) * n] = b_blocks[m]
    for r in range(1, history + 1):
        transition[r * n : (r + 1) * n, (r - 1) * n : r * n] = np.eye(n)

    z_before = np.concatenate([y_vec(k - m) for m in range(history + 1)])
    z_after = np.concatenate([y_vec(k + 1 - m) for m in range(history + 1)])

    step = LiftedStep(
        k=k,
        transition=transition,
        noise_gain=noise_gain,
        z_before=z_before,
        z_after=z_after,
        a_blocks=tuple(a_blocks),
        b_blocks=tuple(b_blocks),
    )
    _validate_lifted_step(step, quantizer, delta_min, n)
    return step


def _validate_lifted_step(step: LiftedStep, quantizer, delta_min: float, n: int) -> None:
    row_err = np.abs(step.transition.sum(axis=1) - 1.0).max()
    if row_err > 1e-9:
        raise InvariantViolation(
            f"lifted transition is not row-stochastic (error {row_err:.3e})"
        )
    for m, block in enumerate(step.a_blocks):
        if block.min() < -1e-12:
            raise InvariantViolation(f"a-block {m} has a negative entry {block.min():.3e}")
    lead_diag = np.diag(step.a_blocks[0])
    if lead_diag.min() < delta_min - 1e-12:
        raise InvariantViolation(
            f"leading-block diagonal {lead_diag.min():.6f} fell below "
            f"the trigger margin {delta_min}"
        )
    b_rows = np.hstack(step.b_blocks).sum(axis=1)
    if np.abs(b_rows).max() > 1e-9:
        raise InvariantViolation("noise-gain rows do not sum to zero")

    q_err = quantizer.quantize_vector(step.z_before) - step.z_before
    predicted = step.transition @ step.z_before + step.noise_gain @ q_err
    mismatch = float(np.abs(predicted - step.z_after).max())
    if mismatch > 1e-9:
        raise InvariantViolation(
            f"replay mismatch at event {step.k}: stacked update misses the "
            f"recorded state by {mismatch:.3e}"
        )

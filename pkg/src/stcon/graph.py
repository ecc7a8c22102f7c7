"""Weighted digraphs, Laplacian validation, and spanning-tree decisions.

Edge orientation convention, used consistently across the package: the
entry ``adjacency[i, j] > 0`` means agent j sends information to agent i.
A (directed) spanning tree therefore exists when some root agent can
reach every other agent *along the information flow*, i.e. by repeatedly
hopping from a sender to its receivers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Relative tolerance for "rows of L sum to zero" (scaled by n).
ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Digraph:
    """Immutable weighted digraph stored as an adjacency/Laplacian pair.

    ``laplacian = diag(in_degree) - adjacency`` with zero row sums,
    nonpositive off-diagonal entries and zero self-weights.
    """

    n: int
    adjacency: np.ndarray
    laplacian: np.ndarray
    in_degree: np.ndarray
    l_max: float

    def __post_init__(self) -> None:
        for arr in (self.adjacency, self.laplacian, self.in_degree):
            arr.setflags(write=False)


def from_laplacian(matrix) -> Digraph:
    """Build a validated Digraph from a Laplacian matrix.

    Raises ValidationError if the matrix is not square, a row sum exceeds
    the ``1e-12 * n`` tolerance, or an off-diagonal entry is positive.
    """
    lap = np.asarray(matrix, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ValidationError(f"laplacian must be square, got shape {lap.shape}")
    n = lap.shape[0]
    if not np.all(np.isfinite(lap)):
        raise ValidationError("laplacian contains non-finite entries")

    tol = ROW_SUM_TOL * max(n, 1)
    row_sums = lap.sum(axis=1)
    bad = np.abs(row_sums) > tol
    if np.any(bad):
        i = int(np.argmax(np.abs(row_sums)))
        raise ValidationError(
            f"laplacian row {i} sums to {row_sums[i]:.3e}, beyond tolerance {tol:.1e}"
        )

    off = lap - np.diag(np.diag(lap))
    if np.any(off > tol):
        i, j = np.unravel_index(int(np.argmax(off)), off.shape)
        raise ValidationError(
            f"positive off-diagonal entry l[{i},{j}] = {off[i, j]:.3e}"
        )
    diag = np.diag(lap).copy()
    if np.any(diag < -tol):
        raise ValidationError("negative diagonal entry in laplacian")

    adjacency = np.maximum(-off, 0.0)
    return Digraph(
        n=n,
        adjacency=adjacency,
        laplacian=lap.copy(),
        in_degree=diag,
        l_max=float(diag.max()),
    )


def load_laplacian(path) -> Digraph:
    """Read a Laplacian from a text file (one row per line, whitespace-separated)."""
    try:
        matrix = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"could not parse laplacian file {path!r}: {exc}") from exc
    return from_laplacian(matrix)


def threshold_matrix(matrix, threshold: float) -> np.ndarray:
    """Replace entries >= threshold by the threshold itself and the rest by 0.

    The input must be nonnegative and the threshold positive.
    """
    if not threshold > 0:
        raise ValidationError(f"threshold must be positive, got {threshold}")
    a = np.asarray(matrix, dtype=float)
    return np.where(a >= threshold, threshold, 0.0)


def _receivers(adjacency: np.ndarray) -> list[np.ndarray]:
    # receivers[u] = agents that hear u directly (info flows u -> i when a[i,u] > 0)
    return [np.nonzero(adjacency[:, u] > 0.0)[0] for u in range(adjacency.shape[0])]


def _reaches_all(receivers: list[np.ndarray], root: int, n: int) -> bool:
    seen = bytearray(n)
    seen[root] = 1
    stack = [root]
    count = 1
    while stack:
        u = stack.pop()
        for v in receivers[u]:
            if not seen[v]:
                seen[v] = 1
                count += 1
                stack.append(int(v))
    return count == n


def _adjacency_has_spanning_tree(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    if n == 1:
        return True
    recv = _receivers(adjacency)
    return any(_reaches_all(recv, root, n) for root in range(n))


def has_spanning_tree(g: Digraph) -> bool:
    """True iff some root agent reaches every other agent along information flow."""
    return _adjacency_has_spanning_tree(g.adjacency)


def has_delta_spanning_tree(adjacency, threshold: float) -> bool:
    """True iff the thresholded adjacency still contains a spanning tree."""
    return _adjacency_has_spanning_tree(threshold_matrix(adjacency, threshold))

import numpy as np
import pytest

from stcon import experiments, from_laplacian


@pytest.fixture(scope="session")
def demo_graph():
    return from_laplacian(experiments.DEMO_LAPLACIAN)


@pytest.fixture(scope="session")
def demo_xi():
    # independent least-squares oracle for the conserved weights: solve
    # [L^T; 1^T] xi = [0; 1]; regression value is (0,0,0,0,35,54,42)/131
    lap = experiments.DEMO_LAPLACIAN
    n = lap.shape[0]
    system = np.vstack([lap.T, np.ones(n)])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    xi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    expected = np.array([0, 0, 0, 0, 35, 54, 42]) / 131.0
    assert np.allclose(xi, expected, atol=1e-12)
    return xi


def reachability_oracle(adjacency):
    """Brute-force spanning-tree decision via boolean matrix powers.

    Info flows j -> i when adjacency[i, j] > 0, so reachability runs on
    the transpose. Independent of the BFS used by the implementation.
    """
    adjacency = np.asarray(adjacency, dtype=float)
    n = adjacency.shape[0]
    reach = np.eye(n, dtype=bool) | (adjacency.T > 0)
    for _ in range(n):
        reach = reach @ reach
    return bool(reach.sum(axis=1).max() == n)

import itertools

import numpy as np
import pytest

from stcon import (
    ValidationError,
    experiments,
    from_laplacian,
    has_delta_spanning_tree,
    has_spanning_tree,
    load_laplacian,
    threshold_matrix,
)

from conftest import reachability_oracle


class TestFromLaplacian:
    def test_demo_network(self, demo_graph):
        assert demo_graph.n == 7
        assert demo_graph.l_max == 14.0
        assert np.array_equal(demo_graph.in_degree, np.diag(experiments.DEMO_LAPLACIAN))

    def test_single_agent(self):
        g = from_laplacian([[0.0]])
        assert g.n == 1
        assert g.l_max == 0.0

    def test_symmetric_pair(self):
        g = from_laplacian([[1, -1], [-1, 1]])
        assert g.adjacency[0, 1] == 1.0
        assert g.adjacency[1, 0] == 1.0
        assert g.l_max == 1.0

    def test_adjacency_diagonal_is_zero(self, demo_graph):
        assert np.all(np.diag(demo_graph.adjacency) == 0.0)

    def test_round_trip_exact(self, demo_graph):
        again = from_laplacian(demo_graph.laplacian)
        assert np.array_equal(again.laplacian, demo_graph.laplacian)
        assert np.array_equal(again.adjacency, demo_graph.adjacency)
        assert again.l_max == demo_graph.l_max

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            from_laplacian([[1, -1, 0], [-1, 1, 0]])

    def test_rejects_bad_row_sum(self):
        with pytest.raises(ValidationError, match="sums to"):
            from_laplacian([[1, -0.5], [-1, 1]])

    def test_rejects_positive_off_diagonal(self):
        with pytest.raises(ValidationError, match="off-diagonal"):
            from_laplacian([[-1, 1], [1, -1]])

    def test_immutable(self, demo_graph):
        with pytest.raises(ValueError):
            demo_graph.adjacency[0, 0] = 5.0


class TestThresholdMatrix:
    def test_keeps_entries_at_or_above(self):
        a = np.array([[0, 2], [3, 0]], dtype=float)
        assert np.array_equal(threshold_matrix(a, 2.5), [[0, 0], [2.5, 0]])
        assert np.array_equal(threshold_matrix(a, 2.0), [[0, 2], [2, 0]])

    def test_all_below_gives_zero(self):
        a = np.array([[0, 2], [3, 0]], dtype=float)
        assert np.array_equal(threshold_matrix(a, 3.5), np.zeros((2, 2)))

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a = rng.uniform(0, 4, (4, 4))
            delta = float(rng.uniform(0.1, 4.0))
            once = threshold_matrix(a, delta)
            assert np.array_equal(threshold_matrix(once, delta), once)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValidationError, match="positive"):
            threshold_matrix(np.zeros((2, 2)), 0.0)


class TestSpanningTree:
    def test_demo_network_has_tree(self, demo_graph):
        assert has_spanning_tree(demo_graph)

    def test_two_isolated_agents(self):
        assert not has_spanning_tree(from_laplacian(np.zeros((2, 2))))

    def test_directed_chain(self):
        # agent 1 sends to 2, 2 sends to 3: adjacency[receiver, sender] > 0
        lap = np.array([[0, 0, 0], [-1, 1, 0], [0, -1, 1]], dtype=float)
        assert has_spanning_tree(from_laplacian(lap))

    def test_threshold_variants_on_demo(self, demo_graph):
        adj = demo_graph.adjacency
        assert has_delta_spanning_tree(adj, 2.0) == reachability_oracle(
            threshold_matrix(adj, 2.0)
        )
        assert has_delta_spanning_tree(adj, 2.0)
        # 8 exceeds every edge weight, so the thresholded graph is empty
        assert has_delta_spanning_tree(adj, 8.0) == reachability_oracle(
            threshold_matrix(adj, 8.0)
        )
        assert not has_delta_spanning_tree(adj, 8.0)

    def test_chain_with_unit_weights(self):
        adj = np.zeros((3, 3))
        adj[1, 0] = adj[2, 1] = 1.0
        assert has_delta_spanning_tree(adj, 0.5)

    def test_agrees_with_oracle_exhaustively(self):
        # every {0,1}-weighted digraph up to 4 agents
        for n in range(1, 5):
            slots = [(i, j) for i in range(n) for j in range(n) if i != j]
            for bits in itertools.product((0.0, 1.0), repeat=len(slots)):
                adj = np.zeros((n, n))
                for (i, j), b in zip(slots, bits):
                    adj[i, j] = b
                lap = np.diag(adj.sum(axis=1)) - adj
                assert has_spanning_tree(from_laplacian(lap)) == reachability_oracle(
                    adj
                ), adj

    def test_agrees_with_oracle_sampled_n5(self):
        rng = np.random.default_rng(11)
        for _ in range(3000):
            adj = (rng.random((5, 5)) < 0.25).astype(float)
            np.fill_diagonal(adj, 0.0)
            lap = np.diag(adj.sum(axis=1)) - adj
            assert has_spanning_tree(from_laplacian(lap)) == reachability_oracle(adj)


class TestLoadLaplacian:
    def test_reads_text_matrix(self, tmp_path, demo_graph):
        path = tmp_path / "lap.txt"
        np.savetxt(path, demo_graph.laplacian)
        g = load_laplacian(path)
        assert g.n == 7
        assert np.allclose(g.laplacian, demo_graph.laplacian)

    def test_single_entry_file(self, tmp_path):
        path = tmp_path / "one.txt"
        path.write_text("0\n")
        assert load_laplacian(path).n == 1

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not a matrix\n")
        with pytest.raises(ValidationError, match="parse"):
            load_laplacian(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError, match="parse"):
            load_laplacian(tmp_path / "nope.txt")

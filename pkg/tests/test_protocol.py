import math

import numpy as np
import pytest

from stcon import (
    UniformQuantizer,
    ValidationError,
    centralized_bounds,
    centralized_plan,
    distributed_bounds,
    distributed_plan,
    draw_next_trigger,
    from_laplacian,
    has_delta_spanning_tree,
    input_qcomm,
    input_qsens,
    interleaving_bounds,
    spread_bound_constant,
)
from stcon.protocol import TriggerMode, plan_interleaving_bounds


class TestCentralizedBounds:
    def test_demo_network(self, demo_graph):
        lo, hi = centralized_bounds(demo_graph, 0.25)
        assert lo == 0.25 / 14.0
        assert hi == 0.75 / 14.0
        assert lo == pytest.approx(0.017857142857, abs=1e-9)
        assert hi == pytest.approx(0.053571428571, abs=1e-9)

    def test_margins_must_sit_inside_open_half(self, demo_graph):
        for bad in (0.6, 0.5, 0.0, -0.1):
            with pytest.raises(ValidationError, match="\\(0, 1/2\\)"):
                centralized_bounds(demo_graph, bad)

    def test_near_half_degenerates(self, demo_graph):
        lo, hi = centralized_bounds(demo_graph, 0.5 - 1e-16)
        # the interval collapses toward a point as the margin approaches 1/2
        assert hi - lo == pytest.approx(0.0, abs=1e-16)
        with pytest.raises(ValidationError, match="degenerate"):
            draw_next_trigger(0.0, (lo, lo), np.random.default_rng(0))

    def test_single_agent_never_retriggers(self):
        lo, hi = centralized_bounds(from_laplacian([[0.0]]), 0.25)
        assert math.isinf(lo) and math.isinf(hi)

    def test_edgeless_multi_agent_graph_rejected(self):
        with pytest.raises(ValidationError, match="no edges"):
            centralized_bounds(from_laplacian(np.zeros((3, 3))), 0.25)


class TestDistributedBounds:
    def test_demo_first_agent(self, demo_graph):
        lo, hi = distributed_bounds(demo_graph, 0.25)
        assert lo[0] == 0.25 / 9.0
        assert hi[0] == 0.75 / 9.0

    def test_zero_degree_agent_marked_never(self):
        lap = np.array([[0, 0], [-1, 1]], dtype=float)
        lo, hi = distributed_bounds(from_laplacian(lap), 0.25)
        assert math.isinf(lo[0]) and math.isinf(hi[0])
        assert lo[1] == 0.25 and hi[1] == 0.75

    def test_uniform_degrees_give_identical_bounds(self):
        lap = np.array([[1, -1, 0], [0, 1, -1], [-1, 0, 1]], dtype=float)
        lo, hi = distributed_bounds(from_laplacian(lap), 0.3)
        assert np.all(lo == lo[0]) and np.all(hi == hi[0])

    def test_per_agent_margins(self, demo_graph):
        deltas = np.linspace(0.1, 0.45, 7)
        lo, hi = distributed_bounds(demo_graph, deltas)
        assert np.allclose(lo, deltas / demo_graph.in_degree)
        assert np.allclose(hi, (1 - deltas) / demo_graph.in_degree)

    def test_margin_out_of_range(self, demo_graph):
        with pytest.raises(ValidationError, match="deltas\\[2\\]"):
            distributed_bounds(demo_graph, [0.25, 0.25, 0.7, 0.25, 0.25, 0.25, 0.25])


class TestDrawNextTrigger:
    def test_deterministic_per_seed(self):
        a = draw_next_trigger(1.0, (0.1, 0.2), np.random.default_rng(42))
        b = draw_next_trigger(1.0, (0.1, 0.2), np.random.default_rng(42))
        assert a == b

    def test_draws_stay_strictly_interior(self):
        rng = np.random.default_rng(1)
        lo, hi = 0.017857142857142856, 0.05357142857142857
        for _ in range(100_000):
            t = draw_next_trigger(0.0, (lo, hi), rng)
            assert lo < t < hi

    def test_empirical_mean(self):
        rng = np.random.default_rng(2)
        lo, hi = 0.2, 0.6
        n = 100_000
        draws = np.array([draw_next_trigger(5.0, (lo, hi), rng) for _ in range(n)])
        sigma = (hi - lo) / math.sqrt(12.0) / math.sqrt(n)
        assert abs(draws.mean() - (5.0 + (lo + hi) / 2.0)) < 3 * sigma


class TestInputs:
    def test_comm_zero_at_agreement(self, demo_graph):
        broadcasts = np.full(7, 2.0)
        for i in range(7):
            assert input_qcomm(demo_graph, i, broadcasts, 2.0) == 0.0

    def test_comm_single_edge(self):
        lap = np.array([[1, -1], [0, 0]], dtype=float)
        g = from_laplacian(lap)
        assert input_qcomm(g, 0, [None, 0.0], 1.0) == -1.0

    def test_comm_vector_form_matches_laplacian(self, demo_graph):
        rng = np.random.default_rng(3)
        q = UniformQuantizer(0.5)
        for _ in range(200):
            x = rng.uniform(-5, 5, 7)
            b = q.quantize_vector(x)
            per_agent = np.array(
                [input_qcomm(demo_graph, i, b, b[i]) for i in range(7)]
            )
            assert np.allclose(per_agent, -(demo_graph.laplacian @ b), atol=1e-12)

    def test_comm_missing_neighbor(self, demo_graph):
        broadcasts = [None] * 7
        with pytest.raises(ValidationError, match="missing the broadcast"):
            input_qcomm(demo_graph, 0, broadcasts, 1.0)

    def test_sensing_zero_at_agreement(self, demo_graph):
        q = UniformQuantizer(0.5)
        x = np.full(7, 3.3)
        for i in range(7):
            assert input_qsens(demo_graph, i, x, q) == 0.0

    def test_sensing_deadband(self):
        lap = np.array([[1, -1], [0, 0]], dtype=float)
        g = from_laplacian(lap)
        q = UniformQuantizer(0.5)
        assert input_qsens(g, 0, [0.0, 0.4], q) == 0.0

    def test_sensing_linearization_error(self, demo_graph):
        # |u_i - sum_j a_ij (x_j - x_i)| <= l_ii * delta by the error bound
        rng = np.random.default_rng(4)
        q = UniformQuantizer(0.5)
        adj = demo_graph.adjacency
        for _ in range(300):
            x = rng.uniform(-10, 10, 7)
            for i in range(7):
                exact = float(adj[i] @ (x - x[i]))
                u = input_qsens(demo_graph, i, x, q)
                assert abs(u - exact) <= demo_graph.in_degree[i] * q.delta + 1e-12

    def test_sensing_rejects_nan_state(self, demo_graph):
        q = UniformQuantizer(0.5)
        x = np.full(7, np.nan)
        with pytest.raises(ValidationError, match="finite"):
            input_qsens(demo_graph, 0, x, q)


class TestInterleavingBounds:
    def test_formula(self):
        assert interleaving_bounds(1.0, 3.0, 7) == (24, 28)

    def test_single_agent(self):
        tau1, tau2 = interleaving_bounds(0.5, 1.0, 1)
        assert tau1 == 0

    def test_float_noise_does_not_inflate_ceiling(self):
        # 2.1/0.7 computes to 3.0000000000000004; the intended ceiling is 3
        assert 2.1 / 0.7 > 3.0
        assert interleaving_bounds(0.7, 2.1, 7) == (24, 28)

    def test_invalid_times(self):
        with pytest.raises(ValidationError, match="t_min"):
            interleaving_bounds(0.0, 1.0, 3)
        with pytest.raises(ValidationError, match="t_min"):
            interleaving_bounds(2.0, 1.0, 3)

    def test_from_plan(self, demo_graph):
        plan = distributed_plan(demo_graph, 0.25)
        assert plan_interleaving_bounds(plan) == (48, 56)


class TestSpreadBoundConstant:
    def test_values(self):
        assert spread_bound_constant(7, 0.25, 0.1) == pytest.approx(183.0)
        assert spread_bound_constant(2, 0.25, 0.2) == pytest.approx(18.0)

    def test_ordering_enforced(self):
        with pytest.raises(ValidationError, match="scrambling_coeff"):
            spread_bound_constant(7, 0.25, 0.3)
        with pytest.raises(ValidationError, match="\\(0, 1/2\\)"):
            spread_bound_constant(7, 0.6, 0.1)


class TestPlans:
    def test_centralized_plan_uniform(self, demo_graph):
        plan = centralized_plan(demo_graph, 0.25)
        assert plan.mode == TriggerMode.CENTRALIZED
        assert np.all(plan.lower == 0.25 / 14.0)
        assert np.all(plan.upper == 0.75 / 14.0)
        assert np.all(plan.first == 0.0)
        assert all(plan.retriggers(i) for i in range(7))

    def test_distributed_plan_marks_sterile_agents(self):
        lap = np.array([[0, 0], [-2, 2]], dtype=float)
        plan = distributed_plan(from_laplacian(lap), 0.25)
        assert not plan.retriggers(0)
        assert plan.retriggers(1)

    def test_step_matrices_stay_stochastic_with_margin(self, demo_graph):
        # I - dt*L for any drawn dt: rows sum to one, entries nonnegative,
        # diagonal at least the margin, thresholded tree preserved
        rng = np.random.default_rng(6)
        lo, hi = centralized_bounds(demo_graph, 0.25)
        lap = demo_graph.laplacian
        min_weight = demo_graph.adjacency[demo_graph.adjacency > 0].min()
        level = 0.25 * min_weight / demo_graph.l_max
        for _ in range(200):
            dt = draw_next_trigger(0.0, (lo, hi), rng)
            a_k = np.eye(7) - dt * lap
            assert np.allclose(a_k.sum(axis=1), 1.0, atol=1e-12)
            assert a_k.min() >= 0.0
            assert np.diag(a_k).min() >= 0.25
            assert has_delta_spanning_tree(a_k, level)

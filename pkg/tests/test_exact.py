import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from otqq import (
    DimensionMismatch,
    InfeasibleDuals,
    NonSquare,
    PointCloud,
    SeededRng,
    cost_matrix,
    ot_dual_potentials,
    ot_quantile_map,
    sample_unit_ball,
    solve_assignment,
)
from otqq.exact import Assignment
from otqq.oracles import brute_force_assignment


def test_cost_matrix_zero_diagonal_for_identical_clouds():
    cloud = PointCloud(np.random.default_rng(0).standard_normal((6, 3)))
    entries = cost_matrix(cloud, cloud).entries
    np.testing.assert_array_equal(np.diag(entries), np.zeros(6))
    assert (entries >= 0).all()


def test_cost_matrix_three_four_five():
    entries = cost_matrix(PointCloud([[0.0, 0.0]]), PointCloud([[3.0, 4.0]])).entries
    assert entries[0, 0] == 12.5


def test_cost_matrix_transpose_symmetry():
    gen = np.random.default_rng(1)
    u = PointCloud(gen.standard_normal((5, 2)))
    x = PointCloud(gen.standard_normal((5, 2)))
    np.testing.assert_allclose(cost_matrix(u, x).entries, cost_matrix(x, u).entries.T)


def test_cost_matrix_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cost_matrix(PointCloud([[0.0, 0.0]]), PointCloud([[1.0, 2.0, 3.0]]))


def test_tied_two_point_instance():
    u = PointCloud([[0.0, 0.0], [0.5, 0.5]])
    x = PointCloud([[0.0, 0.5], [0.5, 0.0]])
    result = solve_assignment(cost_matrix(u, x))
    assert result.total_cost == pytest.approx(0.25)
    assert sorted(result.perm.tolist()) == [0, 1]


def test_identity_cost_picks_identity():
    cloud = PointCloud(np.random.default_rng(2).standard_normal((8, 3)))
    result = solve_assignment(cost_matrix(cloud, cloud))
    assert result.total_cost == 0.0
    np.testing.assert_array_equal(result.perm, np.arange(8))


def test_solver_matches_brute_force():
    gen = SeededRng(3, 900).generator()
    for _ in range(30):
        n = int(gen.integers(1, 8))
        d = int(gen.integers(1, 4))
        cost = cost_matrix(
            PointCloud(gen.standard_normal((n, d))), PointCloud(gen.standard_normal((n, d)))
        )
        result = solve_assignment(cost)
        _, best = brute_force_assignment(cost.entries)
        assert result.total_cost == pytest.approx(best, abs=1e-12)


def test_solver_matches_scipy_on_larger_instances():
    gen = np.random.default_rng(4)
    for n in (50, 120):
        entries = cost_matrix(
            PointCloud(gen.standard_normal((n, 3))), PointCloud(gen.standard_normal((n, 3)))
        ).entries
        result = solve_assignment(entries)
        rows, cols = linear_sum_assignment(entries)
        assert result.total_cost == pytest.approx(entries[rows, cols].sum(), rel=1e-12)
        assert sorted(result.perm.tolist()) == list(range(n))


def test_non_square_rejected():
    with pytest.raises(NonSquare):
        solve_assignment(np.zeros((3, 4)))
    with pytest.raises(NonSquare):
        ot_quantile_map(
            sample_unit_ball(4, 2, SeededRng(0, 3)), sample_unit_ball(5, 2, SeededRng(0, 1))
        )


def test_1d_map_is_sorting():
    gen = SeededRng(5, 901).generator()
    for _ in range(20):
        u = PointCloud(gen.standard_normal((100, 1)))
        x = PointCloud(gen.standard_normal((100, 1)) * 2.0 + 1.0)
        transport = ot_quantile_map(u, x)
        order_u = np.argsort(u.points[:, 0])
        order_x = np.argsort(x.points[:, 0])
        expected = np.empty((100, 1))
        expected[order_u] = x.points[order_x]
        np.testing.assert_array_equal(transport.targets, expected)


def test_1d_scaling_map():
    gen = np.random.default_rng(6)
    u = PointCloud(gen.uniform(-1, 1, size=(50, 1)))
    x = PointCloud(2.0 * u.points)
    transport = ot_quantile_map(u, x)
    ranks = np.argsort(np.argsort(u.points[:, 0]))
    sorted_x = np.sort(x.points[:, 0])
    np.testing.assert_allclose(transport.targets[:, 0], sorted_x[ranks])


def test_map_shift_equivariance():
    gen = np.random.default_rng(7)
    u = sample_unit_ball(60, 3, SeededRng(8, 3))
    x = PointCloud(gen.standard_normal((60, 3)))
    shift = np.array([3.0, -1.0, 0.5])
    base = ot_quantile_map(u, x)
    shifted = ot_quantile_map(u, PointCloud(x.points + shift))
    np.testing.assert_array_equal(shifted.targets, base.targets + shift)


def test_duals_single_pair():
    u = PointCloud([[0.5, 0.5]])
    x = PointCloud([[1.0, 0.0]])
    assignment = solve_assignment(cost_matrix(u, x))
    potentials = ot_dual_potentials(u, x, assignment)
    assert potentials.phi_at_ref[0] == 0.0
    assert assignment.row_prices[0] + assignment.col_prices[0] == pytest.approx(
        assignment.total_cost
    )


def test_duals_identity_case():
    # self-transport: zero duals are optimal (the dual optimum is not unique,
    # so the solver may return another valid pair; its phi must still follow
    # phi_i = 0.5||u_i||^2 - alpha_i up to the min shift)
    gen = np.random.default_rng(9)
    cloud = PointCloud(gen.standard_normal((12, 2)))
    entries = cost_matrix(cloud, cloud).entries
    assignment = solve_assignment(entries)
    assert assignment.total_cost == 0.0
    assert (entries - 0.0 - 0.0).min() >= 0.0  # alpha = beta = 0 is feasible
    potentials = ot_dual_potentials(cloud, cloud, assignment)
    raw = 0.5 * (cloud.points**2).sum(axis=1) - potentials.alpha
    np.testing.assert_allclose(potentials.phi_at_ref, raw - raw.min(), atol=1e-12)
    assert potentials.phi_at_ref.min() == 0.0


def test_duals_exhaustive_feasibility():
    gen = SeededRng(10, 902).generator()
    for _ in range(20):
        u = PointCloud(gen.standard_normal((6, 2)))
        x = PointCloud(gen.standard_normal((6, 2)))
        entries = cost_matrix(u, x).entries
        assignment = solve_assignment(entries)
        potentials = ot_dual_potentials(u, x, assignment)
        slack = entries - potentials.alpha[:, None] - potentials.beta[None, :]
        assert slack.min() >= -1e-9
        tight = slack[np.arange(6), assignment.perm]
        assert np.abs(tight).max() < 1e-9
        assert potentials.phi_at_ref.min() == 0.0


def test_strong_duality():
    gen = np.random.default_rng(11)
    u = sample_unit_ball(80, 3, SeededRng(12, 3))
    x = PointCloud(gen.standard_normal((80, 3)))
    assignment = solve_assignment(cost_matrix(u, x))
    n = 80
    dual_value = assignment.row_prices.sum() / n + assignment.col_prices.sum() / n
    assert dual_value == pytest.approx(assignment.total_cost / n, abs=1e-8)


def test_cyclical_monotonicity_sampled():
    gen = np.random.default_rng(13)
    u = sample_unit_ball(500, 3, SeededRng(14, 3))
    x = PointCloud(gen.standard_normal((500, 3)))
    entries = cost_matrix(u, x).entries
    assignment = solve_assignment(entries)
    sigma = assignment.perm
    pairs = gen.integers(0, 500, size=(1000, 2))
    i, j = pairs[:, 0], pairs[:, 1]
    lhs = entries[i, sigma[i]] + entries[j, sigma[j]]
    rhs = entries[i, sigma[j]] + entries[j, sigma[i]]
    assert (lhs <= rhs + 1e-9).all()


def test_discrete_gradient_relation():
    # assigned target maximizes <u_i, x_j> - psi*_j where psi*_j = 0.5||x_j||^2 - beta_j
    gen = np.random.default_rng(15)
    u = sample_unit_ball(40, 2, SeededRng(16, 3))
    x = PointCloud(gen.standard_normal((40, 2)))
    assignment = solve_assignment(cost_matrix(u, x))
    potentials = ot_dual_potentials(u, x, assignment)
    psi_star = 0.5 * (x.points**2).sum(axis=1) - potentials.beta
    scores = u.points @ x.points.T - psi_star[None, :]
    for i in gen.integers(0, 40, size=10):
        best = scores[i].max()
        assert scores[i, assignment.perm[i]] == pytest.approx(best, abs=1e-9)


def test_infeasible_duals_detected():
    gen = np.random.default_rng(17)
    u = PointCloud(gen.standard_normal((5, 2)))
    x = PointCloud(gen.standard_normal((5, 2)))
    good = solve_assignment(cost_matrix(u, x))
    bad = Assignment(
        perm=good.perm,
        total_cost=good.total_cost,
        row_prices=good.row_prices + 1.0,
        col_prices=good.col_prices,
    )
    with pytest.raises(InfeasibleDuals):
        ot_dual_potentials(u, x, bad)


def test_full_sq_cost_convention():
    u = PointCloud([[0.0]])
    x = PointCloud([[2.0]])
    result = solve_assignment(cost_matrix(u, x))
    assert result.total_cost == 2.0  # half convention
    assert result.full_sq_cost == 4.0

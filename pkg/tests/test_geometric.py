import numpy as np
import pytest

from otqq import DimensionMismatch, GaussianSpec, PointCloud, SeededRng, generate
from otqq.geometric import geometric_qq, geometric_quantile, geometric_rank
from otqq.oracles import grid_quantile_oracle


def test_rank_above_all_points_1d():
    cloud = PointCloud([[0.0], [1.0], [2.0]])
    assert geometric_rank(cloud, [5.0])[0] == 1.0


def test_rank_at_symmetry_center():
    cloud = PointCloud([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    np.testing.assert_allclose(geometric_rank(cloud, [0.0, 0.0]), [0.0, 0.0], atol=1e-15)


def test_rank_1d_sign_counting():
    gen = np.random.default_rng(0)
    pts = np.sort(gen.standard_normal(21))
    cloud = PointCloud(pts[:, None])
    for y in (-0.9, 0.1, 1.3):
        below = int((pts < y).sum())
        above = int((pts > y).sum())
        expected = (below - above) / 21
        assert geometric_rank(cloud, [y])[0] == pytest.approx(expected)


def test_rank_norm_bounded():
    gen = np.random.default_rng(1)
    cloud = PointCloud(gen.standard_normal((50, 3)))
    for _ in range(100):
        y = gen.standard_normal(3) * 3
        assert np.linalg.norm(geometric_rank(cloud, y)) <= 1.0 + 1e-12


def test_rank_excludes_coincident_point():
    cloud = PointCloud([[0.0], [1.0], [2.0]])
    # at a data point the self term contributes the zero vector
    assert geometric_rank(cloud, [2.0])[0] == pytest.approx(2.0 / 3.0)


def test_quantile_median_of_symmetric_cloud():
    cloud = PointCloud([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    result = geometric_quantile(cloud, [0.0, 0.0])
    assert result.converged
    np.testing.assert_allclose(result.point, [0.0, 0.0], atol=1e-7)


def test_quantile_1d_matches_univariate_quantile():
    gen = np.random.default_rng(2)
    pts = np.sort(gen.standard_normal(500))
    cloud = PointCloud(pts[:, None])
    for u in (-0.8, -0.3, 0.0, 0.4, 0.9):
        result = geometric_quantile(cloud, [u])
        level = (u + 1.0) / 2.0
        k = int(np.clip(round(level * 500), 1, 499))
        lo, hi = pts[max(k - 2, 0)], pts[min(k + 1, 499)]
        assert lo - 1e-8 <= result.point[0] <= hi + 1e-8


def test_quantile_triangle_against_grid():
    cloud = PointCloud([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    result = geometric_quantile(cloud, [0.0, 0.0])
    oracle = grid_quantile_oracle(cloud, np.zeros(2), span=1.5, steps=301)
    assert np.linalg.norm(result.point - oracle) < 2 * (3.0 / 300.0)


def test_quantile_translation_equivariance():
    gen = np.random.default_rng(3)
    cloud = PointCloud(gen.standard_normal((40, 2)))
    shift = np.array([10.0, -4.0])
    u = np.array([0.3, -0.2])
    base = geometric_quantile(cloud, u)
    moved = geometric_quantile(PointCloud(cloud.points + shift), u)
    np.testing.assert_allclose(moved.point, base.point + shift, atol=1e-9)


def test_rank_quantile_inversion_1d():
    gen = np.random.default_rng(4)
    cloud = PointCloud(gen.standard_normal((500, 1)))
    for u in np.linspace(-0.9, 0.9, 7):
        result = geometric_quantile(cloud, [u], tol=1e-8)
        back = geometric_rank(cloud, result.point)
        assert abs(back[0] - u) < 2e-3  # limited by the jump of the empirical rank


def test_rank_quantile_inversion_2d():
    gen = np.random.default_rng(5)
    cloud = PointCloud(gen.standard_normal((400, 2)))
    for norm in (0.2, 0.5, 0.8):
        direction = np.array([0.6, -0.8])
        u = norm * direction
        result = geometric_quantile(cloud, u, tol=1e-10)
        if result.converged:
            back = geometric_rank(cloud, result.point)
            assert np.linalg.norm(back - u) < 1e-2


def test_quantile_rejects_rank_on_sphere():
    cloud = PointCloud(np.random.default_rng(6).standard_normal((10, 2)))
    with pytest.raises(ValueError):
        geometric_quantile(cloud, [1.0, 0.0])


def test_geometric_qq_self_match_1d():
    gen = np.random.default_rng(7)
    pts = gen.standard_normal((60, 1))
    cloud = PointCloud(pts)
    matched, flagged = geometric_qq(cloud, cloud)
    assert not flagged
    assert np.abs(matched - pts).max() < 5e-3


def test_geometric_qq_1d_close_to_sorted_matching():
    gen = np.random.default_rng(8)
    x = PointCloud(np.sort(gen.standard_normal(80))[:, None])
    y = PointCloud(np.sort(gen.standard_normal(80) * 1.5)[:, None])
    matched, _ = geometric_qq(x, y)
    # rank matching in 1d pairs order statistics of equal levels
    ranks = np.argsort(np.argsort(y.points[:, 0]))
    sorted_x = np.sort(x.points[:, 0])
    expected = sorted_x[ranks]
    err = np.abs(matched[:, 0] - expected)
    spacing = np.diff(sorted_x).max()
    assert np.median(err) < spacing


def test_geometric_qq_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        geometric_qq(PointCloud([[0.0, 1.0]]), PointCloud([[0.0]]))


def test_geometric_qq_gaussian_self_law_concentrates():
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 150, SeededRng(9, 1))
    y = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 150, SeededRng(9, 2))
    matched, _ = geometric_qq(x, y)
    dev = np.abs(matched - y.points)
    assert np.median(dev) < 0.35

import numpy as np
import pytest

from otqq import (
    Ball,
    GaussianSpec,
    InsufficientData,
    PointCloud,
    RunConfig,
    SeededRng,
    band_fraction,
    build_potential_set,
    build_qq_sets,
    eot_map,
    eot_potential,
    eot_two_sample_test,
    fit_slope,
    generate,
    null_distribution,
    ot_quantile_map,
    p_value,
    sample_unit_ball,
    select_u0,
    sinkhorn,
    statistic_e,
    statistic_f,
)
from otqq.analysis import PlotSet
from otqq.errors import DegenerateFit, EmptyRestriction


def _plot_set(pairs, component=0, method="OT"):
    return PlotSet(
        pairs=np.asarray(pairs, dtype=float),
        component=component,
        method=method,
        region_tag="test",
        sample_sizes=(len(pairs), len(pairs), len(pairs)),
    )


def test_qq_sets_identical_maps_on_diagonal():
    u = sample_unit_ball(30, 2, SeededRng(0, 3))
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 30, SeededRng(0, 1))
    transport = ot_quantile_map(u, x)
    sets = build_qq_sets(transport, transport, u)
    assert len(sets) == 2
    for s in sets:
        np.testing.assert_array_equal(s.pairs[:, 0], s.pairs[:, 1])


def test_qq_sets_1d_scaling_slope_two():
    gen = np.random.default_rng(1)
    u = PointCloud(np.sort(gen.uniform(-1, 1, 40))[:, None])
    x = PointCloud(np.sort(gen.standard_normal(40))[:, None])
    y = PointCloud(2.0 * x.points)
    tx = ot_quantile_map(u, x)
    ty = ot_quantile_map(u, y)
    (qq,) = build_qq_sets(tx, ty, u)
    np.testing.assert_allclose(qq.pairs[:, 1], 2.0 * qq.pairs[:, 0], atol=1e-12)
    fit = fit_slope(qq)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.rmse == pytest.approx(0.0, abs=1e-12)


def test_qq_sets_region_filters_reference_points():
    u = sample_unit_ball(100, 2, SeededRng(2, 3))
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 100, SeededRng(2, 1))
    transport = ot_quantile_map(u, x)
    region = Ball(0.5)
    inside = int(region.contains(u.points).sum())
    sets = build_qq_sets(transport, transport, u, region=region)
    assert all(s.pairs.shape[0] == inside for s in sets)
    with pytest.raises(EmptyRestriction):
        build_qq_sets(transport, transport, u, region=Ball(1e-9))


def test_potential_set_identical_values():
    u = sample_unit_ball(20, 2, SeededRng(3, 3))
    phi = np.abs(u.points[:, 0])
    s = build_potential_set(phi, phi, u)
    assert s.component == "potential"
    np.testing.assert_array_equal(s.pairs[:, 0], s.pairs[:, 1])


def test_potential_set_scaled_target_lies_above():
    # Gaussian vs its doubling: the scaled sample's potential dominates in the
    # upper tail of the first potential
    u = sample_unit_ball(500, 2, SeededRng(4, 3))
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 500, SeededRng(4, 1))
    y = PointCloud(2.0 * x.points)
    sx = sinkhorn(u, x, 1e-2)
    sy = sinkhorn(u, y, 1e-2)
    px = eot_potential(sx, x, select_u0(u, sx, x))
    py = eot_potential(sy, y, select_u0(u, sy, y))
    s = build_potential_set(px, py, u, method="EOT(eps=0.01)")
    order = np.argsort(s.pairs[:, 0])
    top = order[-50:]
    assert (s.pairs[top, 1] - s.pairs[top, 0]).mean() > 0


def test_band_fraction_cases():
    diag = _plot_set([[0.0, 0.0], [1.0, 1.0], [-2.0, -2.0]])
    d = band_fraction(diag, eta=0.5)
    assert d.fraction_inside == 1.0
    assert d.max_perpendicular_deviation == 0.0

    single = _plot_set([[0.0, 2.0]])
    d = band_fraction(single, eta=1.0)
    assert d.fraction_inside == 0.0
    assert d.max_perpendicular_deviation == pytest.approx(np.sqrt(2.0))


def test_band_fraction_matches_predicate():
    gen = np.random.default_rng(5)
    pairs = gen.standard_normal((200, 2))
    eta = 0.4
    d = band_fraction(_plot_set(pairs), eta=eta)
    expected = np.mean([abs(x - y) / np.sqrt(2) < eta for x, y in pairs])
    assert d.fraction_inside == pytest.approx(expected)


def test_fit_slope_recovers_known_line():
    gen = np.random.default_rng(6)
    x = gen.uniform(0, 10, 500)
    noise = gen.standard_normal(500) * 0.3
    y = 1.7 * x - 0.8 + noise
    fit = fit_slope(_plot_set(np.column_stack([x, y])))
    # OLS closed form on the same data is the oracle
    xc = x - x.mean()
    slope = (xc @ (y - y.mean())) / (xc @ xc)
    assert fit.slope == pytest.approx(slope, abs=1e-12)
    assert fit.slope == pytest.approx(1.7, abs=0.05)
    assert fit.intercept == pytest.approx(-0.8, abs=0.15)


def test_fit_slope_degenerate():
    with pytest.raises(DegenerateFit):
        fit_slope(_plot_set([[1.0, 0.0], [1.0, 5.0]]))


def test_statistic_e_zero_for_identical_maps():
    u, x = sample_unit_ball(30, 2, SeededRng(7, 3)), None
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 30, SeededRng(7, 1))
    state = sinkhorn(u, x, 1e-2)
    mc = sample_unit_ball(500, 2, SeededRng(7, 4))
    m = eot_map(state, x)
    assert statistic_e(m, m, mc, n=30) == 0.0


def test_statistic_e_constant_maps():
    u = sample_unit_ball(10, 2, SeededRng(8, 3))
    x = PointCloud([[1.0, 0.0]])
    y = PointCloud([[0.0, 1.0]])
    sx = sinkhorn(u, x, 0.1)
    sy = sinkhorn(u, y, 0.1)
    mc = sample_unit_ball(200, 2, SeededRng(8, 4))
    value = statistic_e(eot_map(sx, x), eot_map(sy, y), mc, n=10)
    assert value == pytest.approx(10 * 2.0, abs=1e-10)


def test_statistic_f_constant_offset():
    u = sample_unit_ball(40, 2, SeededRng(9, 3))
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 40, SeededRng(9, 1))
    state = sinkhorn(u, x, 1e-2)
    mc = sample_unit_ball(300, 2, SeededRng(9, 4))
    u0 = select_u0(u, state, x)
    pot = eot_potential(state, x, u0)
    other = eot_potential(state, x, u.points[5])
    offset = pot.at(u.points[5][None, :])[0]
    value = statistic_f(pot, other, mc, n=40)
    assert value == pytest.approx(40 * offset**2, rel=1e-9)


def test_statistic_mc_self_consistency():
    u = sample_unit_ball(200, 2, SeededRng(10, 3))
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 200, SeededRng(10, 1))
    y = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 200, SeededRng(10, 2))
    sx = sinkhorn(u, x, 1e-2)
    sy = sinkhorn(u, y, 1e-2)
    mx, my = eot_map(sx, x), eot_map(sy, y)
    mc1 = sample_unit_ball(4096, 2, SeededRng(11, 4))
    mc2 = sample_unit_ball(4096, 2, SeededRng(12, 4))
    e1 = statistic_e(mx, my, mc1, n=200)
    e2 = statistic_e(mx, my, mc2, n=200)
    diff1 = mx.at(mc1.points) - my.at(mc1.points)
    sq = (diff1**2).sum(axis=1)
    se = 200 * sq.std(ddof=1) / np.sqrt(4096)
    assert abs(e1 - e2) < 3 * 2 * se


def test_p_value_conventions():
    null = np.arange(1.0, 200.0)  # B = 199
    assert p_value(0.5, null) == 1.0
    assert p_value(1000.0, null) == pytest.approx(1 / 200)
    med = np.median(null)
    assert p_value(med, null) == pytest.approx(0.5, abs=1.0 / 200 + 1e-12)
    counted = (1 + int((null >= 42.0).sum())) / 200
    assert p_value(42.0, null) == pytest.approx(counted)
    assert p_value(np.inf, null) > 0.0


def test_null_distribution_rejects_small_b():
    x = generate(GaussianSpec(mean=(0.0,), cov=((1.0,),)), 30, SeededRng(13, 1))
    y = generate(GaussianSpec(mean=(0.0,), cov=((1.0,),)), 30, SeededRng(13, 2))
    with pytest.raises(ValueError):
        null_distribution(x, y, RunConfig(resamples=49))


def test_null_distribution_insufficient_pool():
    x = PointCloud([[0.0]])
    cfg = RunConfig(resamples=50, mc_points=64)
    with pytest.raises(InsufficientData):
        eot_two_sample_test(PointCloud(np.empty((1, 1)) * 0), x, cfg)


def test_null_distribution_deterministic_and_sorted():
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 40, SeededRng(14, 1))
    y = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 40, SeededRng(14, 2))
    cfg = RunConfig(seed=3, resamples=50, mc_points=256, epsilon=5e-2)
    e1, f1 = null_distribution(x, y, cfg)
    e2, f2 = null_distribution(x, y, cfg)
    np.testing.assert_array_equal(e1, e2)
    np.testing.assert_array_equal(f1, f2)
    assert (np.diff(e1) >= 0).all() and (np.diff(f1) >= 0).all()
    assert len(e1) == 50


def test_observed_statistic_within_null_support_for_equal_clouds():
    # literally identical clouds: both maps coincide, the observed statistics
    # are zero, inside [0, max] of the null support
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 50, SeededRng(15, 1))
    cfg = RunConfig(seed=4, resamples=50, mc_points=256, epsilon=5e-2)
    report = eot_two_sample_test(x, x, cfg)
    assert report.e_n == pytest.approx(0.0, abs=1e-12)
    assert report.e_n <= report.null_e[-1]
    assert report.f_n <= report.null_f[-1]
    assert report.p_e == 1.0


def test_statistics_invariant_under_row_permutation():
    gen = np.random.default_rng(16)
    x = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 60, SeededRng(17, 1))
    y = generate(GaussianSpec(mean=(0.0, 0.0), cov=((1, 0), (0, 1))), 60, SeededRng(17, 2))
    u = sample_unit_ball(60, 2, SeededRng(18, 3))
    mc = sample_unit_ball(512, 2, SeededRng(18, 4))

    def stats_for(xc, yc):
        sx = sinkhorn(u, xc, 1e-2)
        sy = sinkhorn(u, yc, 1e-2)
        e = statistic_e(eot_map(sx, xc), eot_map(sy, yc), mc, n=60)
        px = eot_potential(sx, xc, select_u0(u, sx, xc))
        py = eot_potential(sy, yc, select_u0(u, sy, yc))
        return e, statistic_f(px, py, mc, n=60)

    e0, f0 = stats_for(x, y)
    xp = PointCloud(x.points[gen.permutation(60)])
    yp = PointCloud(y.points[gen.permutation(60)])
    e1, f1 = stats_for(xp, yp)
    assert e1 == pytest.approx(e0, rel=1e-6)
    assert f1 == pytest.approx(f0, rel=1e-6)


def test_plot_set_validation():
    with pytest.raises(ValueError):
        _plot_set(np.full((3, 2), np.nan))
    with pytest.raises(ValueError):
        PlotSet(
            pairs=np.zeros((2, 3)),
            component=0,
            method="OT",
            region_tag="t",
            sample_sizes=(2, 2, 2),
        )

"""Null simulation, rank p-values, and simulation-based tests."""

import numpy as np
import pytest
from scipy import stats

from simflow import (
    DISTANCE_REGISTRY,
    STATISTIC_REGISTRY,
    AnalyticZTest,
    LogNormalTwoGroup,
    NormalNormal,
    PValueSet,
    SimulationTest,
    SummaryStatistic,
    critical_value,
    run_test,
    simulate_null,
    simulation_pvalue,
    substream,
    uniformity_test,
)
from simflow.errors import RetryError
from simflow.simtest import mean_stat, pooled_t


def test_constant_statistic_null():
    const = SummaryStatistic("const", "data", lambda y: 1.0,
                             lambda obs, labels: np.ones(obs.shape[0]))
    model = NormalNormal(n_obs=5)
    null = simulate_null(model, [0.0], const, s=500, seed=1)
    assert np.all(null.values == 1.0)
    assert null.n_resampled == 0


def test_null_sd_matches_sampling_theory():
    model = NormalNormal(mu0=0.0, tau0=1.0, sigma=1.0, n_obs=100)
    null = simulate_null(model, [0.0], mean_stat, s=10_000, seed=3)
    assert null.values.std(ddof=1) == pytest.approx(0.1, rel=0.05)
    assert abs(null.values.mean()) < 0.005


def test_simulate_null_requires_data_statistic():
    from simflow.simtest import count_distance

    with pytest.raises(ValueError):
        simulate_null(NormalNormal(n_obs=5), [0.0], count_distance, s=10, seed=0)


def test_simulate_null_deterministic():
    model = NormalNormal(n_obs=10)
    a = simulate_null(model, [0.3], mean_stat, s=300, seed=8)
    b = simulate_null(model, [0.3], mean_stat, s=300, seed=8)
    assert np.array_equal(a.values, b.values)


def test_simulation_pvalue_trivial_cases():
    rng = substream(0, 0)
    null = np.array([1.0, 2.0, 3.0, 4.0])
    assert simulation_pvalue(2.5, null, "lower", rng) == 0.5
    assert simulation_pvalue(0.5, null, "lower", rng) == 0.0
    assert simulation_pvalue(5.0, null, "lower", rng) == 1.0
    assert simulation_pvalue(1.5, null, "two_sided", rng) == 0.5
    assert simulation_pvalue(5.0, null, "two_sided", rng) == 0.0
    with pytest.raises(ValueError):
        simulation_pvalue(1.0, null, "both", rng)


def test_tie_handling_splits_exactly():
    null = np.full(101, 3.0)
    p_lo = simulation_pvalue(3.0, null, "lower", substream(5, 0))
    p_hi = simulation_pvalue(3.0, null, "upper", substream(5, 0))
    assert p_lo + p_hi == 1.0
    assert 0.0 < p_lo < 1.0


def test_pooled_t_null_is_not_student_t_for_lognormal():
    model = LogNormalTwoGroup(sigma=2.0, n_per_group=40)
    null = simulate_null(model, [2.0, 2.0], pooled_t, s=10_000, seed=0)
    ks = stats.kstest(null.values, stats.t(df=78).cdf)
    assert ks.pvalue < 0.001


def test_critical_values_on_integer_grid():
    v = np.arange(1.0, 101.0)
    assert critical_value(v, 0.05, "lower") == pytest.approx(5.95)
    assert critical_value(v, 0.5, "lower") == pytest.approx(50.5)
    lo, hi = critical_value(v, 0.05, "two_sided")
    assert lo < hi
    assert lo == pytest.approx(np.quantile(v, 0.025))
    # tighter alpha pushes the upper critical value out
    assert critical_value(v, 0.01, "upper") > critical_value(v, 0.1, "upper")
    with pytest.raises(ValueError):
        critical_value(v, 0.0, "upper")
    with pytest.raises(ValueError):
        critical_value(v, 0.05, "middle")


def test_pvalue_and_critical_value_agree():
    rng = substream(17, 0)
    null = rng.normal(size=2000)
    obs = rng.normal(size=200)
    alpha = 0.05
    crit = critical_value(null, alpha, "upper")
    disagreements = 0
    for i, o in enumerate(obs):
        p = simulation_pvalue(o, null, "upper", substream(17, 1, i))
        if (p <= alpha) != (o > crit):
            disagreements += 1
    # type-7 interpolation leaves a sliver between the two rules
    assert disagreements <= 1


def test_pvalue_mc_error_shrinks_with_null_size():
    model = NormalNormal(n_obs=10)

    def pvals(s, base):
        out = []
        for r in range(300):
            null = simulate_null(model, [0.0], mean_stat, s=s, seed=base + r)
            out.append(simulation_pvalue(0.1, null.values, "lower",
                                         substream(base + r, 9)))
        return np.array(out)

    sd_small = pvals(200, 1000).std(ddof=1)
    sd_large = pvals(800, 5000).std(ddof=1)
    ratio = sd_small / sd_large
    assert 1.6 < ratio < 2.6


def test_shared_null_gives_uniform_pvalues():
    model = NormalNormal(mu0=0.0, tau0=1.0, sigma=1.0, n_obs=20)
    theta0 = np.array([0.2])
    test = SimulationTest(model, theta0, mean_stat, side="lower", s=2000, seed=7)
    ps = np.empty(1000)
    for i in range(1000):
        rng = substream(7, 2, i)
        y = model.simulate_data(theta0, rng)
        ps[i] = test.pvalue(y, rng)
    verdict = uniformity_test(PValueSet(ps, granularity=2000))
    assert verdict.chi2_pvalue > 0.001


def test_simulate_null_resamples_undefined_draws():
    # statistic undefined whenever the sample mean is large; rare enough
    # that retries clear it, common enough to trigger at s=400
    def batch(obs, labels):
        m = obs[:, :, 0].mean(axis=1)
        return np.where(m < 0.52, m, np.nan)

    flaky = SummaryStatistic("flaky-mean", "data",
                             lambda y: float(y.observations[:, 0].mean()), batch)
    model = NormalNormal(n_obs=10)
    with pytest.warns(RuntimeWarning, match="resampled"):
        null = simulate_null(model, [0.0], flaky, s=400, seed=2)
    assert null.n_resampled > 0
    assert np.all(np.isfinite(null.values))


def test_simulate_null_retry_cap():
    broken = SummaryStatistic("never", "data", lambda y: np.nan,
                              lambda obs, labels: np.full(obs.shape[0], np.nan))
    with pytest.raises(RetryError):
        simulate_null(NormalNormal(n_obs=5), [0.0], broken, s=50, seed=0)


def test_run_test_report_shape():
    model = NormalNormal(n_obs=30)
    y = model.simulate_data(np.array([0.0]), substream(12, 0))
    report = run_test(model, [0.0], mean_stat, y, side="two_sided", s=4000, seed=1)
    assert report.statistic == "mean"
    assert report.side == "two_sided"
    assert 0.0 <= report.pvalue <= 1.0
    assert report.s == 4000
    assert isinstance(report.critical_values[0.05], tuple)
    assert "2*min" in report.metadata["two_sided_rule"]
    assert set(report.null_quantiles) == {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}


def test_simulation_test_default_rng_reproducible():
    model = NormalNormal(n_obs=30)
    y = model.simulate_data(np.array([0.0]), substream(13, 0))
    t1 = SimulationTest(model, [0.0], mean_stat, side="lower", s=1000, seed=4)
    t2 = SimulationTest(model, [0.0], mean_stat, side="lower", s=1000, seed=4)
    assert t1.pvalue(y) == t2.pvalue(y)
    with pytest.raises(ValueError):
        SimulationTest(model, [0.0], mean_stat, side="sideways", s=100)


def test_analytic_z_test_sides():
    model = NormalNormal(n_obs=25)
    y = model.simulate_data(np.array([0.8]), substream(14, 0))
    z = (y.observations[:, 0].mean() - 0.0) * 5.0
    upper = AnalyticZTest(0.0, 1.0, side="upper").pvalue(y)
    lower = AnalyticZTest(0.0, 1.0, side="lower").pvalue(y)
    two = AnalyticZTest(0.0, 1.0, side="two_sided").pvalue(y)
    assert upper == pytest.approx(stats.norm.sf(z))
    assert upper + lower == pytest.approx(1.0)
    assert two == pytest.approx(2 * stats.norm.sf(abs(z)))
    with pytest.raises(ValueError):
        AnalyticZTest(0.0, 1.0, side="diagonal")


def test_registries_complete():
    assert set(STATISTIC_REGISTRY) == {
        "mean", "mean-diff", "pooled-t", "variance-ratio", "max", "lag1-autocorr"
    }
    assert set(DISTANCE_REGISTRY) == {"mean-distance", "count-distance"}

"""Model contracts: priors, simulators, densities, conjugate posteriors.

Closed-form reference values are frozen at 17 significant digits; they
come from independent scipy computations, not from the code under test.
"""

import numpy as np
import pytest
from scipy import stats

from simflow import (
    BetaBinomial,
    Dataset,
    DomainError,
    LogNormalTwoGroup,
    NormalNormal,
    PoissonGamma,
    concat_datasets,
    make_model,
    substream,
)

# independent oracle computations, frozen
NN_LOG_MARGINAL_3OBS = -4.5337127801739623  # y=[0.3,-1.2,0.8], mu0=0, tau0=1, sigma=1
NN_LOG_MARGINAL_1OBS = -1.3880121234846454  # y=0.7
PG_LOG_MARGINAL = -3.5959414584546674       # y=[3,1], a=2, b=1
BB_LOG_MARGINAL_UNIFORM = -2.3978952727983707  # log(1/11)
BB_LOG_MARGINAL_22 = -2.1902559080201249    # a=b=2, n=10, k=3


def _d(values, labels=None):
    return Dataset(np.asarray(values, dtype=float).reshape(-1, 1), labels)


# --- priors ----------------------------------------------------------------

def test_prior_mean_uniform_beta():
    model = BetaBinomial(a=1.0, b=1.0)
    draws = model.sample_prior(substream(11, 0), 100_000)[:, 0]
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - 0.5) < 3 * se


def test_prior_variance_normal():
    model = NormalNormal(mu0=0.0, tau0=1.0)
    draws = model.sample_prior(substream(12, 0), 100_000)[:, 0]
    v = draws.var(ddof=1)
    m4 = ((draws - draws.mean()) ** 4).mean()
    se_var = np.sqrt((m4 - v**2) / draws.size)
    assert abs(v - 1.0) < 3 * se_var


@pytest.mark.parametrize("name", ["normal-normal", "beta-binomial", "poisson-gamma"])
def test_prior_draw_deterministic(name):
    model = make_model(name)
    a = model.sample_prior(substream(3, 0), 1)
    b = model.sample_prior(substream(3, 0), 1)
    assert np.array_equal(a, b)


# --- simulators ------------------------------------------------------------

def test_simulate_degenerate_binomial():
    model = BetaBinomial(n_trials=20)
    y = model.simulate_data(np.array([1.0]), substream(4, 0), n_obs=50)
    assert np.all(y.observations == 20.0)


def test_simulate_mean_lln():
    model = NormalNormal(sigma=1.0)
    y = model.simulate_data(np.array([0.0]), substream(5, 0), n_obs=100_000)
    assert abs(y.observations[:, 0].mean()) < 3 * 10 ** (-5 / 2) * 3


def test_simulate_two_group_shapes():
    model = LogNormalTwoGroup(sigma=2.0, n_per_group=40)
    y = model.simulate_data(np.array([2.0, 2.0]), substream(6, 0))
    assert y.n_obs == 80
    assert np.all(y.observations > 0)
    assert (y.group_labels == 0).sum() == 40
    assert (y.group_labels == 1).sum() == 40


def test_simulate_bit_reproducible():
    model = PoissonGamma()
    a = model.simulate_data(np.array([2.5]), substream(9, 1), n_obs=30)
    b = model.simulate_data(np.array([2.5]), substream(9, 1), n_obs=30)
    assert np.array_equal(a.observations, b.observations)


# --- log-likelihoods --------------------------------------------------------

def test_loglik_binomial_half():
    model = BetaBinomial(n_trials=2)
    assert model.log_likelihood(np.array([0.5]), _d([1.0])) == pytest.approx(
        np.log(0.5), abs=1e-12
    )


def test_loglik_standard_normal_at_zero():
    model = NormalNormal(sigma=1.0)
    want = -0.5 * np.log(2 * np.pi)
    assert model.log_likelihood(np.array([0.0]), _d([0.0])) == pytest.approx(
        want, abs=1e-12
    )


def test_loglik_poisson_two_zeros():
    model = PoissonGamma()
    assert model.log_likelihood(np.array([1.0]), _d([0.0, 0.0])) == pytest.approx(
        -2.0, abs=1e-12
    )


def test_loglik_finite_on_prior_support():
    for name in ("normal-normal", "beta-binomial", "poisson-gamma"):
        model = make_model(name)
        rng = substream(21, 0)
        thetas = model.sample_prior(rng, 100)
        for i in range(thetas.shape[0]):
            y = model.simulate_data(thetas[i], rng)
            assert np.isfinite(model.log_likelihood(thetas[i], y))


def test_loglik_two_group_matches_scipy():
    model = LogNormalTwoGroup(sigma=2.0, n_per_group=3)
    y = model.simulate_data(np.array([2.0, 1.0]), substream(22, 0))
    want = 0.0
    for g, mu in ((0, 2.0), (1, 1.0)):
        vals = y.observations[y.group_labels == g, 0]
        want += stats.lognorm.logpdf(vals, s=2.0, scale=np.exp(mu)).sum()
    got = model.log_likelihood(np.array([2.0, 1.0]), y)
    assert got == pytest.approx(want, rel=1e-12)


# --- conjugate posteriors ----------------------------------------------------

def test_posterior_beta_update():
    post = BetaBinomial(a=1.0, b=1.0, n_trials=10).analytic_posterior(_d([3.0]))
    assert post.family == "beta"
    assert post.params == (4.0, 8.0)
    assert post.mean() == pytest.approx(4.0 / 12.0, abs=1e-12)


def test_posterior_normal_update():
    post = NormalNormal(mu0=0.0, tau0=1.0, sigma=1.0).analytic_posterior(_d([1.0]))
    assert post.family == "normal"
    assert post.mean() == pytest.approx(0.5, abs=1e-12)
    assert post.var() == pytest.approx(0.5, abs=1e-12)


def test_posterior_gamma_update():
    post = PoissonGamma(a=2.0, b=1.0).analytic_posterior(_d([3.0, 1.0]))
    assert post.family == "gamma"
    assert post.params == (6.0, 3.0)
    assert post.mean() == pytest.approx(2.0, abs=1e-12)


# --- analytic marginals -------------------------------------------------------

def test_marginal_uniform_over_counts():
    model = BetaBinomial(a=1.0, b=1.0, n_trials=10)
    for k in range(11):
        assert model.log_marginal(_d([float(k)])) == pytest.approx(
            BB_LOG_MARGINAL_UNIFORM, abs=1e-12
        )


def test_marginal_frozen_oracles():
    assert BetaBinomial(a=2.0, b=2.0, n_trials=10).log_marginal(
        _d([3.0])
    ) == pytest.approx(BB_LOG_MARGINAL_22, abs=1e-12)
    assert PoissonGamma(a=2.0, b=1.0).log_marginal(_d([3.0, 1.0])) == pytest.approx(
        PG_LOG_MARGINAL, abs=1e-12
    )
    nn = NormalNormal(mu0=0.0, tau0=1.0, sigma=1.0)
    assert nn.log_marginal(_d([0.3, -1.2, 0.8])) == pytest.approx(
        NN_LOG_MARGINAL_3OBS, abs=1e-12
    )
    assert nn.log_marginal(_d([0.7])) == pytest.approx(NN_LOG_MARGINAL_1OBS, abs=1e-12)


def test_prior_predictive_mean_consistency():
    # conjugate-model prior-predictive means against simulation at S=1e5
    cases = [
        (NormalNormal(mu0=0.3), 0.3),
        (BetaBinomial(a=2.0, b=4.0, n_trials=10), 10 * 2.0 / 6.0),
        (PoissonGamma(a=2.0, b=1.0), 2.0),
    ]
    for model, want in cases:
        rng = substream(31, 0)
        thetas = model.sample_prior(rng, 100_000)
        obs = model.simulate_batch(thetas, rng, n_obs=1)[:, 0, 0]
        se = obs.std(ddof=1) / np.sqrt(obs.size)
        assert abs(obs.mean() - want) < 3 * se, model.name


# --- domain and registry ------------------------------------------------------

def test_domain_errors():
    with pytest.raises(DomainError):
        NormalNormal().simulate_data(np.array([0.0, 1.0]), substream(0, 0))
    with pytest.raises(DomainError):
        BetaBinomial().simulate_data(np.array([1.5]), substream(0, 0))
    with pytest.raises(DomainError):
        PoissonGamma().log_likelihood(np.array([1.0]), _d([2.5]))
    with pytest.raises(DomainError):
        BetaBinomial(a=-1.0)
    with pytest.raises(DomainError):
        NormalNormal(tau0=0.0)


def test_make_model_registry():
    for name in ("normal-normal", "beta-binomial", "poisson-gamma",
                 "lognormal-two-group"):
        assert make_model(name).name == name
    with pytest.raises(ValueError, match="unknown model"):
        make_model("bogus")


# --- datasets -------------------------------------------------------------------

def test_dataset_csv_roundtrip(tmp_path):
    y = _d([1.25, -0.5, 3.0])
    p = tmp_path / "y.csv"
    y.to_csv(p)
    back = Dataset.from_csv(p)
    assert np.array_equal(back.observations, y.observations)
    assert back.group_labels is None


def test_dataset_csv_roundtrip_groups(tmp_path):
    y = Dataset(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]))
    p = tmp_path / "y.csv"
    y.to_csv(p)
    back = Dataset.from_csv(p)
    assert np.array_equal(back.observations, y.observations)
    assert np.array_equal(back.group_labels, y.group_labels)


def test_dataset_empty_concat():
    y = _d([1.0, 2.0])
    joined = concat_datasets(Dataset.empty(), y)
    assert np.array_equal(joined.observations, y.observations)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 1)), np.array([0, 1]))

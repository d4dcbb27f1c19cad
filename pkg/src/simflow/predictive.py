"""Predictive checks: prior pushforward, frequentist plug-in replication,
posterior predictive checks, and posterior simulation-based calibration.

Posterior predictive replication is ancestral: one fresh parameter draw per
replicated dataset, never one parameter reused for all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .approximators import Approximator
from .calibration import SbcConfig, SbcResult, _default_targets, sbc_pvalue
from .diagnostics import PValueSet, uniformity_test
from .models import Dataset, Model, ParamDraws, SummaryStatistic, concat_datasets
from .parallel import map_indexed
from .rng import as_generator, substream
from .simtest import simulation_pvalue

__all__ = [
    "PushforwardResult",
    "prior_pushforward_check",
    "PredictiveResult",
    "frequentist_predictive_check",
    "posterior_predictive_sample",
    "posterior_predictive_pvalue",
    "run_ppc",
    "run_posterior_sbc",
]


@dataclass(frozen=True)
class PushforwardResult:
    kind: str
    statistic: str
    fraction_in_region: float
    region: tuple[float, float]
    values: np.ndarray
    s: int
    seed: int
    metadata: dict = field(default_factory=dict)


def prior_pushforward_check(
    model: Model,
    statistic: SummaryStatistic,
    region: tuple[float, float],
    s: int,
    seed: int = 0,
) -> PushforwardResult:
    """Fraction of prior-simulated statistic values inside a closed region."""
    lo, hi = float(region[0]), float(region[1])
    if not lo <= hi:
        raise ValueError("region must be ordered (lo, hi)")
    rng = substream(seed, 0)
    thetas = model.sample_prior(rng, s)
    obs = model.simulate_batch(thetas, rng)
    labels = model.group_labels(obs.shape[1])
    values = statistic.on_data_batch(obs, labels)
    frac = float(((values >= lo) & (values <= hi)).mean())
    return PushforwardResult(
        kind="prior-pushforward",
        statistic=statistic.name,
        fraction_in_region=frac,
        region=(lo, hi),
        values=values,
        s=int(s),
        seed=int(seed),
    )


@dataclass(frozen=True)
class PredictiveResult:
    kind: str
    statistic: str
    replication_stats: np.ndarray
    observed_stat: float | None
    ppp: float | None
    s: int
    seed: int
    metadata: dict = field(default_factory=dict)


def posterior_predictive_pvalue(observed: float, replication_stats, rng) -> float:
    """Normalized rank of the observed statistic among replicated ones.

    Same rank convention as the calibration p-value: values near 0 and
    near 1 are both extreme.
    """
    return simulation_pvalue(float(observed), replication_stats, "lower", rng)


def _replication_result(
    kind: str,
    model: Model,
    statistic: SummaryStatistic,
    y_obs: Dataset,
    obs: np.ndarray,
    seed: int,
    rng,
    metadata: dict,
) -> PredictiveResult:
    labels = model.group_labels(obs.shape[1])
    s = obs.shape[0]
    if statistic.arity == "data":
        reps = statistic.on_data_batch(obs, labels)
        observed = statistic.on_data(y_obs)
        ppp = posterior_predictive_pvalue(observed, reps, rng) if s >= 2 else None
    elif statistic.arity == "data_pair":
        reps = statistic.on_pair_batch(y_obs, obs, labels)
        observed = None
        ppp = None
    else:
        raise ValueError("predictive checks need a data or data_pair statistic")
    return PredictiveResult(
        kind=kind,
        statistic=statistic.name,
        replication_stats=reps,
        observed_stat=None if observed is None else float(observed),
        ppp=None if ppp is None else float(ppp),
        s=int(s),
        seed=int(seed),
        metadata=metadata,
    )


def frequentist_predictive_check(
    model: Model,
    theta_hat,
    statistic: SummaryStatistic,
    y_obs: Dataset,
    s: int,
    seed: int = 0,
) -> PredictiveResult:
    """Replicate datasets at a fixed fitted parameter and compare."""
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    rng = substream(seed, 0)
    thetas = np.broadcast_to(theta_hat, (s, theta_hat.size))
    obs = model.simulate_batch(thetas, rng, n_obs=y_obs.n_obs)
    return _replication_result(
        "frequentist-predictive",
        model,
        statistic,
        y_obs,
        obs,
        seed,
        rng,
        {"theta_hat": [float(v) for v in theta_hat]},
    )


def posterior_predictive_sample(
    model: Model,
    draws: ParamDraws,
    s: int,
    seed: int = 0,
    n_obs: int | None = None,
) -> list[Dataset]:
    """Ancestral posterior predictive datasets, one parameter draw each.

    Needs at least s parameter draws; extras are subsampled without
    replacement.
    """
    rng = substream(seed, 0)
    thetas = _take_draws(draws, s, rng)
    obs = model.simulate_batch(thetas, rng, n_obs=n_obs)
    labels = model.group_labels(obs.shape[1])
    return [Dataset(obs[i], labels) for i in range(s)]


def _take_draws(draws: ParamDraws, s: int, rng) -> np.ndarray:
    if draws.m < s:
        raise ValueError(f"need at least {s} posterior draws, have {draws.m}")
    if draws.m == s:
        return draws.values
    idx = np.sort(as_generator(rng).choice(draws.m, size=s, replace=False))
    return draws.values[idx]


def run_ppc(
    model: Model,
    approximator: Approximator,
    y_obs: Dataset,
    statistic: SummaryStatistic,
    s: int,
    seed: int = 0,
) -> PredictiveResult:
    """Posterior predictive check through an approximator."""
    draws = approximator.approximate(model, y_obs, substream(seed, 1), m=s)
    rng = substream(seed, 0)
    obs = model.simulate_batch(draws.values, rng, n_obs=y_obs.n_obs)
    return _replication_result(
        "posterior-predictive",
        model,
        statistic,
        y_obs,
        obs,
        seed,
        rng,
        {"approximator": approximator.name},
    )


def run_posterior_sbc(
    model: Model,
    approximator: Approximator,
    y_obs: Dataset,
    cfg: SbcConfig,
) -> SbcResult:
    """Calibration conditional on observed data.

    Each iteration draws theta' from the approximate posterior given y_obs,
    replicates a dataset from it, then ranks theta' within the approximate
    posterior conditioned on observed and replicated data concatenated.
    With an empty y_obs this reduces to plain prior-predictive calibration.
    """
    targets = cfg.targets or _default_targets(model)
    n_rep = y_obs.n_obs if y_obs.n_obs > 0 else None
    theta_prime = approximator.approximate(
        model, y_obs, substream(cfg.seed, 1), m=cfg.s
    ).values

    def one(i: int):
        rng = substream(cfg.seed, 0, i)
        y_rep = model.simulate_data(theta_prime[i], rng, n_obs=n_rep)
        y_aug = concat_datasets(y_obs, y_rep)
        draws = approximator.approximate(model, y_aug, rng, m=cfg.m)
        out = np.empty(len(targets))
        for j, t in enumerate(targets):
            out[j] = sbc_pvalue(
                t.on_params(theta_prime[i]), t.on_param_batch(draws.values), rng
            )
        return out

    rows = np.array(map_indexed(one, cfg.s, cfg.threads))
    pvalues = {}
    verdicts = {}
    for j, t in enumerate(targets):
        pset = PValueSet(rows[:, j], granularity=cfg.m)
        pvalues[t.name] = pset
        verdicts[t.name] = uniformity_test(
            pset, bins=cfg.bins, band_coverage=cfg.band_coverage
        )
    return SbcResult(
        kind="posterior-sbc",
        model=model.name,
        approximator=approximator.name,
        s=cfg.s,
        m=cfg.m,
        seed=cfg.seed,
        target_names=tuple(t.name for t in targets),
        pvalues=pvalues,
        verdicts=verdicts,
        metadata={
            "approximator_kind": approximator.kind,
            "theta_prime_source": "approximator under test",
            "conditioning": "observed and replicated data concatenated",
            "n_obs": int(y_obs.n_obs),
        },
    )

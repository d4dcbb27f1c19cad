"""Calibration pipelines: simulation-based calibration of posterior
approximators, frequentist calibration of estimators, power analysis,
sharpness, and estimator accuracy.

All pipelines share the same skeleton: an embarrassingly parallel outer
loop over simulated datasets, one derived random stream per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approximators import Approximator
from .diagnostics import PValueSet, UniformityVerdict, uniformity_test
from .models import Dataset, Model, SummaryStatistic, param_target
from .parallel import map_indexed
from .rng import substream
from .simtest import simulation_pvalue

__all__ = [
    "sbc_pvalue",
    "SbcConfig",
    "SbcResult",
    "run_sbc",
    "EstimatorSpec",
    "sample_mean_estimator",
    "posterior_mean_estimator",
    "FreqCalResult",
    "run_frequentist_calibration",
    "PowerResult",
    "power_analysis",
    "SharpnessResult",
    "sharpness",
    "AccuracyResult",
    "estimator_accuracy",
    "squared_error",
    "absolute_error",
]


def sbc_pvalue(t_star: float, t_draws: np.ndarray, rng) -> float:
    """Fraction of draws at or below the truth, ties counted with
    probability one half each (seeded)."""
    return simulation_pvalue(float(t_star), t_draws, "lower", rng)


@dataclass(frozen=True)
class SbcConfig:
    s: int = 1000
    m: int = 99
    seed: int = 0
    targets: tuple[SummaryStatistic, ...] | None = None
    bins: int = 10
    band_coverage: float = 0.95
    threads: int = 1

    def __post_init__(self):
        if self.s < 10:
            raise ValueError("SBC needs at least 10 outer simulations")
        if self.m < 1:
            raise ValueError("inner draw count must be positive")


@dataclass(frozen=True)
class SbcResult:
    kind: str
    model: str
    approximator: str
    s: int
    m: int
    seed: int
    target_names: tuple[str, ...]
    pvalues: dict[str, PValueSet]
    verdicts: dict[str, UniformityVerdict]
    metadata: dict = field(default_factory=dict)


def _default_targets(model: Model) -> tuple[SummaryStatistic, ...]:
    return tuple(param_target(i) for i in range(model.param_dim))


def run_sbc(model: Model, approximator: Approximator, cfg: SbcConfig) -> SbcResult:
    """Nested simulation: prior draw, dataset, approximate posterior, rank.

    Under an exactly calibrated approximator each target's p-values are
    discrete uniform on {0, 1/M, ..., 1}.
    """
    targets = cfg.targets or _default_targets(model)

    def one(i: int):
        rng = substream(cfg.seed, 0, i)
        theta = model.sample_prior(rng, 1)[0]
        y = model.simulate_data(theta, rng)
        draws = approximator.approximate(model, y, rng, m=cfg.m)
        out = np.empty(len(targets))
        for j, t in enumerate(targets):
            out[j] = sbc_pvalue(t.on_params(theta), t.on_param_batch(draws.values), rng)
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
        kind="sbc",
        model=model.name,
        approximator=approximator.name,
        s=cfg.s,
        m=cfg.m,
        seed=cfg.seed,
        target_names=tuple(t.name for t in targets),
        pvalues=pvalues,
        verdicts=verdicts,
        metadata={"approximator_kind": approximator.kind},
    )


# ---------------------------------------------------------------------------
# Frequentist estimator calibration


@dataclass(frozen=True)
class EstimatorSpec:
    """A point estimator of a scalar quantity, with an optional interval
    constructor interval(dataset, alpha) -> (lo, hi)."""

    name: str
    point: Callable[[Dataset], float]
    interval: Callable | None = None


sample_mean_estimator = EstimatorSpec(
    "sample-mean", lambda y: float(y.observations[:, 0].mean())
)


def posterior_mean_estimator(model: Model) -> EstimatorSpec:
    return EstimatorSpec(
        "posterior-mean", lambda y: float(model.analytic_posterior(y).mean())
    )


@dataclass(frozen=True)
class FreqCalResult:
    kind: str
    model: str
    estimator: str
    s: int
    seed: int
    pvalues: PValueSet
    verdict: UniformityVerdict
    interval_coverage: dict[float, float]
    n_failed: int
    metadata: dict = field(default_factory=dict)


def run_frequentist_calibration(
    model: Model,
    theta_star,
    estimator: EstimatorSpec,
    sampling_dist,
    s: int,
    seed: int = 0,
    alphas: tuple[float, ...] = (0.9,),
    bins: int = 10,
    threads: int = 1,
) -> FreqCalResult:
    """Calibration of an estimator against an approximate sampling law.

    sampling_dist is either an object with a cdf method (an analytic
    approximation of the sampling distribution of the estimate at
    theta_star) or an array of estimate draws from it. Each simulated
    dataset contributes p = F(estimate); exact approximations give uniform
    p-values. Interval coverage at level alpha is the fraction of p-values
    in the central alpha interval, which is coverage of the pivot-style
    confidence interval built from the same approximation.

    Estimator failures (exceptions or non-finite values) skip the dataset
    and are counted.
    """
    theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
    empirical = isinstance(sampling_dist, np.ndarray)
    if empirical:
        ref = np.asarray(sampling_dist, dtype=float)

    def one(i: int):
        rng = substream(seed, 0, i)
        y = model.simulate_data(theta_star, rng)
        try:
            est = float(estimator.point(y))
        except Exception:
            return np.nan
        if not np.isfinite(est):
            return np.nan
        if empirical:
            return simulation_pvalue(est, ref, "lower", rng)
        return float(sampling_dist.cdf(est))

    raw = np.array(map_indexed(one, s, threads))
    failed = ~np.isfinite(raw)
    pvals = raw[~failed]
    if pvals.size == 0:
        raise RuntimeError("estimator failed on every simulated dataset")
    pset = PValueSet(pvals, granularity=ref.size if empirical else None)
    verdict = uniformity_test(pset, bins=bins)
    coverage = {
        float(a): float(((pvals >= (1 - a) / 2) & (pvals <= (1 + a) / 2)).mean())
        for a in alphas
    }
    return FreqCalResult(
        kind="frequentist-calibration",
        model=model.name,
        estimator=estimator.name,
        s=int(s),
        seed=int(seed),
        pvalues=pset,
        verdict=verdict,
        interval_coverage=coverage,
        n_failed=int(failed.sum()),
        metadata={"theta_star": [float(v) for v in theta_star]},
    )


# ---------------------------------------------------------------------------
# Power, sharpness, accuracy


@dataclass(frozen=True)
class PowerResult:
    kind: str
    power: float
    mc_se: float
    alpha: float
    s: int
    seed: int
    n_rejections: int
    mode: str
    metadata: dict = field(default_factory=dict)


def power_analysis(
    model: Model,
    theta_star,
    test,
    alpha: float,
    s: int,
    seed: int = 0,
    threads: int = 1,
) -> PowerResult:
    """Rejection rate of a test over datasets simulated at theta_star.

    theta_star may be None, which draws a fresh parameter from the model
    prior for every dataset (design-prior power). The test object only
    needs a pvalue(dataset, rng) method.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    prior_mode = theta_star is None
    if not prior_mode:
        theta_star = np.asarray(theta_star, dtype=float).reshape(-1)

    def one(i: int) -> bool:
        rng = substream(seed, 0, i)
        theta = model.sample_prior(rng, 1)[0] if prior_mode else theta_star
        y = model.simulate_data(theta, rng)
        return test.pvalue(y, rng) <= alpha

    hits = np.array(map_indexed(one, s, threads), dtype=bool)
    power = float(hits.mean())
    return PowerResult(
        kind="power",
        power=power,
        mc_se=float(np.sqrt(power * (1.0 - power) / s)),
        alpha=float(alpha),
        s=int(s),
        seed=int(seed),
        n_rejections=int(hits.sum()),
        mode="prior" if prior_mode else "fixed",
    )


@dataclass(frozen=True)
class SharpnessResult:
    kind: str
    alpha: float
    s: int
    m: int
    seed: int
    mean_width: float
    mc_se: float
    widths_by_dim: tuple[float, ...]
    metadata: dict = field(default_factory=dict)


def sharpness(
    approximator: Approximator,
    model: Model,
    alpha: float,
    s: int,
    seed: int = 0,
    m: int | None = None,
    threads: int = 1,
) -> SharpnessResult:
    """Average central alpha-interval width of the approximate posterior
    over prior-simulated datasets."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo_q, hi_q = (1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0

    def one(i: int) -> np.ndarray:
        rng = substream(seed, 0, i)
        theta = model.sample_prior(rng, 1)[0]
        y = model.simulate_data(theta, rng)
        draws = approximator.approximate(model, y, rng, m=m)
        return np.quantile(draws.values, hi_q, axis=0) - np.quantile(
            draws.values, lo_q, axis=0
        )

    widths = np.array(map_indexed(one, s, threads))
    mean_by_dim = widths.mean(axis=0)
    return SharpnessResult(
        kind="sharpness",
        alpha=float(alpha),
        s=int(s),
        m=int(m or approximator.draw_count),
        seed=int(seed),
        mean_width=float(mean_by_dim[0]),
        mc_se=float(widths[:, 0].std(ddof=1) / np.sqrt(s)),
        widths_by_dim=tuple(float(w) for w in mean_by_dim),
    )


def squared_error(estimate: float, truth: float) -> float:
    return (estimate - truth) ** 2


def absolute_error(estimate: float, truth: float) -> float:
    return abs(estimate - truth)


@dataclass(frozen=True)
class AccuracyResult:
    kind: str
    value: float
    mc_se: float
    s: int
    seed: int
    estimator: str
    distance: str
    mode: str
    n_failed: int
    metadata: dict = field(default_factory=dict)


def estimator_accuracy(
    model: Model,
    theta_star,
    estimator: EstimatorSpec,
    distance: Callable[[float, float], float] = squared_error,
    s: int = 1000,
    seed: int = 0,
    target: SummaryStatistic | None = None,
    threads: int = 1,
) -> AccuracyResult:
    """Mean distance between estimate and truth over simulated datasets.

    theta_star None draws the truth from the prior each iteration (Bayes
    risk); otherwise the truth is fixed (frequentist risk at a point).
    """
    prior_mode = theta_star is None
    if not prior_mode:
        theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
    target = target or param_target(0)

    def one(i: int) -> float:
        rng = substream(seed, 0, i)
        theta = model.sample_prior(rng, 1)[0] if prior_mode else theta_star
        y = model.simulate_data(theta, rng)
        try:
            est = float(estimator.point(y))
        except Exception:
            return np.nan
        if not np.isfinite(est):
            return np.nan
        return float(distance(est, target.on_params(theta)))

    d = np.array(map_indexed(one, s, threads))
    failed = ~np.isfinite(d)
    good = d[~failed]
    if good.size == 0:
        raise RuntimeError("estimator failed on every simulated dataset")
    return AccuracyResult(
        kind="accuracy",
        value=float(good.mean()),
        mc_se=float(good.std(ddof=1) / np.sqrt(good.size)),
        s=int(s),
        seed=int(seed),
        estimator=estimator.name,
        distance=getattr(distance, "__name__", "distance"),
        mode="prior" if prior_mode else "fixed",
        n_failed=int(failed.sum()),
    )

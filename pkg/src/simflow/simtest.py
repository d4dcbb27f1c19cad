"""Simulation-based hypothesis tests.

The null distribution of a statistic is built by forward simulation at a
fixed parameter value; p-values are normalized ranks of the observed
statistic in that sample, with randomized tie handling and no +1
correction. Two-sided p-values double the smaller one-sided value (capped
at 1), an extension flagged in every report.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .errors import RetryError
from .models import Dataset, Model, SummaryStatistic
from .rng import as_generator, substream

__all__ = [
    "mean_stat",
    "mean_difference",
    "pooled_t",
    "variance_ratio",
    "sample_max",
    "lag1_autocorr",
    "mean_distance",
    "count_distance",
    "STATISTIC_REGISTRY",
    "DISTANCE_REGISTRY",
    "NullSamples",
    "simulate_null",
    "simulation_pvalue",
    "critical_value",
    "SimulationTest",
    "AnalyticZTest",
    "TestReport",
    "run_test",
]

_SIM_CHUNK = 16384
_RETRY_CAP = 5

SIDES = ("lower", "upper", "two_sided")


# ---------------------------------------------------------------------------
# Built-in statistics


def _group_masks(labels: np.ndarray | None, n: int):
    if labels is None:
        raise ValueError("this statistic needs two-group data (group labels)")
    groups = np.unique(labels)
    if groups.size != 2:
        raise ValueError("expected exactly two groups")
    return labels == groups[0], labels == groups[1]


def _series(y: Dataset) -> np.ndarray:
    return y.observations[:, 0]


mean_stat = SummaryStatistic(
    name="mean",
    arity="data",
    fn=lambda y: float(_series(y).mean()),
    batch_fn=lambda obs, labels: obs[:, :, 0].mean(axis=1),
)


def _mean_diff_fn(y: Dataset) -> float:
    g0, g1 = _group_masks(y.group_labels, y.n_obs)
    s = _series(y)
    return float(s[g0].mean() - s[g1].mean())


def _mean_diff_batch(obs: np.ndarray, labels):
    g0, g1 = _group_masks(labels, obs.shape[1])
    s = obs[:, :, 0]
    return s[:, g0].mean(axis=1) - s[:, g1].mean(axis=1)


mean_difference = SummaryStatistic(
    "mean-diff", "data", _mean_diff_fn, _mean_diff_batch
)


def _pooled_t_batch(obs: np.ndarray, labels):
    g0, g1 = _group_masks(labels, obs.shape[1])
    s = obs[:, :, 0]
    n0, n1 = int(g0.sum()), int(g1.sum())
    m0 = s[:, g0].mean(axis=1)
    m1 = s[:, g1].mean(axis=1)
    v0 = s[:, g0].var(axis=1, ddof=1)
    v1 = s[:, g1].var(axis=1, ddof=1)
    sp2 = ((n0 - 1) * v0 + (n1 - 1) * v1) / (n0 + n1 - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (m0 - m1) / np.sqrt(sp2 * (1.0 / n0 + 1.0 / n1))


pooled_t = SummaryStatistic(
    "pooled-t",
    "data",
    lambda y: float(_pooled_t_batch(y.observations[None], y.group_labels)[0]),
    _pooled_t_batch,
)


def _variance_ratio_batch(obs: np.ndarray, labels):
    g0, g1 = _group_masks(labels, obs.shape[1])
    s = obs[:, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return s[:, g0].var(axis=1, ddof=1) / s[:, g1].var(axis=1, ddof=1)


variance_ratio = SummaryStatistic(
    "variance-ratio",
    "data",
    lambda y: float(_variance_ratio_batch(y.observations[None], y.group_labels)[0]),
    _variance_ratio_batch,
)


sample_max = SummaryStatistic(
    name="max",
    arity="data",
    fn=lambda y: float(y.observations.max()),
    batch_fn=lambda obs, labels: obs.max(axis=(1, 2)),
)


def _lag1_batch(obs: np.ndarray, labels):
    s = obs[:, :, 0]
    centered = s - s.mean(axis=1, keepdims=True)
    num = (centered[:, :-1] * centered[:, 1:]).sum(axis=1)
    den = (centered**2).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


lag1_autocorr = SummaryStatistic(
    "lag1-autocorr",
    "data",
    lambda y: float(_lag1_batch(y.observations[None], y.group_labels)[0]),
    _lag1_batch,
)


mean_distance = SummaryStatistic(
    name="mean-distance",
    arity="data_pair",
    fn=lambda y_obs, y_sim: float(abs(_series(y_obs).mean() - _series(y_sim).mean())),
    batch_fn=lambda y_obs, obs, labels: np.abs(
        _series(y_obs).mean() - obs[:, :, 0].mean(axis=1)
    ),
)

count_distance = SummaryStatistic(
    name="count-distance",
    arity="data_pair",
    fn=lambda y_obs, y_sim: float(abs(_series(y_obs).sum() - _series(y_sim).sum())),
    batch_fn=lambda y_obs, obs, labels: np.abs(
        _series(y_obs).sum() - obs[:, :, 0].sum(axis=1)
    ),
)

STATISTIC_REGISTRY = {
    s.name: s
    for s in (mean_stat, mean_difference, pooled_t, variance_ratio, sample_max,
              lag1_autocorr)
}

DISTANCE_REGISTRY = {s.name: s for s in (mean_distance, count_distance)}


# ---------------------------------------------------------------------------
# Null simulation and p-values


@dataclass(frozen=True)
class NullSamples:
    values: np.ndarray
    n_resampled: int
    statistic: str
    s: int


def simulate_null(
    model: Model,
    theta0,
    statistic: SummaryStatistic,
    s: int,
    seed,
    n_obs: int | None = None,
) -> NullSamples:
    """Simulate s null draws of the statistic at theta0.

    Draws on which the statistic is undefined (non-finite) are resampled
    from a fresh derived stream, up to a retry cap. Work proceeds in
    fixed-size chunks with per-chunk streams, so results do not depend on
    how chunks are scheduled.
    """
    if statistic.arity != "data":
        raise ValueError("null simulation needs a data statistic")
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    n = int(n_obs or model.data_shape.n_obs)
    labels = model.group_labels(n)
    base = as_generator(seed)
    root = int(base.integers(0, 2**63 - 1))

    out = np.empty(s)
    n_resampled = 0
    n_chunks = -(-s // _SIM_CHUNK)
    for ci in range(n_chunks):
        lo = ci * _SIM_CHUNK
        hi = min(lo + _SIM_CHUNK, s)
        count = hi - lo
        thetas = np.broadcast_to(theta0, (count, theta0.size))
        rng = substream(root, 0, ci)
        obs = model.simulate_batch(thetas, rng, n_obs=n)
        vals = statistic.on_data_batch(obs, labels)
        bad = ~np.isfinite(vals)
        for attempt in range(1, _RETRY_CAP + 1):
            if not bad.any():
                break
            n_bad = int(bad.sum())
            n_resampled += n_bad
            retry_rng = substream(root, 0, ci, attempt)
            redo = model.simulate_batch(
                np.broadcast_to(theta0, (n_bad, theta0.size)), retry_rng, n_obs=n
            )
            vals[bad] = statistic.on_data_batch(redo, labels)
            bad = ~np.isfinite(vals)
        if bad.any():
            raise RetryError(
                f"statistic {statistic.name} undefined on {int(bad.sum())} draws "
                f"after {_RETRY_CAP} retries"
            )
        out[lo:hi] = vals
    if n_resampled:
        warnings.warn(
            f"{n_resampled} null draws resampled ({statistic.name} undefined)",
            RuntimeWarning,
            stacklevel=2,
        )
    return NullSamples(out, n_resampled, statistic.name, int(s))


def simulation_pvalue(observed: float, null_values: np.ndarray, side: str, rng) -> float:
    """Normalized rank of the observed statistic among null draws.

    Strict inequalities; draws tied with the observed value are split
    between the two sides by independent fair coin flips, so the lower and
    upper p-values sum to one exactly.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    null_values = np.asarray(null_values, dtype=float)
    s = null_values.size
    observed = float(observed)
    less = int((null_values < observed).sum())
    ties = int((null_values == observed).sum())
    to_lower = int(as_generator(rng).binomial(ties, 0.5)) if ties else 0
    p_lower = (less + to_lower) / s
    if side == "lower":
        return p_lower
    if side == "upper":
        return 1.0 - p_lower
    return min(1.0, 2.0 * min(p_lower, 1.0 - p_lower))


def critical_value(null_values: np.ndarray, alpha: float, side: str):
    """Empirical critical values (type-7 quantiles of the null sample)."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    v = np.asarray(null_values, dtype=float)
    if side == "lower":
        return float(np.quantile(v, alpha))
    if side == "upper":
        return float(np.quantile(v, 1.0 - alpha))
    return (float(np.quantile(v, alpha / 2.0)), float(np.quantile(v, 1.0 - alpha / 2.0)))


@dataclass(frozen=True)
class TestReport:
    statistic: str
    side: str
    observed: float
    pvalue: float
    s: int
    critical_values: dict
    null_mean: float
    null_sd: float
    null_quantiles: dict
    n_resampled: int
    metadata: dict = field(default_factory=dict)


class SimulationTest:
    """A reusable test: null sample simulated once, then applied to data."""

    def __init__(
        self,
        model: Model,
        theta0,
        statistic: SummaryStatistic,
        side: str = "two_sided",
        s: int = 10_000,
        seed: int = 0,
        n_obs: int | None = None,
    ):
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        self.model = model
        self.theta0 = np.asarray(theta0, dtype=float).reshape(-1)
        self.statistic = statistic
        self.side = side
        self.seed = int(seed)
        self.null = simulate_null(model, theta0, statistic, s, substream(seed, 0),
                                  n_obs=n_obs)

    def pvalue(self, y: Dataset, rng=None) -> float:
        observed = self.statistic.on_data(y)
        rng = as_generator(rng) if rng is not None else substream(self.seed, 1)
        return simulation_pvalue(observed, self.null.values, self.side, rng)

    def report(self, y: Dataset, alphas=(0.01, 0.05, 0.1), rng=None) -> TestReport:
        observed = self.statistic.on_data(y)
        rng = as_generator(rng) if rng is not None else substream(self.seed, 1)
        p = simulation_pvalue(observed, self.null.values, self.side, rng)
        crit = {alpha: critical_value(self.null.values, alpha, self.side)
                for alpha in alphas}
        qs = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
        return TestReport(
            statistic=self.statistic.name,
            side=self.side,
            observed=float(observed),
            pvalue=float(p),
            s=self.null.s,
            critical_values=crit,
            null_mean=float(self.null.values.mean()),
            null_sd=float(self.null.values.std(ddof=1)),
            null_quantiles={q: float(np.quantile(self.null.values, q)) for q in qs},
            n_resampled=self.null.n_resampled,
            metadata={"two_sided_rule": "2*min(one-sided), capped at 1 (extension)"},
        )


class AnalyticZTest:
    """One-sample z-test with known sigma; exact reference for power checks."""

    def __init__(self, theta0: float, sigma: float, side: str = "upper"):
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        self.theta0 = float(theta0)
        self.sigma = float(sigma)
        self.side = side

    def pvalue(self, y: Dataset, rng=None) -> float:
        n = y.n_obs
        z = (y.observations[:, 0].mean() - self.theta0) * np.sqrt(n) / self.sigma
        if self.side == "upper":
            return float(sstats.norm.sf(z))
        if self.side == "lower":
            return float(sstats.norm.cdf(z))
        return float(2.0 * sstats.norm.sf(abs(z)))


def run_test(
    model: Model,
    theta0,
    statistic: SummaryStatistic,
    y_obs: Dataset,
    side: str = "two_sided",
    s: int = 10_000,
    seed: int = 0,
    alphas=(0.01, 0.05, 0.1),
) -> TestReport:
    """Build the null at theta0 and test one observed dataset."""
    test = SimulationTest(model, theta0, statistic, side=side, s=s, seed=seed,
                          n_obs=y_obs.n_obs)
    return test.report(y_obs, alphas=alphas)

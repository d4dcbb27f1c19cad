"""Uniformity diagnostics for p-value sets.

Three checks are reported side by side: a chi-squared test over equal-width
bins, a Kolmogorov-Smirnov test, and containment of the ECDF difference
trajectory in a simultaneous confidence band. None of them is designated
the single arbiter; callers decide how to combine them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .rng import substream

__all__ = [
    "PValueSet",
    "UniformityVerdict",
    "EcdfBand",
    "ecdf_band",
    "band_contains",
    "uniformity_test",
    "rank_histogram",
]

# Dedicated derivation roots so diagnostics never share streams with pipelines.
_BAND_SEED = 7601
_KS_JITTER_SEED = 7602
_BAND_REPLICATES = 1000
_MAX_GRID = 100


@dataclass(frozen=True)
class PValueSet:
    """Simulation p-values, optionally with declared discrete granularity.

    granularity M means the values live on the grid {0, 1/M, ..., 1}.
    """

    values: np.ndarray
    granularity: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "values", vals)
        if vals.size == 0:
            raise ValueError("p-value set must be nonempty")
        if np.any((vals < 0.0) | (vals > 1.0)) or not np.all(np.isfinite(vals)):
            raise ValueError("p-values must lie in [0, 1]")
        if self.granularity is not None:
            m = int(self.granularity)
            if m < 1:
                raise ValueError("granularity must be a positive integer")
            ranks = vals * m
            if np.max(np.abs(ranks - np.round(ranks))) > 1e-6:
                raise ValueError("values are not on the declared granularity grid")
            object.__setattr__(self, "granularity", m)

    @property
    def size(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class EcdfBand:
    """Simultaneous confidence band for the ECDF difference trajectory."""

    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    count_lower: np.ndarray
    count_upper: np.ndarray
    coverage: float
    coverage_mc: float
    pointwise_level: float
    s: int
    granularity: int | None
    replicates: int
    seed: int


def _grid_for(s: int) -> np.ndarray:
    g = min(s, _MAX_GRID)
    return np.arange(1, g + 1) / g


def _null_cdf_at_grid(s: int, granularity: int | None) -> np.ndarray:
    g = min(s, _MAX_GRID)
    j = np.arange(1, g + 1)
    if granularity is None:
        return j / g
    m = int(granularity)
    # count of support points k/m with k*g <= j*m, done in exact integers
    return ((j * m) // g + 1) / (m + 1)


def _count_bounds(s: int, probs: np.ndarray, grid: np.ndarray, delta: float):
    lo = stats.binom.ppf(delta / 2.0, s, probs)
    up = stats.binom.ppf(1.0 - delta / 2.0, s, probs)
    # widen to always contain the null mean so the diff band brackets zero
    lo = np.minimum(lo, s * grid)
    up = np.maximum(up, s * grid)
    return lo, up


def _ecdf_counts(sorted_values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_values, grid, side="right")


@lru_cache(maxsize=64)
def _calibrated_band(
    s: int, granularity: int | None, coverage: float, seed: int, replicates: int
) -> EcdfBand:
    rng = substream(seed, s, 0 if granularity is None else int(granularity))
    grid = _grid_for(s)
    probs = _null_cdf_at_grid(s, granularity)

    if granularity is None:
        samples = rng.random((replicates, s))
    else:
        m = int(granularity)
        samples = rng.integers(0, m + 1, size=(replicates, s)) / m
    samples.sort(axis=1)
    counts = np.empty((replicates, grid.size), dtype=np.int64)
    for r in range(replicates):
        counts[r] = _ecdf_counts(samples[r], grid)

    def mc_coverage(delta: float) -> float:
        lo, up = _count_bounds(s, probs, grid, delta)
        inside = np.all((counts >= lo) & (counts <= up), axis=1)
        return float(inside.mean())

    # Bisect the pointwise miss probability; keep the loosest level whose
    # simultaneous coverage still meets the target.
    lo_d, hi_d = 1e-10, 1.0 - 1e-10
    best = lo_d
    for _ in range(60):
        mid = np.sqrt(lo_d * hi_d)
        if mc_coverage(mid) >= coverage:
            best = mid
            lo_d = mid
        else:
            hi_d = mid
    delta = best
    count_lo, count_up = _count_bounds(s, probs, grid, delta)
    return EcdfBand(
        grid=grid,
        lower=count_lo / s - grid,
        upper=count_up / s - grid,
        count_lower=count_lo,
        count_upper=count_up,
        coverage=float(coverage),
        coverage_mc=mc_coverage(delta),
        pointwise_level=1.0 - delta,
        s=int(s),
        granularity=granularity,
        replicates=int(replicates),
        seed=int(seed),
    )


def ecdf_band(
    s: int,
    granularity: int | None = None,
    coverage: float = 0.95,
    seed: int | None = None,
    replicates: int = _BAND_REPLICATES,
) -> EcdfBand:
    """Monte Carlo calibrated simultaneous band for s uniform draws.

    The pointwise binomial quantile level is tuned by bisection until the
    fraction of replicated null trajectories fully inside the band matches
    the requested coverage. Results are cached per configuration.
    """
    if s < 10:
        raise ValueError("band calibration needs at least 10 values")
    if not 0.5 <= coverage < 1.0:
        raise ValueError("coverage must lie in [0.5, 1)")
    if seed is None:
        seed = _BAND_SEED
    gran = None if granularity is None else int(granularity)
    return _calibrated_band(int(s), gran, float(coverage), int(seed), int(replicates))


def band_contains(band: EcdfBand, values: np.ndarray) -> tuple[bool, np.ndarray]:
    """Check a value set against the band; returns (inside, ecdf differences)."""
    vals = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if vals.size != band.s:
        raise ValueError(f"band was calibrated for s={band.s}, got {vals.size} values")
    counts = _ecdf_counts(vals, band.grid)
    inside = bool(np.all((counts >= band.count_lower) & (counts <= band.count_upper)))
    return inside, counts / band.s - band.grid


@dataclass(frozen=True)
class UniformityVerdict:
    chi2_stat: float
    chi2_pvalue: float
    ks_stat: float
    ks_pvalue: float
    ecdf_inside: bool
    bins: int
    band: EcdfBand


def rank_histogram(p: PValueSet | np.ndarray, bins: int = 10) -> np.ndarray:
    """Histogram counts over equal-width bins spanning [0, 1]."""
    values = p.values if isinstance(p, PValueSet) else np.asarray(p, dtype=float)
    if bins < 2:
        raise ValueError("bins must be at least 2")
    counts, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return counts


def _ks_values(p: PValueSet) -> np.ndarray:
    if p.granularity is None:
        return p.values
    # Discrete support: spread each rank atom over its own cell of width
    # 1/(M+1). A discrete-uniform rank set becomes exactly Uniform(0, 1),
    # the jitter half-width is 1/(2(M+1)).
    m = p.granularity
    ranks = np.round(p.values * m)
    rng = substream(_KS_JITTER_SEED, p.size, m)
    return (ranks + rng.random(p.size)) / (m + 1)


def uniformity_test(
    p: PValueSet | np.ndarray,
    bins: int = 10,
    band_coverage: float = 0.95,
    band_seed: int | None = None,
) -> UniformityVerdict:
    """Run all three uniformity checks on one p-value set.

    The chi-squared and band checks operate on the raw values; only the KS
    test sees the de-discretized values when granularity is declared.
    """
    if not isinstance(p, PValueSet):
        p = PValueSet(np.asarray(p, dtype=float))
    counts = rank_histogram(p, bins)
    expected = p.size / bins
    chi2_stat = float(((counts - expected) ** 2 / expected).sum())
    chi2_pvalue = float(stats.chi2.sf(chi2_stat, bins - 1))

    ks = stats.kstest(_ks_values(p), "uniform")

    band = ecdf_band(
        p.size, granularity=p.granularity, coverage=band_coverage, seed=band_seed
    )
    inside, _ = band_contains(band, p.values)

    return UniformityVerdict(
        chi2_stat=chi2_stat,
        chi2_pvalue=chi2_pvalue,
        ks_stat=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        ecdf_inside=inside,
        bins=int(bins),
        band=band,
    )

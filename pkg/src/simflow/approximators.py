"""Posterior approximators: exact conjugate draws, controlled perturbations
of them, a random-walk Metropolis sampler, and ABC rejection.

Every approximator maps (model, dataset) to a fixed number of parameter
draws. The perturbed variant exists to inject known miscalibration so the
calibration pipelines have negative controls with a known failure pattern.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, CapabilityError
from .models import Dataset, Model, ParamDraws, SummaryStatistic
from .rng import as_generator

__all__ = [
    "Approximator",
    "ExactConjugate",
    "PerturbedConjugate",
    "RandomWalkMetropolis",
    "AbcRejection",
    "RwmResult",
    "AbcResult",
    "rwm_sample",
    "abc_rejection",
    "acceptance_curve",
]


class Approximator:
    """Base class: a named posterior-draw producer with a default draw count."""

    name: str = "approximator"
    kind: str = "abstract"
    draw_count: int = 1000

    def approximate(
        self, model: Model, y: Dataset, rng, m: int | None = None
    ) -> ParamDraws:
        raise NotImplementedError

    def _m(self, m: int | None) -> int:
        m = int(self.draw_count if m is None else m)
        if m < 1:
            raise ValueError("draw count must be positive")
        return m

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r})"


def _attach_logs(model: Model, values: np.ndarray, y: Dataset):
    lp = ll = None
    caps = model.capabilities
    if caps.can_log_prior:
        lp = model.log_prior_batch(values)
    if caps.can_log_likelihood:
        ll = model.log_likelihood_batch(values, y)
    return lp, ll


class ExactConjugate(Approximator):
    """Independent draws from the model's closed-form posterior."""

    def __init__(self, draw_count: int = 1000):
        self.draw_count = int(draw_count)
        self.name = "exact"
        self.kind = "exact_conjugate"

    def approximate(self, model, y, rng, m=None) -> ParamDraws:
        m = self._m(m)
        rng = as_generator(rng)
        post = model.analytic_posterior(y)
        values = post.sample(rng, m).reshape(m, 1)
        lp, ll = _attach_logs(model, values, y)
        return ParamDraws(
            values,
            source="exact_conjugate",
            log_prior=lp,
            log_likelihood=ll,
            info={"posterior_family": post.family, "posterior_params": post.params},
        )


class PerturbedConjugate(Approximator):
    """Exact conjugate draws with a controlled affine distortion.

    mean_shift is the size of the simulated estimation bias in posterior-sd
    units; positive values make the approximator understate the target, the
    classic deficient-left-tail calibration pattern. sd_scale < 1 makes it
    overconfident, > 1 underconfident.
    """

    def __init__(self, mean_shift: float = 0.0, sd_scale: float = 1.0,
                 draw_count: int = 1000):
        if sd_scale <= 0:
            raise ValueError("sd_scale must be positive")
        self.mean_shift = float(mean_shift)
        self.sd_scale = float(sd_scale)
        self.draw_count = int(draw_count)
        self.name = "perturbed"
        self.kind = "perturbed_conjugate"

    def approximate(self, model, y, rng, m=None) -> ParamDraws:
        m = self._m(m)
        rng = as_generator(rng)
        post = model.analytic_posterior(y)
        exact = post.sample(rng, m)
        mu, sd = post.mean(), post.sd()
        values = (mu - self.mean_shift * sd + (exact - mu) * self.sd_scale).reshape(m, 1)
        return ParamDraws(
            values,
            source="perturbed_conjugate",
            info={
                "mean_shift": self.mean_shift,
                "sd_scale": self.sd_scale,
                "posterior_family": post.family,
                "posterior_params": post.params,
            },
        )


@dataclass(frozen=True)
class RwmResult:
    draws: ParamDraws
    acceptance_rate: float
    chains: int
    iterations: int
    warmup: int


def rwm_sample(
    model: Model,
    y: Dataset,
    rng,
    chains: int = 4,
    iterations: int = 2000,
    warmup: int = 500,
    step_sd: float = 0.5,
) -> RwmResult:
    """Random-walk Metropolis in the model's unconstrained parameterization.

    Chains start at independent prior draws. Proposals are isotropic Normal
    steps with scalar step_sd; the Jacobian of the reparameterization is part
    of the target, so bounded parameters mix without rejections at the edge.
    """
    caps = model.capabilities
    if not (caps.can_sample_prior and caps.can_log_prior and caps.can_log_likelihood):
        raise CapabilityError(
            f"{model.name} must expose prior sampling and both log densities"
        )
    if warmup >= iterations:
        raise ValueError("warmup must be smaller than iterations")
    if step_sd <= 0:
        raise ValueError("step_sd must be positive")
    rng = as_generator(rng)

    d = model.param_dim
    theta0 = model.sample_prior(rng, chains)
    z = np.stack([model.to_unconstrained(theta0[c]) for c in range(chains)])
    theta = model.from_unconstrained_batch(z)
    target = (
        model.log_prior_batch(theta)
        + model.log_likelihood_batch(theta, y)
        + model.log_jacobian_batch(z)
    )

    kept = np.empty((iterations - warmup, chains, d))
    accepted = 0
    for it in range(iterations):
        prop_z = z + step_sd * rng.standard_normal((chains, d))
        prop_theta = model.from_unconstrained_batch(prop_z)
        prop_target = (
            model.log_prior_batch(prop_theta)
            + model.log_likelihood_batch(prop_theta, y)
            + model.log_jacobian_batch(prop_z)
        )
        log_u = np.log(rng.random(chains))
        accept = log_u < (prop_target - target)
        z[accept] = prop_z[accept]
        theta[accept] = prop_theta[accept]
        target[accept] = prop_target[accept]
        accepted += int(accept.sum())
        if it >= warmup:
            kept[it - warmup] = theta

    rate = accepted / (iterations * chains)
    if rate > 0.95:
        warnings.warn(
            f"acceptance rate {rate:.3f}; step_sd is likely too small and the "
            "chain barely moves",
            RuntimeWarning,
            stacklevel=2,
        )
    values = kept.reshape(-1, d)
    lp = model.log_prior_batch(values)
    ll = model.log_likelihood_batch(values, y)
    draws = ParamDraws(
        values,
        source="random_walk_metropolis",
        log_prior=lp,
        log_likelihood=ll,
        info={"acceptance_rate": rate, "chains": chains, "iterations": iterations,
              "warmup": warmup, "step_sd": step_sd},
    )
    return RwmResult(draws, rate, chains, iterations, warmup)


class RandomWalkMetropolis(Approximator):
    def __init__(self, chains: int = 4, warmup: int = 500, step_sd: float = 0.5,
                 draw_count: int = 1000):
        self.chains = int(chains)
        self.warmup = int(warmup)
        self.step_sd = float(step_sd)
        self.draw_count = int(draw_count)
        self.name = "rwm"
        self.kind = "random_walk_metropolis"

    def approximate(self, model, y, rng, m=None) -> ParamDraws:
        m = self._m(m)
        per_chain = -(-m // self.chains)
        result = rwm_sample(
            model,
            y,
            rng,
            chains=self.chains,
            iterations=self.warmup + per_chain,
            warmup=self.warmup,
            step_sd=self.step_sd,
        )
        full = result.draws
        return ParamDraws(
            full.values[:m],
            source=full.source,
            log_prior=None if full.log_prior is None else full.log_prior[:m],
            log_likelihood=None
            if full.log_likelihood is None
            else full.log_likelihood[:m],
            info=full.info,
        )


@dataclass(frozen=True)
class AbcResult:
    draws: ParamDraws
    acceptance_rate: float
    proposals_used: int
    threshold: float


def abc_rejection(
    model: Model,
    y_obs: Dataset,
    distance: SummaryStatistic,
    rng,
    m: int,
    tolerance: float | None = None,
    acceptance_quantile: float | None = None,
    max_proposals: int = 100_000,
    batch_size: int = 10_000,
) -> AbcResult:
    """ABC rejection sampling against a data-pair distance.

    Exactly one of tolerance / acceptance_quantile selects the mode. Fixed
    tolerance proposes in batches until m draws satisfy distance <= tolerance
    or the proposal budget runs out. Quantile mode draws one shared pool of
    max_proposals and keeps the best fraction; when that exceeds m, a seeded
    subsample without replacement of size m is returned.

    Only prior sampling and the forward simulator are used.
    """
    if (tolerance is None) == (acceptance_quantile is None):
        raise ValueError("set exactly one of tolerance or acceptance_quantile")
    if distance.arity != "data_pair":
        raise ValueError("ABC distance must be a data_pair statistic")
    if m < 1:
        raise ValueError("m must be positive")
    rng = as_generator(rng)
    labels = model.group_labels(y_obs.n_obs)

    def propose(count: int):
        thetas = model.sample_prior(rng, count)
        sims = model.simulate_batch(thetas, rng, n_obs=y_obs.n_obs)
        dists = distance.on_pair_batch(y_obs, sims, labels)
        return thetas, dists

    if tolerance is not None:
        eps = float(tolerance)
        accepted = []
        proposed = 0
        n_accepted = 0
        while n_accepted < m and proposed < max_proposals:
            count = min(batch_size, max_proposals - proposed)
            thetas, dists = propose(count)
            proposed += count
            hit = thetas[dists <= eps]
            if hit.size:
                accepted.append(hit)
                n_accepted += hit.shape[0]
        rate = n_accepted / proposed if proposed else 0.0
        if n_accepted < m:
            raise BudgetError(
                f"ABC budget exhausted: {n_accepted}/{m} acceptances after "
                f"{proposed} proposals (acceptance rate {rate:.3g})",
                acceptance_rate=rate,
                n_accepted=n_accepted,
                proposals_used=proposed,
                mode="tolerance",
                tolerance=eps,
            )
        values = np.concatenate(accepted, axis=0)[:m]
        info = {"mode": "tolerance", "tolerance": eps, "acceptance_rate": rate,
                "proposals_used": proposed}
        draws = ParamDraws(values, source="abc_rejection", info=info)
        return AbcResult(draws, rate, proposed, eps)

    q = float(acceptance_quantile)
    if not 0.0 < q <= 1.0:
        raise ValueError("acceptance_quantile must lie in (0, 1]")
    thetas, dists = propose(max_proposals)
    n_keep = max(1, int(round(q * max_proposals)))
    if n_keep < m:
        raise BudgetError(
            f"quantile mode keeps {n_keep} draws but {m} were requested; "
            "raise max_proposals or the quantile",
            acceptance_rate=n_keep / max_proposals,
            n_accepted=n_keep,
            proposals_used=max_proposals,
            mode="quantile",
            acceptance_quantile=q,
        )
    order = np.argsort(dists, kind="stable")[:n_keep]
    threshold = float(dists[order[-1]])
    if n_keep > m:
        pick = rng.choice(n_keep, size=m, replace=False)
        order = order[np.sort(pick)]
    rate = n_keep / max_proposals
    info = {"mode": "quantile", "acceptance_quantile": q, "threshold": threshold,
            "acceptance_rate": rate, "proposals_used": max_proposals}
    draws = ParamDraws(thetas[order], source="abc_rejection", info=info)
    return AbcResult(draws, rate, max_proposals, threshold)


def acceptance_curve(
    model: Model,
    y_obs: Dataset,
    distance: SummaryStatistic,
    epsilons: np.ndarray,
    pool_size: int,
    rng,
) -> np.ndarray:
    """Acceptance rate per tolerance over one shared proposal pool."""
    rng = as_generator(rng)
    thetas = model.sample_prior(rng, pool_size)
    sims = model.simulate_batch(thetas, rng, n_obs=y_obs.n_obs)
    dists = distance.on_pair_batch(y_obs, sims, model.group_labels(y_obs.n_obs))
    eps = np.asarray(epsilons, dtype=float)
    return (dists[None, :] <= eps[:, None]).mean(axis=1)


class AbcRejection(Approximator):
    """Approximator wrapper around abc_rejection."""

    def __init__(
        self,
        distance: SummaryStatistic,
        tolerance: float | None = None,
        acceptance_quantile: float | None = None,
        max_proposals: int = 100_000,
        batch_size: int = 10_000,
        draw_count: int = 1000,
    ):
        self.distance = distance
        self.tolerance = tolerance
        self.acceptance_quantile = acceptance_quantile
        self.max_proposals = int(max_proposals)
        self.batch_size = int(batch_size)
        self.draw_count = int(draw_count)
        self.name = "abc"
        self.kind = "abc_rejection"

    def approximate(self, model, y, rng, m=None) -> ParamDraws:
        result = abc_rejection(
            model,
            y,
            self.distance,
            rng,
            m=self._m(m),
            tolerance=self.tolerance,
            acceptance_quantile=self.acceptance_quantile,
            max_proposals=self.max_proposals,
            batch_size=self.batch_size,
        )
        return result.draws

"""Batch command line front-end.

Every pipeline is reachable as a subcommand driven by an INI-style config
file, command line flags, or both, with flags taking precedence. Runs write
a JSON report (and optional CSV / SVG files) into the output directory.

Seed resolution order: --seed flag, then [pipeline] seed in the config,
then the SIMFLOW_SEED environment variable, then 0.

Exit codes: 0 success, 2 configuration or validation error (nothing was
simulated), 3 runtime or budget error (a partial report is still written).
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import figures, report
from .approximators import (
    AbcRejection,
    ExactConjugate,
    PerturbedConjugate,
    RandomWalkMetropolis,
    abc_rejection,
)
from .calibration import (
    EstimatorSpec,
    SbcConfig,
    absolute_error,
    estimator_accuracy,
    posterior_mean_estimator,
    power_analysis,
    run_frequentist_calibration,
    run_sbc,
    sample_mean_estimator,
    squared_error,
)
from .compare import (
    ModelEntry,
    marginal_likelihood_mc,
    posterior_model_probs,
    power_scale_weights,
    sensitivity_sweep,
    weighted_mean,
    weighted_quantile,
)
from .diagnostics import band_contains, rank_histogram
from .elicitation import beta_binomial_problem, elicit_prior
from .errors import BudgetError, CapabilityError, DomainError, RetryError
from .models import Dataset, make_model, param_target
from .predictive import (
    frequentist_predictive_check,
    prior_pushforward_check,
    run_posterior_sbc,
    run_ppc,
)
from .simtest import (
    SIDES,
    DISTANCE_REGISTRY,
    STATISTIC_REGISTRY,
    AnalyticZTest,
    SimulationTest,
)

__all__ = ["main", "ConfigError"]

SCHEMA_VERSION = "1.0"


class ConfigError(ValueError):
    """Bad or incomplete run configuration; nothing was simulated."""


# ---------------------------------------------------------------------------
# Config plumbing


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            cfg.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
    return cfg


def _section(cfg: configparser.ConfigParser, name: str) -> dict:
    if not cfg.has_section(name):
        return {}
    return {k: _parse_scalar(v) for k, v in cfg.items(name)}


def _parse_kv(pairs: str | None) -> dict:
    out = {}
    if not pairs:
        return out
    for item in pairs.split(","):
        if not item.strip():
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        out[key.strip()] = _parse_scalar(val)
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _pick(flag_value, section: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return section.get(key, default)


def _resolve_seed(args, pipeline: dict) -> tuple[int, str]:
    if args.seed is not None:
        return int(args.seed), "flag"
    if "seed" in pipeline:
        return int(pipeline["seed"]), "config"
    env = os.environ.get("SIMFLOW_SEED")
    if env is not None:
        try:
            return int(env), "env"
        except ValueError:
            raise ConfigError(f"SIMFLOW_SEED must be an integer, got {env!r}") from None
    return 0, "default"


def _build_model(args, cfg):
    sect = _section(cfg, "model")
    name = getattr(args, "model", None) or sect.pop("name", None)
    if name is None:
        raise ConfigError("no model selected; pass --model or set [model] name")
    sect.update(_parse_kv(getattr(args, "model_params", None)))
    try:
        model = make_model(name, **sect)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return model, {"name": name, **sect}


def _build_approximator(args, cfg):
    sect = _section(cfg, "approximator")
    name = getattr(args, "approximator", None) or sect.pop("name", "exact")
    sect.update(_parse_kv(getattr(args, "approximator_params", None)))
    echo = {"name": name, **sect}
    try:
        if name == "exact":
            return ExactConjugate(**sect), echo
        if name == "perturbed":
            return PerturbedConjugate(**sect), echo
        if name == "rwm":
            return RandomWalkMetropolis(**sect), echo
        if name == "abc":
            dist = _distance(sect.pop("distance", "mean-distance"))
            return AbcRejection(distance=dist, **sect), echo
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(
        f"unknown approximator {name!r}; known: abc, exact, perturbed, rwm"
    )


def _statistic(name: str):
    if name not in STATISTIC_REGISTRY:
        known = ", ".join(sorted(STATISTIC_REGISTRY))
        raise ConfigError(f"unknown statistic {name!r}; known: {known}")
    return STATISTIC_REGISTRY[name]


def _distance(name: str):
    if name not in DISTANCE_REGISTRY:
        known = ", ".join(sorted(DISTANCE_REGISTRY))
        raise ConfigError(f"unknown distance {name!r}; known: {known}")
    return DISTANCE_REGISTRY[name]


def _estimator(name: str, model) -> EstimatorSpec:
    if name == "sample-mean":
        return sample_mean_estimator
    if name == "posterior-mean":
        return posterior_mean_estimator(model)
    raise ConfigError(
        f"unknown estimator {name!r}; known: posterior-mean, sample-mean"
    )


def _load_data(args) -> Dataset:
    path = getattr(args, "data", None)
    if path is None:
        raise ConfigError("this subcommand needs --data pointing at a CSV file")
    if not Path(path).is_file():
        raise ConfigError(f"data file not found: {path}")
    try:
        return Dataset.from_csv(path)
    except Exception as exc:
        raise ConfigError(f"cannot read dataset from {path}: {exc}") from exc


def _targets(args, model):
    text = getattr(args, "targets", None)
    if not text:
        return None
    out = []
    for part in text.split(","):
        try:
            idx = int(part)
        except ValueError:
            raise ConfigError(f"targets must be parameter indices, got {part!r}") from None
        if not 0 <= idx < model.param_dim:
            raise ConfigError(f"target index {idx} outside 0..{model.param_dim - 1}")
        out.append(param_target(idx))
    return tuple(out)


# ---------------------------------------------------------------------------
# Payload helpers


def _histogram_block(values, bins: int = 30) -> dict:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return {"edges": edges, "counts": counts}


def _pvalue_block(pset, verdict) -> dict:
    inside, diff = band_contains(verdict.band, pset.values)
    band = verdict.band
    return {
        "pvalues": pset.values,
        "granularity": pset.granularity,
        "chi2_stat": verdict.chi2_stat,
        "chi2_pvalue": verdict.chi2_pvalue,
        "ks_stat": verdict.ks_stat,
        "ks_pvalue": verdict.ks_pvalue,
        "ecdf_inside": verdict.ecdf_inside,
        "bins": verdict.bins,
        "histogram": rank_histogram(pset, verdict.bins),
        "ecdf_diff": diff,
        "band": {
            "grid": band.grid,
            "lower": band.lower,
            "upper": band.upper,
            "coverage": band.coverage,
            "coverage_mc": band.coverage_mc,
            "pointwise_level": band.pointwise_level,
        },
    }


def _sbc_payload(result) -> dict:
    return {
        "kind": result.kind,
        "model": result.model,
        "approximator": result.approximator,
        "s": result.s,
        "m": result.m,
        "seed": result.seed,
        "targets": {
            name: _pvalue_block(result.pvalues[name], result.verdicts[name])
            for name in result.target_names
        },
        "metadata": result.metadata,
    }


def _sbc_csv(result) -> dict:
    rows = []
    for name in result.target_names:
        for i, p in enumerate(result.pvalues[name].values):
            rows.append([name, i, float(p)])
    return {"pvalues.csv": (["target", "index", "pvalue"], rows)}


def _vector_csv(filename: str, values) -> dict:
    rows = [[i, float(v)] for i, v in enumerate(np.asarray(values).reshape(-1))]
    return {filename: (["index", "value"], rows)}


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns (results payload, config echo, csv tables)


def _cmd_sbc(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    approx, approx_echo = _build_approximator(args, cfg)
    pipe = _section(cfg, "pipeline")
    run_cfg = SbcConfig(
        s=int(_pick(args.s, pipe, "s", 1000)),
        m=int(_pick(args.m, pipe, "m", 99)),
        seed=seed,
        targets=_targets(args, model),
        bins=int(_pick(args.bins, pipe, "bins", 10)),
        band_coverage=float(_pick(args.band_coverage, pipe, "band_coverage", 0.95)),
        threads=threads,
    )
    if args.command == "post-sbc":
        result = run_posterior_sbc(model, approx, _load_data(args), run_cfg)
    else:
        result = run_sbc(model, approx, run_cfg)
    echo = {"model": model_echo, "approximator": approx_echo,
            "pipeline": {"s": run_cfg.s, "m": run_cfg.m, "bins": run_cfg.bins,
                         "band_coverage": run_cfg.band_coverage}}
    return _sbc_payload(result), echo, _sbc_csv(result)


def _parse_sampling(text: str):
    from scipy import stats

    name, _, rest = text.partition(":")
    params = _floats(rest) if rest else []
    if name == "normal":
        return stats.norm(*(params or [0.0, 1.0]))
    if name == "t":
        if not params:
            raise ConfigError("t sampling distribution needs df, e.g. t:9,0,1")
        return stats.t(*params)
    raise ConfigError(f"unknown sampling distribution {text!r}; use normal:loc,scale or t:df,loc,scale")


def _cmd_freq_calibrate(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    if args.theta_star is None:
        raise ConfigError("freq-calibrate needs --theta-star")
    if args.sampling is None:
        raise ConfigError("freq-calibrate needs --sampling, e.g. normal:0.0,0.316")
    estimator = _estimator(args.estimator, model)
    result = run_frequentist_calibration(
        model,
        _floats(args.theta_star),
        estimator,
        _parse_sampling(args.sampling),
        s=int(_pick(args.s, pipe, "s", 1000)),
        seed=seed,
        alphas=tuple(_floats(args.alphas)),
        bins=int(_pick(args.bins, pipe, "bins", 10)),
        threads=threads,
    )
    payload = {
        "kind": result.kind,
        "model": result.model,
        "estimator": result.estimator,
        "s": result.s,
        "seed": result.seed,
        "interval_coverage": {str(k): v for k, v in result.interval_coverage.items()},
        "n_failed": result.n_failed,
        "target": _pvalue_block(result.pvalues, result.verdict),
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": result.s, "estimator": estimator.name,
                         "theta_star": _floats(args.theta_star),
                         "sampling": args.sampling, "alphas": _floats(args.alphas)}}
    return payload, echo, _vector_csv("pvalues.csv", result.pvalues.values)


def _build_test(args, model, seed):
    if args.test == "z":
        if args.sigma is None:
            raise ConfigError("the z test needs --sigma (known sdev of one observation)")
        return AnalyticZTest(float(args.theta0_scalar), float(args.sigma),
                             side=args.side)
    if args.test == "sim":
        if args.theta0 is None:
            raise ConfigError("the simulation test needs --theta0")
        return SimulationTest(
            model,
            _floats(args.theta0),
            _statistic(args.statistic),
            side=args.side,
            s=int(args.null_s),
            seed=seed + 1,
        )
    raise ConfigError(f"unknown test {args.test!r}; known: sim, z")


def _cmd_power(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    if args.test == "z":
        args.theta0_scalar = _floats(args.theta0)[0] if args.theta0 else 0.0
    test = _build_test(args, model, seed)
    theta_star = None if args.theta_star in (None, "prior") else _floats(args.theta_star)
    result = power_analysis(
        model,
        theta_star,
        test,
        alpha=float(_pick(args.alpha, pipe, "alpha", 0.05)),
        s=int(_pick(args.s, pipe, "s", 1000)),
        seed=seed,
        threads=threads,
    )
    payload = {
        "kind": result.kind,
        "model": model.name,
        "power": result.power,
        "mc_se": result.mc_se,
        "alpha": result.alpha,
        "s": result.s,
        "seed": result.seed,
        "n_rejections": result.n_rejections,
        "mode": result.mode,
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": result.s, "alpha": result.alpha, "test": args.test,
                         "side": args.side,
                         "theta_star": args.theta_star or "prior"}}
    return payload, echo, {}


def _cmd_accuracy(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    estimator = _estimator(args.estimator, model)
    distance = {"squared": squared_error, "absolute": absolute_error}.get(args.distance)
    if distance is None:
        raise ConfigError(f"unknown distance {args.distance!r}; known: absolute, squared")
    theta_star = None if args.theta_star in (None, "prior") else _floats(args.theta_star)
    result = estimator_accuracy(
        model,
        theta_star,
        estimator,
        distance=distance,
        s=int(_pick(args.s, pipe, "s", 1000)),
        seed=seed,
        threads=threads,
    )
    payload = {
        "kind": result.kind,
        "model": model.name,
        "value": result.value,
        "mc_se": result.mc_se,
        "s": result.s,
        "seed": result.seed,
        "estimator": result.estimator,
        "distance": result.distance,
        "mode": result.mode,
        "n_failed": result.n_failed,
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": result.s, "estimator": estimator.name,
                         "distance": args.distance,
                         "theta_star": args.theta_star or "prior"}}
    return payload, echo, {}


def _cmd_test(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    y = _load_data(args)
    if args.theta0 is None:
        raise ConfigError("test needs --theta0 (null parameter value)")
    statistic = _statistic(args.statistic)
    test = SimulationTest(
        model,
        _floats(args.theta0),
        statistic,
        side=args.side,
        s=int(_pick(args.s, pipe, "s", 10_000)),
        seed=seed,
        n_obs=y.n_obs,
    )
    result = test.report(y)
    payload = {
        "kind": "test",
        "model": model.name,
        "statistic": result.statistic,
        "side": result.side,
        "observed": result.observed,
        "pvalue": result.pvalue,
        "s": result.s,
        "critical_values": {str(k): v for k, v in result.critical_values.items()},
        "null_mean": result.null_mean,
        "null_sd": result.null_sd,
        "null_quantiles": {str(k): v for k, v in result.null_quantiles.items()},
        "n_resampled": result.n_resampled,
        "null_histogram": _histogram_block(test.null.values),
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": result.s, "statistic": statistic.name,
                         "side": args.side, "theta0": _floats(args.theta0)}}
    return payload, echo, _vector_csv("null_samples.csv", test.null.values)


def _cmd_ppc(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    y = _load_data(args)
    statistic = _statistic(args.statistic)
    s = int(_pick(args.s, pipe, "s", 1000))
    if args.theta_hat is not None:
        result = frequentist_predictive_check(
            model, _floats(args.theta_hat), statistic, y, s, seed=seed
        )
        approx_echo = None
    else:
        approx, approx_echo = _build_approximator(args, cfg)
        result = run_ppc(model, approx, y, statistic, s, seed=seed)
    payload = {
        "kind": result.kind,
        "model": model.name,
        "statistic": result.statistic,
        "observed_stat": result.observed_stat,
        "ppp": result.ppp,
        "s": result.s,
        "seed": result.seed,
        "replication_histogram": _histogram_block(result.replication_stats),
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": s, "statistic": statistic.name}}
    if approx_echo is not None:
        echo["approximator"] = approx_echo
    return payload, echo, _vector_csv("replication_stats.csv", result.replication_stats)


def _cmd_prior_check(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    if args.region is None:
        raise ConfigError("prior-check needs --region lo,hi")
    region = _floats(args.region)
    if len(region) != 2:
        raise ConfigError("--region must be two numbers lo,hi")
    result = prior_pushforward_check(
        model,
        _statistic(args.statistic),
        (region[0], region[1]),
        s=int(_pick(args.s, pipe, "s", 1000)),
        seed=seed,
    )
    payload = {
        "kind": result.kind,
        "model": model.name,
        "statistic": result.statistic,
        "fraction_in_region": result.fraction_in_region,
        "region": list(result.region),
        "s": result.s,
        "seed": result.seed,
        "histogram": _histogram_block(result.values),
        "metadata": result.metadata,
    }
    echo = {"model": model_echo,
            "pipeline": {"s": result.s, "statistic": result.statistic,
                         "region": list(result.region)}}
    return payload, echo, _vector_csv("statistic_values.csv", result.values)


def _read_expert_csv(path: str) -> list[float]:
    import csv as _csv

    if not Path(path).is_file():
        raise ConfigError(f"expert stats file not found: {path}")
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["target", "probe", "value"]:
            raise ConfigError("expert stats CSV needs header: target,probe,value")
        rows = [row for row in reader if row]
    # target-major, probe order as given per target
    values = [float(row[2]) for row in rows]
    if not values:
        raise ConfigError("expert stats CSV has no rows")
    return values


def _cmd_elicit(args, cfg, seed, threads):
    pipe = _section(cfg, "pipeline")
    if args.expert_csv is not None:
        expert = _read_expert_csv(args.expert_csv)
    elif args.expert_stats is not None:
        expert = _floats(args.expert_stats)
    else:
        raise ConfigError("elicit needs --expert-csv or --expert-stats")
    n_trials = int(_pick(args.n_trials, pipe, "n_trials", 20))
    sims = int(_pick(args.sims, pipe, "sims_per_eval", 10_000))
    try:
        problem = beta_binomial_problem(expert, n_trials=n_trials, sims_per_eval=sims)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lam0 = _floats(args.lam0)
    result = elicit_prior(
        problem,
        lam0,
        seed=seed,
        tolerance=float(args.tolerance),
        max_iter=int(args.max_iter),
    )
    payload = {
        "kind": "elicitation",
        "family": "beta",
        "lam": result.lam,
        "loss": result.loss,
        "converged": result.converged,
        "n_iterations": result.n_iterations,
        "n_evaluations": result.n_evaluations,
        "loss_trace": list(result.loss_trace),
        "n_expert_stats": result.n_expert_stats,
        "lam_dim": result.lam_dim,
        "seed": result.seed,
        "metadata": result.metadata,
    }
    echo = {"pipeline": {"n_trials": n_trials, "sims_per_eval": sims,
                         "lam0": lam0, "tolerance": float(args.tolerance),
                         "max_iter": int(args.max_iter)}}
    trace = {"loss_trace.csv": (["improvement", "loss"],
                                [[i, v] for i, v in enumerate(result.loss_trace)])}
    return payload, echo, trace


def _cmd_abc(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    pipe = _section(cfg, "pipeline")
    y = _load_data(args)
    if (args.tolerance is None) == (args.quantile is None):
        raise ConfigError("abc needs exactly one of --tolerance or --quantile")
    from .rng import substream

    result = abc_rejection(
        model,
        y,
        _distance(args.distance),
        substream(seed, 0),
        m=int(_pick(args.m, pipe, "m", 1000)),
        tolerance=args.tolerance,
        acceptance_quantile=args.quantile,
        max_proposals=int(_pick(args.max_proposals, pipe, "max_proposals", 100_000)),
    )
    values = result.draws.values
    payload = {
        "kind": "abc",
        "model": model.name,
        "distance": args.distance,
        "m": int(values.shape[0]),
        "acceptance_rate": result.acceptance_rate,
        "proposals_used": result.proposals_used,
        "threshold": result.threshold,
        "posterior_mean": values.mean(axis=0),
        "posterior_sd": values.std(axis=0, ddof=1) if values.shape[0] > 1 else
            np.zeros(values.shape[1]),
        "seed": seed,
        "metadata": result.draws.info,
    }
    echo = {"model": model_echo,
            "pipeline": {"m": int(values.shape[0]), "distance": args.distance,
                         "tolerance": args.tolerance, "quantile": args.quantile,
                         "max_proposals": int(_pick(args.max_proposals, pipe,
                                                    "max_proposals", 100_000))}}
    header = ["index"] + [f"theta{j}" for j in range(values.shape[1])]
    rows = [[i] + [float(v) for v in row] for i, row in enumerate(values)]
    return payload, echo, {"draws.csv": (header, rows)}


def _compare_entries(args, cfg) -> list[ModelEntry]:
    comp = _section(cfg, "compare")
    names = [n.strip() for n in str(comp.get("models", "")).split(",") if n.strip()]
    if not names:
        raise ConfigError(
            "compare needs a [compare] section listing models = A, B with "
            "one [model:NAME] section per candidate"
        )
    entries = []
    for label in names:
        sect = _section(cfg, f"model:{label}")
        if not sect:
            raise ConfigError(f"missing [model:{label}] section")
        name = sect.pop("name", None)
        if name is None:
            raise ConfigError(f"[model:{label}] needs a name key")
        prior_prob = float(sect.pop("prior_prob", 1.0 / len(names)))
        try:
            model = make_model(name, **sect)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"[model:{label}]: {exc}") from exc
        entries.append(ModelEntry(name=label, model=model, prior_prob=prior_prob))
    return entries


def _cmd_compare(args, cfg, seed, threads):
    pipe = _section(cfg, "pipeline")
    y = _load_data(args)
    s = int(_pick(args.s, pipe, "s", 100_000))
    if cfg.has_section("compare"):
        entries = _compare_entries(args, cfg)
        comparison = posterior_model_probs(entries, y, s=s, seed=seed)
        payload = {
            "kind": "model-comparison",
            "s": comparison.s,
            "seed": comparison.seed,
            "models": {
                name: {
                    "log_evidence": ev.log_evidence,
                    "mc_se_log": ev.mc_se_log,
                    "all_zero": ev.all_zero,
                    "posterior_prob": comparison.posterior_probs[name],
                }
                for name, ev in comparison.evidences.items()
            },
            "log_bayes_factors": comparison.log_bayes_factors,
            "metadata": {},
        }
        echo = {"pipeline": {"s": s, "models": list(comparison.entries)}}
        rows = [[name, ev.log_evidence, ev.mc_se_log,
                 comparison.posterior_probs[name]]
                for name, ev in comparison.evidences.items()]
        csvs = {"evidence.csv":
                (["model", "log_evidence", "mc_se_log", "posterior_prob"], rows)}
        return payload, echo, csvs
    model, model_echo = _build_model(args, cfg)
    ev = marginal_likelihood_mc(model, y, s=s, seed=seed)
    payload = {
        "kind": "evidence",
        "model": ev.model,
        "log_evidence": ev.log_evidence,
        "mc_se_log": ev.mc_se_log,
        "s": ev.s,
        "seed": ev.seed,
        "all_zero": ev.all_zero,
        "metadata": ev.metadata,
    }
    echo = {"model": model_echo, "pipeline": {"s": s}}
    return payload, echo, {}


def _cmd_sensitivity(args, cfg, seed, threads):
    if args.mode == "sweep":
        return _sensitivity_sweep(args, cfg, seed, threads)
    return _power_scale(args, cfg, seed, threads)


def _power_scale(args, cfg, seed, threads):
    model, model_echo = _build_model(args, cfg)
    approx, approx_echo = _build_approximator(args, cfg)
    pipe = _section(cfg, "pipeline")
    y = _load_data(args)
    m = int(_pick(args.m, pipe, "m", 2000))
    from .rng import substream

    draws = approx.approximate(model, y, substream(seed, 0), m=m)
    alphas = _floats(args.alphas)
    qs = (0.05, 0.5, 0.95)
    rows = []
    results = {"prior": [], "likelihood": []}
    for axis in ("prior", "likelihood"):
        for alpha in alphas:
            kw = {"alpha_prior": alpha} if axis == "prior" else {"alpha_lik": alpha}
            wd = power_scale_weights(draws, **kw)
            entry = {
                "alpha": alpha,
                "ess": wd.ess,
                "mean": [weighted_mean(wd, d) for d in range(draws.values.shape[1])],
                "quantiles": {str(q): float(v)
                              for q, v in zip(qs, weighted_quantile(wd, qs))},
            }
            results[axis].append(entry)
            rows.append([axis, alpha, wd.ess, entry["mean"][0],
                         entry["quantiles"]["0.05"], entry["quantiles"]["0.5"],
                         entry["quantiles"]["0.95"]])
    payload = {
        "kind": "power-scaling",
        "model": model.name,
        "approximator": approx.name,
        "m": m,
        "seed": seed,
        "axes": results,
        "metadata": {"alphas": alphas},
    }
    echo = {"model": model_echo, "approximator": approx_echo,
            "pipeline": {"m": m, "alphas": alphas, "mode": "power-scale"}}
    csvs = {"powerscale.csv": (["axis", "alpha", "ess", "mean0",
                                "q05", "q50", "q95"], rows)}
    return payload, echo, csvs


def _sweep_grid(sweep: dict) -> tuple[list[dict], dict]:
    base = {}
    vary = {}
    for key, value in sweep.items():
        if key.startswith("vary_"):
            vary[key[len("vary_"):]] = [_parse_scalar(v)
                                        for v in str(value).split("|")]
        elif key != "pipeline":
            base[key] = value
    if not vary:
        raise ConfigError("[sweep] needs at least one vary_<param> = v1|v2|... key")
    keys = sorted(vary)
    grid = []
    for combo in itertools.product(*(vary[k] for k in keys)):
        cell = dict(base)
        cell.update(dict(zip(keys, combo)))
        grid.append(cell)
    return grid, vary


def _sensitivity_sweep(args, cfg, seed, threads):
    sweep = _section(cfg, "sweep")
    if not sweep:
        raise ConfigError("sweep mode needs a [sweep] section in the config")
    pipeline_name = sweep.get("pipeline")
    model, model_echo = _build_model(args, cfg)
    approx, approx_echo = _build_approximator(args, cfg)
    grid, vary = _sweep_grid(sweep)

    def cell_model(config: dict):
        # grid keys prefixed model_ override the base model hyperparameters
        overrides = {k[len("model_"):]: v for k, v in config.items()
                     if k.startswith("model_")}
        if not overrides:
            return model
        params = {k: v for k, v in model_echo.items() if k != "name"}
        params.update(overrides)
        return make_model(model_echo["name"], **params)

    if pipeline_name == "sbc":
        def cell(config: dict, cell_seed: int) -> dict:
            run_cfg = SbcConfig(
                s=int(config.get("s", 200)),
                m=int(config.get("m", 99)),
                seed=cell_seed,
                threads=threads,
            )
            r = run_sbc(cell_model(config), approx, run_cfg)
            v = r.verdicts[r.target_names[0]]
            return {"chi2_pvalue": v.chi2_pvalue, "ks_pvalue": v.ks_pvalue,
                    "ecdf_inside": v.ecdf_inside}
    elif pipeline_name == "evidence":
        y = _load_data(args)

        def cell(config: dict, cell_seed: int) -> dict:
            ev = marginal_likelihood_mc(cell_model(config), y,
                                        s=int(config.get("s", 10_000)),
                                        seed=cell_seed)
            return {"log_evidence": ev.log_evidence, "mc_se_log": ev.mc_se_log}
    elif pipeline_name == "power-scale":
        y = _load_data(args)
        from .rng import substream

        def cell(config: dict, cell_seed: int) -> dict:
            draws = approx.approximate(cell_model(config), y,
                                       substream(cell_seed, 0),
                                       m=int(config.get("m", 2000)))
            wd = power_scale_weights(
                draws,
                alpha_prior=float(config.get("alpha_prior", 1.0)),
                alpha_lik=float(config.get("alpha_lik", 1.0)),
            )
            return {"ess": wd.ess, "mean0": weighted_mean(wd, 0)}
    else:
        raise ConfigError(
            "[sweep] pipeline must be one of: evidence, power-scale, sbc"
        )

    result = sensitivity_sweep(cell, grid, seed=seed)
    payload = {
        "kind": "sensitivity-sweep",
        "pipeline": pipeline_name,
        "n_cells": len(result.rows),
        "n_failed": result.n_failed,
        "seed": result.seed,
        "rows": [dict(r) for r in result.rows],
        "metadata": {"varied": {k: v for k, v in vary.items()}},
    }
    echo = {"model": model_echo, "approximator": approx_echo,
            "pipeline": {"mode": "sweep", "pipeline": pipeline_name}}
    # reuse the sweep's own csv writer to keep one column convention
    return payload, echo, {"sweep.csv": result}


def _cmd_render(args, cfg, seed, threads):
    path = Path(args.report)
    if not path.is_file():
        raise ConfigError(f"report file not found: {path}")
    import json

    with open(path) as fh:
        payload = json.load(fh)
    results = payload.get("results", payload)
    files = figures.render_figures(results)
    if not files:
        print(f"warning: no figure renderer for report kind "
              f"{results.get('kind')!r}; known: {', '.join(figures.renderable_kinds())}",
              file=sys.stderr)
    return {"kind": "render", "source": str(path),
            "rendered": sorted(files)}, {}, {"__svg__": files}


_HANDLERS = {
    "sbc": _cmd_sbc,
    "post-sbc": _cmd_sbc,
    "freq-calibrate": _cmd_freq_calibrate,
    "power": _cmd_power,
    "accuracy": _cmd_accuracy,
    "test": _cmd_test,
    "ppc": _cmd_ppc,
    "prior-check": _cmd_prior_check,
    "elicit": _cmd_elicit,
    "abc": _cmd_abc,
    "compare": _cmd_compare,
    "sensitivity": _cmd_sensitivity,
    "render": _cmd_render,
}

_SEED_PLANS = {
    "sbc": ["replication i: stream (seed, 0, i)",
            "band calibration: module-internal fixed seed"],
    "post-sbc": ["posterior draws at observed data: stream (seed, 1)",
                 "replication i: stream (seed, 0, i)",
                 "band calibration: module-internal fixed seed"],
    "freq-calibrate": ["dataset i: stream (seed, 0, i)"],
    "power": ["null sample: stream (seed + 1, 0)",
              "dataset i: stream (seed, 0, i)"],
    "accuracy": ["dataset i: stream (seed, 0, i)"],
    "test": ["null chunk c: stream (seed, 0, c)",
             "tie-break coin: stream (seed, 1)"],
    "ppc": ["posterior draws: stream (seed, 1)",
            "replications: stream (seed, 0)"],
    "prior-check": ["prior draws and simulation: stream (seed, 0)"],
    "elicit": ["common random numbers: stream (seed, 0), reused every evaluation"],
    "abc": ["proposals: stream (seed, 0)"],
    "compare": ["model k, chunk c: stream (model seed, 0, c)"],
    "sensitivity": ["cell i: derived seed from (seed, 9, i)"],
    "render": ["no randomness"],
}


# ---------------------------------------------------------------------------
# Output


def _write_outputs(outdir: Path, payload: dict, formats: set[str], csvs: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    svg_files = csvs.pop("__svg__", None)
    report.write_report(payload, outdir / "report.json")
    if "csv" in formats:
        for filename, table in csvs.items():
            if hasattr(table, "to_csv"):
                table.to_csv(outdir / filename)
            else:
                header, rows = table
                report.write_csv(outdir / filename, header, rows)
    if svg_files is None and "svg" in formats:
        svg_files = figures.render_figures(payload["results"])
    if svg_files:
        for filename, text in svg_files.items():
            with open(outdir / filename, "w", newline="\n") as fh:
                fh.write(text)


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simflow",
        description="Simulation-based calibration, testing, and checking pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override it")
    common.add_argument("--seed", type=int, default=None,
                        help="root seed (default: config, then SIMFLOW_SEED, then 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap; results do not depend on it")
    common.add_argument("--out", default=None, help="output directory (default: out)")
    common.add_argument("--formats", default=None,
                        help="comma list from json,csv,svg (default json,svg)")
    common.add_argument("--dry-run", action="store_true",
                        help="validate config, print the seed plan, and exit")

    modelish = argparse.ArgumentParser(add_help=False)
    modelish.add_argument("--model", help="model name, e.g. normal-normal")
    modelish.add_argument("--model-params",
                          help="model hyperparameters as k=v,k=v")

    approxish = argparse.ArgumentParser(add_help=False)
    approxish.add_argument("--approximator",
                           help="abc, exact, perturbed, or rwm")
    approxish.add_argument("--approximator-params", help="k=v,k=v")

    p = sub.add_parser("sbc", parents=[common, modelish, approxish],
                       help="prior-predictive calibration of an approximator")
    p.add_argument("--S", dest="s", type=int, default=None, help="outer simulations")
    p.add_argument("--M", dest="m", type=int, default=None, help="draws per posterior")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--band-coverage", type=float, default=None)
    p.add_argument("--targets", help="comma list of parameter indices")

    p = sub.add_parser("post-sbc", parents=[common, modelish, approxish],
                       help="calibration conditional on an observed dataset")
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--S", dest="s", type=int, default=None)
    p.add_argument("--M", dest="m", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--band-coverage", type=float, default=None)
    p.add_argument("--targets", help="comma list of parameter indices")

    p = sub.add_parser("freq-calibrate", parents=[common, modelish],
                       help="sampling-distribution calibration of an estimator")
    p.add_argument("--theta-star", help="true parameter, comma separated")
    p.add_argument("--estimator", default="sample-mean")
    p.add_argument("--sampling",
                   help="approximate sampling law: normal:loc,scale or t:df,loc,scale")
    p.add_argument("--alphas", default="0.9", help="interval levels, comma separated")
    p.add_argument("--S", dest="s", type=int, default=None)
    p.add_argument("--bins", type=int, default=None)

    p = sub.add_parser("power", parents=[common, modelish],
                       help="rejection rate of a test at a fixed or prior truth")
    p.add_argument("--test", default="sim", help="sim or z")
    p.add_argument("--theta-star", help="comma list, or the word prior")
    p.add_argument("--theta0", help="null parameter for the test")
    p.add_argument("--statistic", default="mean")
    p.add_argument("--side", default="upper", choices=SIDES)
    p.add_argument("--sigma", type=float, help="known sdev for the z test")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--S", dest="s", type=int, default=None)
    p.add_argument("--null-s", type=int, default=10_000,
                   help="null sample size for the sim test")

    p = sub.add_parser("accuracy", parents=[common, modelish],
                       help="mean estimator error over simulated datasets")
    p.add_argument("--theta-star", help="comma list, or the word prior")
    p.add_argument("--estimator", default="sample-mean")
    p.add_argument("--distance", default="squared", help="squared or absolute")
    p.add_argument("--S", dest="s", type=int, default=None)

    p = sub.add_parser("test", parents=[common, modelish],
                       help="simulation-based hypothesis test on one dataset")
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--theta0", help="null parameter, comma separated")
    p.add_argument("--statistic", default="mean")
    p.add_argument("--side", default="two_sided", choices=SIDES)
    p.add_argument("--S", dest="s", type=int, default=None, help="null sample size")

    p = sub.add_parser("ppc", parents=[common, modelish, approxish],
                       help="predictive check against replicated datasets")
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--statistic", default="mean")
    p.add_argument("--theta-hat",
                   help="fixed parameter: frequentist check instead of posterior")
    p.add_argument("--S", dest="s", type=int, default=None, help="replications")

    p = sub.add_parser("prior-check", parents=[common, modelish],
                       help="prior pushforward mass inside a plausible region")
    p.add_argument("--statistic", default="mean")
    p.add_argument("--region", help="lo,hi")
    p.add_argument("--S", dest="s", type=int, default=None)

    p = sub.add_parser("elicit", parents=[common],
                       help="fit prior hyperparameters to expert statistics")
    p.add_argument("--expert-csv", help="CSV with header target,probe,value")
    p.add_argument("--expert-stats", help="inline comma list of expert values")
    p.add_argument("--n-trials", type=int, default=None)
    p.add_argument("--lam0", default="1,1", help="starting hyperparameters")
    p.add_argument("--sims", type=int, default=None, help="simulations per evaluation")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=500)

    p = sub.add_parser("abc", parents=[common, modelish],
                       help="rejection sampling against a simulator")
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--distance", default="mean-distance")
    p.add_argument("--M", dest="m", type=int, default=None, help="draws wanted")
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--quantile", type=float, default=None,
                   help="acceptance quantile instead of a fixed tolerance")
    p.add_argument("--max-proposals", type=int, default=None)

    p = sub.add_parser("compare", parents=[common, modelish],
                       help="Monte Carlo evidence and model probabilities")
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--S", dest="s", type=int, default=None, help="prior draws")

    p = sub.add_parser("sensitivity", parents=[common, modelish, approxish],
                       help="power-scaling diagnostics or a hyperparameter sweep")
    p.add_argument("--mode", default="power-scale", choices=["power-scale", "sweep"])
    p.add_argument("--data", help="observed dataset CSV")
    p.add_argument("--M", dest="m", type=int, default=None, help="posterior draws")
    p.add_argument("--alphas", default="0.5,0.8,1.0,1.25,2.0",
                   help="scaling exponents, comma separated")

    p = sub.add_parser("render", parents=[common],
                       help="regenerate SVG figures from a stored report")
    p.add_argument("--report", required=True, help="path to a report.json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _load_config(args.config)
        pipe = _section(cfg, "pipeline")
        out_sect = _section(cfg, "output")
        seed, seed_source = _resolve_seed(args, pipe)
        threads = int(_pick(args.threads, pipe, "threads",
                            os.cpu_count() or 1))
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        outdir = Path(_pick(args.out, out_sect, "dir", "out"))
        formats = {
            f.strip()
            for f in str(_pick(args.formats, out_sect, "formats", "json,svg")).split(",")
            if f.strip()
        }
        unknown = formats - {"json", "csv", "svg"}
        if unknown:
            raise ConfigError(f"unknown output formats: {', '.join(sorted(unknown))}")
        if args.dry_run:
            print(f"seed: {seed} (from {seed_source})")
            print(f"threads: {threads}")
            for line in _SEED_PLANS[args.command]:
                print(f"  {line}")
            print("dry run: nothing simulated")
            return 0
        results, echo, csvs = _HANDLERS[args.command](args, cfg, seed, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BudgetError, RetryError, CapabilityError, DomainError, RuntimeError) as exc:
        diagnostics = getattr(exc, "diagnostics", {})
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": args.command,
            "status": "error",
            "error": {"type": type(exc).__name__, "message": str(exc),
                      "diagnostics": diagnostics},
            "timing_seconds": time.perf_counter() - t0,
        }
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            report.write_report(payload, outdir / "report.json")
            print(f"error: {exc} (partial report in {outdir / 'report.json'})",
                  file=sys.stderr)
        except OSError:
            print(f"error: {exc}", file=sys.stderr)
        return 3

    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "status": "ok",
        "config": echo,
        "seed_provenance": {"seed": seed, "source": seed_source,
                            "plan": _SEED_PLANS[args.command]},
        "results": results,
        "timing_seconds": time.perf_counter() - t0,
    }
    try:
        _write_outputs(outdir, payload, formats, csvs)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {outdir / 'report.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

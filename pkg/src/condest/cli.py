"""Batch experiment driver.

Subcommands: divergence, entropy, fit, risk-sweep, regret-sweep, mle-gap,
adaptive, validate, list-classes.  Each experiment subcommand reads a TOML
or JSON config (by extension), validates it fully before running, and
writes CSV plus a summary JSON atomically.  Progress and timing go to
stderr; data goes only to files.

Exit codes: 0 success, 2 config/schema violation (message carries the field
path), 3 runtime numeric failure (message carries the experiment id).

The default output directory is $CONDEST_OUT_DIR, falling back to
``condest-out`` in the working directory; ``--out`` overrides it.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .bumps import BumpGridClass, WiggleClass
from .densities import Bernoulli, Gamma, Gaussian, Multinomial, Poisson
from .divergences import hellinger_sq, kl, l1_distance
from .entropy import critical_radius, entropy_profile
from .errors import CondestError, ConfigError, NumericError
from .estimators import estimator_to_json, fit_adaptive, fit_minimax, theoretical_rate
from .harness import (
    EstimatorSpec,
    expected_losses,
    mle_gap_experiment,
    overlay_curves,
    rate_fit,
    regret_sweep,
    risk_sweep,
    sample_covariates,
    sample_responses,
    summary_payload,
    write_csv,
    write_summary,
)
from .models import (
    BernoulliThresholdClass,
    FiniteSet,
    GaussianCovariates,
    GaussianLinearClass,
    GammaInverseLinkClass,
    PoissonLogLinearClass,
    UniformBall,
    UniformInterval,
)
from .reference import binary_uniform_reference, cauchy_reference, gamma_reference, poisson_reference

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EXPERIMENT_KINDS = (
    "divergence-check",
    "entropy",
    "fit",
    "risk-sweep",
    "regret-sweep",
    "mle-gap",
    "adaptive",
)

_CLASS_FIELDS = {
    "gaussian-linear": {"dim", "x_bound", "w_bound", "sigma"},
    "poisson-loglinear": {"dim", "x_bound", "w_bound"},
    "gamma-inverse": {"dim", "x_bound", "w_bound", "shape", "margin"},
    "bernoulli-threshold": set(),
    "holder-bump": {"cells", "gamma", "level"},
    "wiggle": {"gamma"},
}

_CLASS_DOCS = {
    "gaussian-linear": "x -> Gaussian(<x,w>, sigma^2) with bounded x and w",
    "poisson-loglinear": "x -> Poisson(exp<x,w>)",
    "gamma-inverse": "x -> Gamma(shape, -1/(shape(<x,w> - XW - margin)))",
    "bernoulli-threshold": "x -> Bernoulli(theta1 if x > t else theta0) on the line",
    "holder-bump": "Bernoulli mean 1/2 + on/off Hoelder bumps on an M-cell grid",
    "wiggle": "Bernoulli mean 1/2 + ramp/wiggle family exposing MLE overfitting",
}


def list_classes() -> dict:
    """Catalog of the bundled model-class variants."""
    return dict(_CLASS_DOCS)


# ---------------------------------------------------------------------------
# config loading and validation
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    if path.endswith(".toml"):
        try:
            import tomllib as toml
        except ModuleNotFoundError:
            import tomli as toml
        with open(path, "rb") as fh:
            return toml.load(fh)
    raise ConfigError(f"config {path!r} must end in .toml or .json")


def _reject_unknown(d: dict, allowed: set, path: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _need(d: dict, key: str, types, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}: required key missing")
    v = d[key]
    if types is not None and not isinstance(v, types):
        raise ConfigError(f"{path}.{key}: expected {types}, got {type(v).__name__}")
    return v


def _class_from(cfg: dict, path: str):
    tag = _need(cfg, "tag", str, path)
    if tag not in _CLASS_FIELDS:
        raise ConfigError(f"{path}.tag: unknown class {tag!r} (see list-classes)")
    _reject_unknown(cfg, _CLASS_FIELDS[tag] | {"tag"}, path)
    params = {k: v for k, v in cfg.items() if k != "tag"}
    ctor = {
        "gaussian-linear": GaussianLinearClass,
        "poisson-loglinear": PoissonLogLinearClass,
        "gamma-inverse": GammaInverseLinkClass,
        "bernoulli-threshold": BernoulliThresholdClass,
        "holder-bump": BumpGridClass,
        "wiggle": WiggleClass,
    }[tag]
    try:
        return ctor(**params)
    except (TypeError, CondestError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _covariates_from(cfg: dict, path: str):
    kind = _need(cfg, "kind", str, path)
    if kind == "uniform-interval":
        _reject_unknown(cfg, {"kind", "lo", "hi"}, path)
        return UniformInterval(float(cfg.get("lo", -1.0)), float(cfg.get("hi", 1.0)))
    if kind == "finite-set":
        _reject_unknown(cfg, {"kind", "points", "weights"}, path)
        return FiniteSet(tuple(_need(cfg, "points", list, path)), cfg.get("weights") and tuple(cfg["weights"]))
    if kind == "uniform-ball":
        _reject_unknown(cfg, {"kind", "dim", "radius"}, path)
        return UniformBall(int(cfg.get("dim", 1)), float(cfg.get("radius", 1.0)))
    if kind == "gaussian":
        _reject_unknown(cfg, {"kind", "loc", "scale"}, path)
        return GaussianCovariates(float(cfg.get("loc", 0.0)), float(cfg.get("scale", 1.0)))
    raise ConfigError(f"{path}.kind: unknown covariate kind {kind!r}")


def _truth_from(spec, cfg: dict, path: str):
    tag = spec.tag
    try:
        if tag in ("gaussian-linear", "poisson-loglinear", "gamma-inverse"):
            return spec.member(_need(cfg, "w", list, path))
        if tag == "bernoulli-threshold":
            t = cfg.get("threshold", 0.0)
            t = -math.inf if t == "-inf" else math.inf if t == "inf" else float(t)
            return spec.member(t, float(_need(cfg, "theta0", (int, float), path)),
                               float(_need(cfg, "theta1", (int, float), path)))
        if tag == "holder-bump":
            return spec.member(tuple(_need(cfg, "pattern", list, path)))
        if tag == "wiggle":
            return spec.constant()
    except CondestError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}: no truth constructor for class {tag!r}")


def _estimator_from(cfg: dict, path: str) -> EstimatorSpec:
    allowed = {"kind", "eps", "alpha", "pool_resolution", "pool_kwargs", "eval_draws"}
    _reject_unknown(cfg, allowed, path)
    kind = cfg.get("kind", "minimax")
    if kind not in ("minimax", "mle", "smoothed-mle", "sieve-mle"):
        raise ConfigError(f"{path}.kind: unknown estimator {kind!r}")
    return EstimatorSpec(
        kind=kind,
        eps_policy=cfg.get("eps", "default"),
        alpha_policy=cfg.get("alpha", "1/n"),
        pool_resolution=cfg.get("pool_resolution", 0.05),
        pool_kwargs=dict(cfg.get("pool_kwargs", {})),
        eval_draws=int(cfg.get("eval_draws", 2000)),
    )


_TOP_KEYS = {
    "divergence-check": {"kind", "seed", "experiment_id", "out_dir", "pairs_per_family", "families"},
    "entropy": {"kind", "seed", "experiment_id", "out_dir", "class", "n", "eps_grid", "configs",
                "pool_resolution", "pool_kwargs", "covariates"},
    "fit": {"kind", "seed", "experiment_id", "out_dir", "class", "truth", "n", "estimator", "covariates"},
    "risk-sweep": {"kind", "seed", "experiment_id", "out_dir", "class", "truth", "estimator",
                   "n_grid", "replications", "covariates", "overlays", "overlay_params", "workers"},
    "regret-sweep": {"kind", "seed", "experiment_id", "out_dir", "class", "truth", "n_grid",
                     "replications", "covariates", "pool_resolution", "pool_kwargs", "eps"},
    "mle-gap": {"kind", "seed", "experiment_id", "out_dir", "gamma", "n_grid", "replications", "levels"},
    "adaptive": {"kind", "seed", "experiment_id", "out_dir", "classes", "prior", "truth_index",
                 "truth", "n", "replications", "pool_resolution", "eps", "alpha"},
}


def validate(config: dict) -> list:
    """Validate a config without executing it; returns diagnostics (empty
    when valid).  Raises nothing: every problem becomes a diagnostic."""
    diags = []
    try:
        kind = _need(config, "kind", str, "config")
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"config.kind: unknown experiment kind {kind!r}")
        _reject_unknown(config, _TOP_KEYS[kind], "config")
        _need(config, "seed", int, "config")
        if kind in ("risk-sweep", "regret-sweep", "mle-gap"):
            grid = _need(config, "n_grid", list, "config")
            if sorted(grid) != grid or len(grid) < 1:
                raise ConfigError("config.n_grid: must be a nondecreasing list")
            if int(_need(config, "replications", int, "config")) < 2:
                raise ConfigError("config.replications: need at least 2")
        if kind == "mle-gap":
            gamma = float(_need(config, "gamma", (int, float), "config"))
            if not 0.0 < gamma < 0.5:
                raise ConfigError("config.gamma: must lie in the open interval (0, 1/2)")
        if kind in ("entropy", "fit", "risk-sweep", "regret-sweep"):
            spec = _class_from(_need(config, "class", dict, "config"), "config.class")
            if "truth" in _TOP_KEYS[kind] and kind != "entropy":
                _truth_from(spec, _need(config, "truth", dict, "config"), "config.truth")
        if kind in ("fit", "risk-sweep"):
            _estimator_from(config.get("estimator", {}), "config.estimator")
        if "covariates" in config:
            _covariates_from(config["covariates"], "config.covariates")
        if kind == "adaptive":
            classes = _need(config, "classes", list, "config")
            prior = _need(config, "prior", list, "config")
            if len(classes) != len(prior):
                raise ConfigError("config.prior: one weight per candidate class")
            if any(w <= 0 for w in prior):
                raise ConfigError("config.prior: weights must be positive")
            if abs(sum(prior) - 1.0) > 1e-9:
                raise ConfigError("config.prior: weights must sum to 1")
            for i, c in enumerate(classes):
                _class_from(c, f"config.classes[{i}]")
            ti = int(_need(config, "truth_index", int, "config"))
            if not 0 <= ti < len(classes):
                raise ConfigError("config.truth_index: out of range")
    except ConfigError as exc:
        diags.append(str(exc))
    return diags


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------


def _out_dir(config, args):
    return (
        getattr(args, "out", None)
        or config.get("out_dir")
        or os.environ.get("CONDEST_OUT_DIR")
        or "condest-out"
    )


def _eid(config, default):
    return config.get("experiment_id", default)


def _progress(msg: str):
    print(msg, file=sys.stderr, flush=True)


def _run_divergence(config, outdir):
    seed = config["seed"]
    pairs = int(config.get("pairs_per_family", 1000))
    families = config.get("families", ["gaussian", "poisson", "gamma", "bernoulli", "multinomial"])
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for fam in families:
        for _ in range(pairs):
            if fam == "gaussian":
                ref = cauchy_reference()
                p = Gaussian(rng.uniform(-3, 3), rng.uniform(0.4, 2.0))
                q = Gaussian(rng.uniform(-3, 3), rng.uniform(0.4, 2.0))
            elif fam == "poisson":
                ref = poisson_reference()
                p, q = Poisson(rng.uniform(0.3, 8.0)), Poisson(rng.uniform(0.3, 8.0))
            elif fam == "gamma":
                ref = gamma_reference(2.0, 0.5)
                p, q = Gamma(2.0, rng.uniform(0.3, 2.0)), Gamma(rng.uniform(1.0, 4.0), rng.uniform(0.3, 2.0))
            elif fam == "bernoulli":
                ref = binary_uniform_reference()
                p, q = Bernoulli(rng.uniform(0.02, 0.98)), Bernoulli(rng.uniform(0.02, 0.98))
            elif fam == "multinomial":
                from .reference import CountingMeasure

                ref = CountingMeasure((0, 1, 2, 3), (1, 1, 1, 1))
                p = Multinomial(tuple(rng.dirichlet(np.ones(4))))
                q = Multinomial(tuple(rng.dirichlet(np.ones(4))))
            else:
                raise ConfigError(f"config.families: unknown family {fam!r}")
            for name, op in (("hellinger_sq", hellinger_sq), ("kl", kl), ("l1", l1_distance)):
                try:
                    closed = op(p, q, ref, method="closed")
                except ConfigError:
                    continue
                numeric = op(p, q, ref, method="numeric")
                diff = abs(closed.value - numeric.value)
                worst = max(worst, diff)
                rows.append(f"{fam},{name},{closed.value!r},{numeric.value!r},{diff!r}")
    eid = _eid(config, "divergence-check")
    path = os.path.join(outdir, f"{eid}.csv")
    from .harness import _atomic_write

    _atomic_write(path, "family,divergence,closed,numeric,abs_diff\n" + "\n".join(rows) + "\n")
    write_summary(os.path.join(outdir, f"{eid}-summary.json"),
                  {"experiment_id": eid, "pairs_per_family": pairs, "max_abs_diff": worst})
    _progress(f"divergence-check: max |closed - numeric| = {worst:.3e}")
    return 0


def _run_entropy(config, outdir):
    spec = _class_from(config["class"], "config.class")
    rng = np.random.default_rng(config["seed"])
    n = int(config.get("n", 128))
    grid = config.get("eps_grid") or list(np.geomspace(0.02, 1.0, 12))
    prof = entropy_profile(
        spec,
        n,
        grid,
        rng,
        configs=int(config.get("configs", 3)),
        pool_resolution=config.get("pool_resolution", 0.1),
        with_packing=True,
        pool_kwargs=dict(config.get("pool_kwargs", {})),
    )
    eid = _eid(config, f"entropy-{spec.tag}")
    from .harness import _atomic_write

    _atomic_write(os.path.join(outdir, f"{eid}.csv"), prof.to_csv())
    try:
        crit = critical_radius(prof, n)
    except CondestError:
        crit = None
    write_summary(
        os.path.join(outdir, f"{eid}-summary.json"),
        {"experiment_id": eid, "class": spec.tag, "n": n, "critical_radius": crit,
         "sup_attained": prof.sup_attained},
    )
    _progress(f"entropy: wrote profile for {spec.tag} (critical radius {crit})")
    return 0


def _run_fit(config, outdir):
    spec = _class_from(config["class"], "config.class")
    truth = _truth_from(spec, config["truth"], "config.truth")
    espec = _estimator_from(config.get("estimator", {}), "config.estimator")
    rng = np.random.default_rng(config["seed"])
    n = int(config.get("n", 256))
    cov = _covariates_from(config["covariates"], "config.covariates") if "covariates" in config else spec.default_covariates()
    xs = sample_covariates(cov, n, rng)
    ys = sample_responses(truth, xs, rng)
    pool = spec.discretize(espec.pool_resolution, xs=xs[: n // 2], **espec.pool_kwargs)
    est = fit_minimax(pool, xs, ys, ref=spec.ref,
                      eps=None if espec.eps_policy == "default" else float(espec.eps_policy))
    eid = _eid(config, f"fit-{spec.tag}")
    from .harness import _atomic_write

    _atomic_write(os.path.join(outdir, f"{eid}-estimator.json"), estimator_to_json(est))
    klv, hv, _ = expected_losses(truth, est, cov, spec.ref, rng, espec.eval_draws)
    write_summary(os.path.join(outdir, f"{eid}-summary.json"),
                  {"experiment_id": eid, "class": spec.tag, "n": n, "kl_loss": klv,
                   "hellinger_loss": hv, "cover_size": len(est.cover.members)})
    _progress(f"fit: cover size {len(est.cover.members)}, kl loss {klv:.5g}")
    return 0


def _run_risk_sweep(config, outdir):
    spec = _class_from(config["class"], "config.class")
    truth = _truth_from(spec, config["truth"], "config.truth")
    espec = _estimator_from(config.get("estimator", {}), "config.estimator")
    cov = _covariates_from(config["covariates"], "config.covariates") if "covariates" in config else None
    eid = _eid(config, f"risk-{spec.tag}-{espec.kind}")
    t0 = time.perf_counter()
    workers = int(config.get("workers", 0)) or (os.cpu_count() or 1)
    reports, fit, rows = risk_sweep(
        spec, truth, espec, config["n_grid"], int(config["replications"]), config["seed"],
        covariates=cov, experiment_id=eid, workers=workers,
    )
    overlays = None
    if config.get("overlays"):
        overlays = overlay_curves(config["overlays"], config["n_grid"], **config.get("overlay_params", {}))
    write_csv(os.path.join(outdir, f"{eid}.csv"), rows)
    write_summary(os.path.join(outdir, f"{eid}-summary.json"), summary_payload(eid, reports, fit, overlays))
    _progress(f"risk-sweep: slope {fit.slope:.3f} in {time.perf_counter() - t0:.1f}s")
    return 0


def _run_regret_sweep(config, outdir):
    spec = _class_from(config["class"], "config.class")
    truth = _truth_from(spec, config["truth"], "config.truth")
    cov = _covariates_from(config["covariates"], "config.covariates") if "covariates" in config else None
    eid = _eid(config, f"regret-{spec.tag}")
    eps = config.get("eps")
    reports, rows = regret_sweep(
        spec, truth, config["n_grid"], int(config["replications"]), config["seed"],
        covariates=cov, pool_resolution=config.get("pool_resolution", 0.05),
        pool_kwargs=dict(config.get("pool_kwargs", {})),
        eps_rule=(lambda n: float(eps)) if eps is not None else None, experiment_id=eid,
    )
    write_csv(os.path.join(outdir, f"{eid}.csv"), rows)
    write_summary(os.path.join(outdir, f"{eid}-summary.json"), {"experiment_id": eid, "reports": reports})
    _progress(f"regret-sweep: wrote {len(rows)} rows")
    return 0


def _run_mle_gap(config, outdir):
    eid = _eid(config, "mle-gap")
    mle_r, agg_r, rows = mle_gap_experiment(
        float(config["gamma"]), config["n_grid"], int(config["replications"]), config["seed"],
        levels=int(config.get("levels", 7)), experiment_id=eid,
    )
    write_csv(os.path.join(outdir, f"{eid}.csv"), rows)
    payload = summary_payload(eid, list(mle_r) + list(agg_r), None)
    if len(config["n_grid"]) >= 3:
        for key, reports in (("mle_hellinger_slope", mle_r), ("minimax_hellinger_slope", agg_r)):
            try:
                payload[key] = rate_fit(config["n_grid"], [r.hellinger_mean for r in reports]).slope
            except ConfigError:
                pass  # degenerate (all-zero) risks carry no slope
    write_summary(os.path.join(outdir, f"{eid}-summary.json"), payload)
    _progress(f"mle-gap: final Hellinger means mle={mle_r[-1].hellinger_mean:.3e} vs minimax={agg_r[-1].hellinger_mean:.3e}")
    return 0


def _run_adaptive(config, outdir):
    specs = [_class_from(c, f"config.classes[{i}]") for i, c in enumerate(config["classes"])]
    prior = [float(w) for w in config["prior"]]
    truth = _truth_from(specs[int(config["truth_index"])], config["truth"], "config.truth")
    ref = specs[0].ref
    for s in specs:
        if s.ref != ref:
            raise ConfigError("config.classes: all candidates must share one reference measure")
    n = int(config.get("n", 512))
    R = int(config.get("replications", 20))
    res = config.get("pool_resolution", 0.05)
    eps = config.get("eps")
    alpha = config.get("alpha")
    cov = specs[int(config["truth_index"])].default_covariates()
    rows = []
    adaptive_kl, per_model_kl = [], [[] for _ in specs]
    eid = _eid(config, "adaptive")
    for r in range(R):
        rng = np.random.default_rng(np.random.SeedSequence(config["seed"], spawn_key=(0, r)))
        xs = sample_covariates(cov, n, rng)
        ys = sample_responses(truth, xs, rng)
        suppliers = [lambda x, s=s: s.discretize(res, xs=x) for s in specs]
        ad = fit_adaptive(suppliers, prior, xs, ys, ref,
                          eps_rule=(lambda m: float(eps)) if eps is not None else None,
                          alpha=float(alpha) if alpha is not None else None)
        klv, hv, _ = expected_losses(truth, ad.predictor(), cov, ref, rng, 2000)
        adaptive_kl.append(klv)
        rows.append({"experiment_id": eid, "class": "adaptive", "estimator": "adaptive", "n": n,
                     "rep": r, "kl_loss": klv, "hellinger_loss": hv, "regret": "", "lambda_bar": "",
                     "seed": config["seed"], "wall_ms": 0})
        for m, est in enumerate(ad.per_model):
            k_m, h_m, _ = expected_losses(truth, est, cov, ref, rng, 2000)
            per_model_kl[m].append(k_m)
            rows.append({"experiment_id": eid, "class": f"candidate-{m}", "estimator": "minimax",
                         "n": n, "rep": r, "kl_loss": k_m, "hellinger_loss": h_m, "regret": "",
                         "lambda_bar": "", "seed": config["seed"], "wall_ms": 0})
    write_csv(os.path.join(outdir, f"{eid}.csv"), rows)
    payload = {
        "experiment_id": eid,
        "adaptive_kl_mean": float(np.mean(adaptive_kl)),
        "per_model_kl_mean": [float(np.mean(v)) for v in per_model_kl],
        "prior": prior,
        "penalties": [3.0 / n * math.log(1.0 / w) for w in prior],
    }
    write_summary(os.path.join(outdir, f"{eid}-summary.json"), payload)
    _progress(f"adaptive: kl {payload['adaptive_kl_mean']:.5g} vs per-model {payload['per_model_kl_mean']}")
    return 0


_RUNNERS = {
    "divergence-check": _run_divergence,
    "entropy": _run_entropy,
    "fit": _run_fit,
    "risk-sweep": _run_risk_sweep,
    "regret-sweep": _run_regret_sweep,
    "mle-gap": _run_mle_gap,
    "adaptive": _run_adaptive,
}

_SUBCOMMAND_KIND = {
    "divergence": "divergence-check",
    "entropy": "entropy",
    "fit": "fit",
    "risk-sweep": "risk-sweep",
    "regret-sweep": "regret-sweep",
    "mle-gap": "mle-gap",
    "adaptive": "adaptive",
}


def run(config_path: str, overrides: argparse.Namespace | None = None, expect_kind: str | None = None) -> int:
    """Load, validate, and execute one experiment config."""
    config = _load_config(config_path)
    if overrides is not None:
        if getattr(overrides, "seed", None) is not None:
            config["seed"] = overrides.seed
        if getattr(overrides, "replications", None) is not None:
            config["replications"] = overrides.replications
        if getattr(overrides, "workers", None) is not None:
            config["workers"] = overrides.workers
    if expect_kind is not None:
        config.setdefault("kind", expect_kind)
        if config["kind"] != expect_kind:
            raise ConfigError(f"config.kind: {config['kind']!r} does not match subcommand {expect_kind!r}")
    diags = validate(config)
    if diags:
        raise ConfigError("; ".join(diags))
    outdir = _out_dir(config, overrides or argparse.Namespace())
    os.makedirs(outdir, exist_ok=True)
    try:
        return _RUNNERS[config["kind"]](config, outdir)
    except NumericError as exc:
        eid = config.get("experiment_id", config["kind"])
        raise NumericError(f"experiment {eid!r}: {exc}", exc.achieved) from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="condest", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_KIND:
        p = sub.add_parser(name, help=f"run a {name} experiment from a config file")
        p.add_argument("config", help="TOML or JSON experiment config")
        p.add_argument("--out", help="output directory (default $CONDEST_OUT_DIR or ./condest-out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--replications", type=int, help="override the replication count")
        p.add_argument("--workers", type=int, help="worker processes (default: available parallelism)")
    pv = sub.add_parser("validate", help="validate a config without running it")
    pv.add_argument("config")
    sub.add_parser("list-classes", help="print the model-class catalog")

    args = parser.parse_args(argv)
    try:
        if args.command == "list-classes":
            for tag, doc in list_classes().items():
                print(f"{tag:22s} {doc}")
            return 0
        if args.command == "validate":
            config = _load_config(args.config)
            diags = validate(config)
            for d in diags:
                print(d, file=sys.stderr)
            return EXIT_CONFIG if diags else 0
        return run(args.config, args, expect_kind=_SUBCOMMAND_KIND[args.command])
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: simulate, estimate, sample, forecast, validate.

Every command takes ``--config`` (flat key = value file) and ``--seed``;
command-line flags override config values, which override built-in
defaults.  Exit codes: 0 success, 1 usage or configuration problem, 2
malformed input data, 3 numerical breakdown.  Messages go to stderr.
"""

import json
import os
import sys
import time

import click
import numpy as np

from . import __version__
from .anneal import AnnealConfig, sa_optimize
from .errors import NumericalSingularityError, SeriesFormatError
from .mcmc import ChainConfig, ProposalConfig, run_chain
from .model import PriorConfig, Variances, generate_grid
from .posterior import (
    PosteriorSamples,
    circular_mean,
    density_grid,
    forecast_y_next,
    hpd_circular,
    loo_cv,
    summarize,
)
from .series_io import RunManifest, parse_config, read_series, write_series
from .simulate import SimConfig, generate

DEFAULT_GRID_SIZE = 40


def _cfg(config_path):
    return parse_config(config_path) if config_path else {}


def _pick(cfg, key, override, default):
    """Flag > config > default, in that order."""
    if override is not None:
        return override
    if key in cfg:
        return cfg[key]
    return default


def _prior_from_cfg(cfg):
    kwargs = {}
    for key in (
        "mu0",
        "kappa0",
        "alpha_f",
        "gamma_f",
        "alpha_eps",
        "gamma_eps",
        "alpha_g",
        "gamma_g",
        "alpha_eta",
        "gamma_eta",
    ):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "x0_sigma2" in cfg:
        # Alternative reading of the initial-angle prior: treat the number
        # as a variance rather than a concentration.
        kwargs["kappa0"] = cfg["x0_sigma2"]
        kwargs["x0_prior_as_variance"] = True
    return PriorConfig(**kwargs)


def _variances_from_cfg(cfg):
    kwargs = {}
    for key in ("sigma_f", "sigma_eps", "sigma_g", "sigma_eta"):
        if key in cfg:
            kwargs[key] = cfg[key]
    return Variances(**kwargs)


def _proposals_from_cfg(cfg):
    kwargs = {}
    for key in (
        "kappa_x_narrow",
        "kappa_x_wide",
        "mix_weight_wide",
        "kappa_x0",
        "wrap_rw_sd",
        "k_bound",
        "var_rw_logstep",
    ):
        if key in cfg:
            kwargs[key] = cfg[key]
    return ProposalConfig(**kwargs)


def _grid_for(seed, n, T):
    rng = np.random.default_rng(seed)
    return generate_grid(rng, n, float(T + 1))


def _read_input_series(path, cfg):
    series = read_series(
        path, unit=cfg.get("unit", "radians"), column=cfg.get("column", "y")
    )
    return series.values


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@click.group(name="circssm")
@click.version_option(version=__version__)
def cli():
    """Circular state-space modeling: simulate, fit, sample, predict."""


@cli.command()
@click.option("--config", type=click.Path(), default=None, help="Flat key=value file.")
@click.option("--seed", type=int, default=None, help="Generator seed.")
@click.option("--T", "T", type=int, default=None, help="Series length.")
@click.option("--out", type=click.Path(), default="series.csv", show_default=True)
@click.option("--latent-out", type=click.Path(), default=None,
              help="Also write the latent path x_0..x_T.")
@click.option("--manifest-out", type=click.Path(), default=None)
def simulate(config, seed, T, out, latent_out, manifest_out):
    """Generate a synthetic series from the benchmark dynamics."""
    cfg = _cfg(config)
    seed = _pick(cfg, "seed", seed, 0)
    sim = SimConfig(
        T=_pick(cfg, "sim_T", T, 101),
        alpha=cfg.get("sim_alpha", 1.0),
        beta=cfg.get("sim_beta", 0.5),
        gamma=cfg.get("sim_gamma", 0.2),
        sigma_eta=cfg.get("sim_sigma_eta", 0.1),
        sigma_eps=cfg.get("sim_sigma_eps", 0.1),
        x_init=cfg.get("sim_x_init"),
        seed=seed,
    )
    y, x = generate(sim)
    write_series(out, y, column="y")
    if latent_out:
        write_series(latent_out, x, column="x")
    if manifest_out:
        params = {
            "T": sim.T,
            "alpha": sim.alpha,
            "beta": sim.beta,
            "gamma": sim.gamma,
            "sigma_eta": sim.sigma_eta,
            "sigma_eps": sim.sigma_eps,
            "x_init": sim.x_init,
        }
        RunManifest(
            command="simulate", params=params, seed=seed, runtime=RunManifest.now()
        ).write(manifest_out)
    click.echo(f"wrote {sim.T} angles to {out}")


@cli.command()
@click.option("--config", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--series", type=click.Path(), required=True, help="Input series CSV.")
@click.option("--out", type=click.Path(), default="mle.json", show_default=True)
@click.option("--restarts", type=int, default=None)
def mle(config, seed, series, out, restarts):
    """Estimate the four variances by annealing the integrated likelihood."""
    cfg = _cfg(config)
    seed = _pick(cfg, "seed", seed, 0)
    y = _read_input_series(series, cfg)
    grid = _grid_for(seed, cfg.get("grid_size", DEFAULT_GRID_SIZE), y.shape[0])
    anneal_cfg = AnnealConfig(
        n_outer=cfg.get("sa_n_outer", 200),
        n_mc=cfg.get("sa_n_mc", 200),
        t0=cfg.get("sa_t0", 1.0),
        rho=cfg.get("sa_rho", 0.95),
        step_sd=cfg.get("sa_step_sd", 0.2),
        seed=seed,
    )
    n_restarts = restarts if restarts is not None else cfg.get("sa_restarts", 1)
    est = sa_optimize(
        y,
        grid,
        prior=_prior_from_cfg(cfg),
        config=anneal_cfg,
        init=_variances_from_cfg(cfg),
        seed=seed,
        n_restarts=n_restarts,
    )
    v = est.variances
    _write_json(
        out,
        {
            "sigma_f": v.sigma_f,
            "sigma_eps": v.sigma_eps,
            "sigma_g": v.sigma_g,
            "sigma_eta": v.sigma_eta,
            "sigma2_f": v.var_f,
            "sigma2_eps": v.var_eps,
            "sigma2_g": v.var_g,
            "sigma2_eta": v.var_eta,
            "final_loglik": est.final_loglik,
            "loglik_se": est.loglik_se,
            "accept_rate": est.accept_rate,
            "n_evals": est.n_evals,
            "restarts": est.restarts,
            "best_trace": [float(b) for b in est.best_trace],
            "trace": est.trace,
            "seed": seed,
        },
    )
    click.echo(
        f"best loglik {est.final_loglik:.4f} "
        f"(sigma_f={v.sigma_f:.4g}, sigma_eps={v.sigma_eps:.4g}, "
        f"sigma_g={v.sigma_g:.4g}, sigma_eta={v.sigma_eta:.4g}) -> {out}"
    )


def _chain_kwargs(cfg, seed, n_iter, burn_in, thin):
    defaults = ChainConfig()
    return {
        "n_iter": _pick(cfg, "n_iter", n_iter, defaults.n_iter),
        "burn_in": _pick(cfg, "burn_in", burn_in, defaults.burn_in),
        "thin": _pick(cfg, "thin", thin, defaults.thin),
        "seed": seed,
        "prior": _prior_from_cfg(cfg),
        "variances": _variances_from_cfg(cfg),
        "sample_variances": cfg.get("sample_variances", defaults.sample_variances),
        "proposals": _proposals_from_cfg(cfg),
        "backend": cfg.get("backend", "auto"),
        "jitter": cfg.get("jitter"),
    }


@cli.command()
@click.option("--config", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--series", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), default="draws.csv", show_default=True)
@click.option("--manifest-out", type=click.Path(), default=None,
              help="Default: <out>.manifest.json")
@click.option("--accept-out", type=click.Path(), default=None,
              help="Default: <out>.accept.json")
@click.option("--n-iter", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--thin", type=int, default=None)
def sample(config, seed, series, out, manifest_out, accept_out, n_iter, burn_in, thin):
    """Run the Metropolis-within-Gibbs chain and store kept draws."""
    cfg = _cfg(config)
    seed = _pick(cfg, "seed", seed, 0)
    y = _read_input_series(series, cfg)
    grid_size = cfg.get("grid_size", DEFAULT_GRID_SIZE)
    grid = _grid_for(seed, grid_size, y.shape[0])
    kwargs = _chain_kwargs(cfg, seed, n_iter, burn_in, thin)
    t0 = time.perf_counter()
    samples = run_chain(
        y,
        grid,
        kwargs.pop("n_iter"),
        store_dz=cfg.get("store_dz", False),
        store_fstar=cfg.get("store_fstar", False),
        **kwargs,
    )
    elapsed = time.perf_counter() - t0
    samples.to_csv(out)
    manifest_out = manifest_out or out + ".manifest.json"
    accept_out = accept_out or out + ".accept.json"
    params = {
        "series": os.path.basename(series),
        "T": int(y.shape[0]),
        "grid_size": int(grid_size),
        "n_iter": samples.meta["n_iter"],
        "burn_in": samples.meta["burn_in"],
        "thin": samples.meta["thin"],
        "backend": samples.meta["backend"],
        "sample_variances": samples.meta["sample_variances"],
    }
    runtime = RunManifest.now()
    runtime["seconds"] = round(elapsed, 3)
    RunManifest(
        command="sample", params=params, seed=seed, runtime=runtime
    ).write(manifest_out)
    _write_json(
        accept_out,
        {
            "rates": samples.meta["acceptance"],
            "warnings": samples.meta["acceptance_warnings"],
        },
    )
    click.echo(f"kept {len(samples)} draws -> {out}")


@cli.command()
@click.option("--config", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--draws", type=click.Path(), required=True, help="Draws CSV from sample.")
@click.option("--out", type=click.Path(), default="forecast.csv", show_default=True)
@click.option("--hpd-out", type=click.Path(), default=None,
              help="Default: <out>.hpd.json")
@click.option("--mass", type=float, default=None)
def forecast(config, seed, draws, out, hpd_out, mass):
    """Predictive draws and highest-density arcs for the next observation."""
    cfg = _cfg(config)
    seed = _pick(cfg, "seed", seed, 0)
    mass = _pick(cfg, "mass", mass, 0.95)
    samples = PosteriorSamples.from_csv(draws)
    pred = forecast_y_next(samples, seed=seed)
    write_series(out, pred, column="y_next")
    hpd = hpd_circular(pred, mass=mass)
    hpd_out = hpd_out or out + ".hpd.json"
    _write_json(
        hpd_out,
        {
            "requested_mass": mass,
            "achieved_mass": hpd.mass,
            "intervals": [[lo, hi] for lo, hi in hpd.intervals],
            "point": circular_mean(pred),
            "n_draws": int(pred.shape[0]),
            "seed": seed,
        },
    )
    click.echo(f"{pred.shape[0]} predictive draws -> {out}; arcs -> {hpd_out}")


@cli.command()
@click.option("--config", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--series", type=click.Path(), required=True)
@click.option("--out-dir", type=click.Path(), default="cv_out", show_default=True)
@click.option("--mass", type=float, default=None)
@click.option("--threads", type=int, default=None,
              help="Parallel folds; also set by CIRCSSM_THREADS.")
@click.option("--n-iter", type=int, default=None)
@click.option("--burn-in", type=int, default=None)
@click.option("--thin", type=int, default=None)
def cv(config, seed, series, out_dir, mass, threads, n_iter, burn_in, thin):
    """Leave-one-out refits with per-time predictive draws and coverage."""
    cfg = _cfg(config)
    seed = _pick(cfg, "seed", seed, 0)
    mass = _pick(cfg, "mass", mass, 0.95)
    if threads is None:
        threads = cfg.get("threads", int(os.environ.get("CIRCSSM_THREADS", "1")))
    y = _read_input_series(series, cfg)
    grid = _grid_for(seed, cfg.get("grid_size", DEFAULT_GRID_SIZE), y.shape[0])
    kwargs = _chain_kwargs(cfg, seed, n_iter, burn_in, thin)
    result = loo_cv(
        y,
        grid,
        kwargs.pop("n_iter"),
        mass=mass,
        n_jobs=threads,
        **kwargs,
    )
    os.makedirs(out_dir, exist_ok=True)
    fold_rows = []
    for fold in result.folds:
        t = fold["t"]
        write_series(
            os.path.join(out_dir, f"pred_{t:03d}.csv"), fold["pred"], column="y_pred"
        )
        fold_rows.append(
            {k: fold[k] for k in ("t", "y_true", "point", "hit", "hpd_mass", "hpd_length")}
        )
    _write_json(
        os.path.join(out_dir, "coverage.json"),
        {
            "mass": result.mass,
            "coverage": result.coverage,
            "n_folds": len(result.folds),
            "folds": fold_rows,
            "seed": seed,
        },
    )
    click.echo(
        f"coverage {result.coverage:.3f} at mass {mass:.2f} "
        f"over {len(result.folds)} folds -> {out_dir}/"
    )


@cli.command()
@click.option("--config", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--draws", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), default="diagnostics.json", show_default=True)
@click.option("--density-out", type=click.Path(), default=None,
              help="Long-form marginal latent histograms CSV.")
@click.option("--n-bins", type=int, default=None)
def diagnose(config, seed, draws, out, density_out, n_bins):
    """Convergence diagnostics and marginal latent densities from draws."""
    cfg = _cfg(config)
    n_bins = _pick(cfg, "n_bins", n_bins, 72)
    samples = PosteriorSamples.from_csv(draws)
    rows = summarize(samples)
    worst = max(rows, key=lambda r: abs(r["z"]))
    _write_json(
        out,
        {
            "n_draws": len(samples),
            "columns": rows,
            "worst_column": worst["name"],
            "worst_z": worst["z"],
            "min_ess": min(r["ess"] for r in rows),
        },
    )
    if density_out:
        dg = density_grid(samples, n_bins=n_bins)
        with open(density_out, "w") as fh:
            fh.write("time,bin_lo,bin_hi,density\n")
            for t, lo, hi, d in dg.rows():
                fh.write(f"{t},{lo:.17g},{hi:.17g},{d:.17g}\n")
    click.echo(
        f"{len(samples)} draws, worst |z| {abs(worst['z']):.2f} "
        f"({worst['name']}) -> {out}"
    )


def main(argv=None):
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        sys.exit(1)
    except click.exceptions.Abort:
        print("aborted", file=sys.stderr)
        sys.exit(1)
    except SeriesFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(2)
    except NumericalSingularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(3)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()

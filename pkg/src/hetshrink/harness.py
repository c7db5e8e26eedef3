"""Named Monte-Carlo experiments with seeded, order-canonical trials.

Each experiment has a config of plain scalars/strings with typed defaults;
overrides are checked against those defaults. Trial i of any sweep runs on
the RNG stream derived from (master seed, sweep index, i), so reruns are
bit-identical regardless of the worker pool (capped by HS_THREADS).

Reports are written as CSV (17 significant digits) with a sidecar
key=value config file; plotting is left to external tools.
"""

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from .eig_shrinkage import NUCLEAR, OPERATOR, cov_estimate, cov_loss
from .linalg import all_singular_values, topk_svd
from .model_sim import (
    NoiseModel,
    SpikedModelSpec,
    SplitSupport,
    VarianceProfile,
    derive_seed,
    draw_factors,
    draw_pcs,
    generate_dataset,
    make_noise_cov,
    rng_for,
    sample_iid,
)
from .optshrink import optshrink_params, optshrink_predict
from .pca_metrics import empirical_pcs
from .prediction import OosPredictor, blp_oracle, oos_coeff, oos_predict
from .rank_and_noise import noise_bulk_edge, sample_noise_cov
from .spectral_params import (
    ModelAggregates,
    bulk_edge,
    estimate_components_svd,
    left_cosine,
    right_cosine,
    spike_from_sigma,
    unwhitened_cosine,
)
from .sv_shrinkage import SHRINKERS, shrink_predict

__all__ = ["ExperimentReport", "run_experiment", "run_trials", "EXPERIMENTS", "experiment_names"]


def pool_workers():
    """Worker count for trial pools: HS_THREADS if set, else the CPU count."""
    env = os.environ.get("HS_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_trials(fn, n_trials, workers=None):
    """Evaluate fn(0..n_trials-1), results ordered by trial index.

    BLAS pools are pinned to one thread for the duration: multithreaded
    BLAS reductions are not bit-reproducible, and the trial pool is the
    better place to spend the cores anyway.
    """
    if workers is None:
        workers = pool_workers()
    with threadpool_limits(limits=1):
        if workers <= 1 or n_trials <= 1:
            return [fn(i) for i in range(n_trials)]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, range(n_trials)))


@dataclass(frozen=True)
class ExperimentReport:
    """In-memory result of one experiment run.

    config holds every parameter including the master seed and trial
    counts — enough to regenerate rows bit-identically. rows is a list of
    dicts conforming to schema.
    """

    name: str
    config: dict
    schema: tuple
    rows: tuple

    def csv_text(self):
        lines = [",".join(self.schema)]
        for row in self.rows:
            cells = []
            for key in self.schema:
                v = row[key]
                if isinstance(v, float):
                    cells.append("%.17g" % v)
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def config_text(self):
        return "".join(f"{k}={self.config[k]}\n" for k in sorted(self.config))

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        csv_path.write_text(self.csv_text())
        (out / f"{self.name}.config").write_text(self.config_text())
        return csv_path


# --- shared recipe pieces -------------------------------------------------


def halves_masks(p):
    """Support masks for the two coordinate halves (low indices first)."""
    first = np.zeros(p, dtype=bool)
    first[: p // 2] = True
    return first, ~first


def blp_pc_generator(p):
    """Rank-3 component supports: full, second half, first half."""
    first, second = halves_masks(p)
    full = np.ones(p, dtype=bool)
    return SplitSupport(masks=(full, second, first), fill="gaussian")


def profile_pc_generator(p):
    """Rank-3 profiles: flat, decreasing 10:1, increasing 10:1 variances."""
    flat = np.full(p, 1.0 / p)
    dec = np.linspace(10.0, 1.0, p)
    inc = np.linspace(1.0, 10.0, p)
    return VarianceProfile(profiles=(flat, dec / dec.sum(), inc / inc.sum()))


def _signal_cov(U, ells):
    return (U * np.asarray(ells)) @ U.T


def _mse(A, B):
    d = A - B
    return float(np.sum(d * d))


def _ells_for_domain(base_sv, domain, noise, U):
    """Signal variances from target singular values, in either domain.

    "unwhitened": variances are the squared targets. "whitened": targets
    are whitened singular values, so divide by tau_k = ||W u_k||^2 of the
    drawn components.
    """
    sv = np.asarray(base_sv, dtype=float)
    if domain == "unwhitened":
        return tuple(sv**2)
    if domain == "whitened":
        taus = np.array([float(np.sum(noise.whiten(U[:, k]) ** 2)) for k in range(U.shape[1])])
        return tuple(sv**2 / taus)
    raise ValueError(f"unknown spike domain {domain!r}")


def _fresh_pool(ds, seed, streams=(3, 4)):
    """Out-of-sample pool sharing the dataset's components: raw (X0, Y0)."""
    spec = ds.spec
    Z0 = draw_factors(spec, rng_for(seed, streams[0]))
    G0 = sample_iid(rng_for(seed, streams[1]), (spec.p, spec.n), spec.noise_dist)
    eps0 = spec.noise.unwhiten(G0)
    X0 = (ds.U * np.sqrt(np.asarray(spec.ells))) @ Z0.T
    return X0, X0 + eps0


# --- experiments ----------------------------------------------------------


def _exp_shrinker_curves(config, seed):
    gamma = config["gamma"]
    agg = ModelAggregates(p=0, n=1, r=1, mu_eps=config["mu_eps"])
    tau = config["tau"]
    edge = bulk_edge(gamma)
    rows = []
    for sigma in np.linspace(config["sigma_min"], config["sigma_max"], config["points"]):
        ell_w = spike_from_sigma(sigma, gamma)
        if ell_w is None:
            t_opt = t_naive = t_pop = 0.0
        else:
            c_w = left_cosine(ell_w, gamma)
            s_w = np.sqrt(1.0 - c_w**2)
            c_t = right_cosine(ell_w, gamma)
            t_naive = np.sqrt(ell_w) * c_w * c_t
            t_opt = t_naive / (c_w**2 + s_w**2 * config["mu_eps"] * tau)
            t_pop = np.sqrt(ell_w)
        rows.append(
            {
                "sigma_w": float(sigma),
                "t_optimal": float(t_opt),
                "t_naive": float(t_naive),
                "t_population": float(t_pop),
                "bulk_edge": float(edge),
            }
        )
    return ("sigma_w", "t_optimal", "t_naive", "t_population", "bulk_edge"), rows


def _exp_fig_blp(config, seed):
    p = config["p"]
    ells = config["ells"]
    noise = make_noise_cov(p, config["kappa"], profile=config["profile"])
    pcs = blp_pc_generator(p)
    rows = []
    for j, n in enumerate(config["ns"]):
        spec = SpikedModelSpec(p=p, n=int(n), ells=ells, noise=noise, pc_generator=pcs)

        def trial(i):
            ds = generate_dataset(spec, derive_seed(seed, j, i))
            Sigma_x = _signal_cov(ds.U, ells)
            mse_w = _mse(shrink_predict(ds.Y, noise, spec.r).Xhat, ds.X)
            mse_os = _mse(optshrink_predict(ds.Y, spec.r), ds.X)
            mse_blp = _mse(blp_oracle(Sigma_x, noise, ds.Y), ds.X)
            return mse_w, mse_os, mse_blp

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "n": int(n),
                "kappa": float(config["kappa"]),
                "trials": config["trials"],
                "mse_whitened": float(res[:, 0].mean()),
                "mse_optshrink": float(res[:, 1].mean()),
                "mse_blp": float(res[:, 2].mean()),
            }
        )
    return ("n", "kappa", "trials", "mse_whitened", "mse_optshrink", "mse_blp"), rows


def _two_shrinker_predictions(Y, noise, r, names):
    """One estimation pass, several shrinkers; returns {name: Xhat}."""
    Yw = noise.whiten(Y)
    comps, U, s, Vt = estimate_components_svd(Yw, noise, r)
    agg = ModelAggregates(p=Y.shape[0], n=Y.shape[1], r=r, mu_eps=noise.mu_eps)
    out = {}
    for name in names:
        t = np.array([SHRINKERS[name](c, agg) for c in comps])
        out[name] = noise.unwhiten((U * t) @ Vt)
    return out


def _exp_fig_comparison(config, seed):
    p = config["p"]
    noise = make_noise_cov(p, config["kappa"], profile="linspace_inv_kappa")
    pcs = profile_pc_generator(p)
    rows = []
    for j, n in enumerate(config["ns"]):
        n = int(n)
        gamma = p / n
        base_sv = [gamma**0.25 + (i + 1) / 2.0 for i in range(3)]
        probe = SpikedModelSpec(p=p, n=n, ells=(1.0, 1.0, 1.0), noise=noise, pc_generator=pcs)

        def trial(i):
            s = derive_seed(seed, j, i)
            U = draw_pcs(probe, rng_for(s, 0))  # same stream generate_dataset uses
            ells = _ells_for_domain(base_sv, config["spike_domain"], noise, U)
            ds = generate_dataset(replace(probe, ells=ells), s)
            norm_x = np.sum(ds.X * ds.X)
            pred = _two_shrinker_predictions(ds.Y, noise, 3, ("optimal", "naive"))
            return (
                _mse(pred["optimal"], ds.X) / norm_x,
                _mse(pred["naive"], ds.X) / norm_x,
                _mse(optshrink_predict(ds.Y, 3), ds.X) / norm_x,
            )

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "n": n,
                "gamma": gamma,
                "kappa": float(config["kappa"]),
                "trials": config["trials"],
                "relerr_optimal": float(res[:, 0].mean()),
                "relerr_naive": float(res[:, 1].mean()),
                "relerr_optshrink": float(res[:, 2].mean()),
            }
        )
    schema = ("n", "gamma", "kappa", "trials", "relerr_optimal", "relerr_naive", "relerr_optshrink")
    return schema, rows


def _exp_fig_comparison_cov(config, seed):
    p = config["p"]
    noise = make_noise_cov(p, config["kappa"], profile="linspace_inv_kappa")
    pcs = profile_pc_generator(p)
    rows = []
    for j, n in enumerate(config["ns"]):
        n = int(n)
        gamma = p / n
        base_sv = [gamma**0.25 + (i + 1) for i in range(3)]
        probe = SpikedModelSpec(p=p, n=n, ells=(1.0, 1.0, 1.0), noise=noise, pc_generator=pcs)

        def trial(i):
            s = derive_seed(seed, j, i)
            U = draw_pcs(probe, rng_for(s, 0))  # same stream generate_dataset uses
            ells = _ells_for_domain(base_sv, config["spike_domain"], noise, U)
            ds = generate_dataset(replace(probe, ells=ells), s)
            Sigma_x = _signal_cov(ds.U, ells)
            norm_nuc = float(np.sum(ells))
            est_opt = cov_estimate(ds.Y, noise, 3, loss=NUCLEAR)
            est_pop = cov_estimate(ds.Y, noise, 3, loss=OPERATOR)
            comps, Ur, _ = optshrink_params(ds.Y, 3)
            t_unw = np.array(
                [max(c.ell_hat * (2.0 * c.c2 - 1.0), 0.0) if np.isfinite(c.ell_hat) else 0.0 for c in comps]
            )
            Sigma_unw = (Ur * t_unw) @ Ur.T
            return (
                cov_loss(NUCLEAR, est_opt.Sigma_x_hat, Sigma_x) / norm_nuc,
                cov_loss(NUCLEAR, est_pop.Sigma_x_hat, Sigma_x) / norm_nuc,
                cov_loss(NUCLEAR, Sigma_unw, Sigma_x) / norm_nuc,
            )

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "n": n,
                "gamma": gamma,
                "kappa": float(config["kappa"]),
                "trials": config["trials"],
                "relerr_optimal": float(res[:, 0].mean()),
                "relerr_population": float(res[:, 1].mean()),
                "relerr_unwhitened": float(res[:, 2].mean()),
            }
        )
    schema = ("n", "gamma", "kappa", "trials", "relerr_optimal", "relerr_population", "relerr_unwhitened")
    return schema, rows


def _exp_fig_cosines(config, seed):
    p, n = config["p"], config["n"]
    ell = config["ell"]
    rows = []
    for j, kappa in enumerate(config["kappas"]):
        noise = make_noise_cov(p, float(kappa), profile=config["profile"])
        spec = SpikedModelSpec(p=p, n=n, ells=(ell,), noise=noise)

        def trial(i):
            ds = generate_dataset(spec, derive_seed(seed, j, i))
            u = ds.U[:, 0]
            uhat = empirical_pcs(noise.whiten(ds.Y), noise, 1)[:, 0]
            uraw = topk_svd(ds.Y, 1)[0][:, 0]
            tau = float(np.sum(noise.whiten(u) ** 2))
            ell_w = ell * tau
            gamma = p / n
            c_w = left_cosine(ell_w, gamma)
            s_w = np.sqrt(1.0 - c_w**2)
            c_theory = unwhitened_cosine(c_w, s_w, noise.mu_eps, tau)
            return abs(u @ uhat), abs(u @ uraw), c_theory

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "kappa": float(kappa),
                "trials": config["trials"],
                "cos_whitened": float(res[:, 0].mean()),
                "cos_raw": float(res[:, 1].mean()),
                "cos_theory": float(res[:, 2].mean()),
            }
        )
    return ("kappa", "trials", "cos_whitened", "cos_raw", "cos_theory"), rows


def _exp_fig_estcov(config, seed):
    p, n = config["p"], config["n"]
    ells = config["ells"]
    vals = np.linspace(config["nu_min"], config["nu_max"], p)
    rng = rng_for(seed, 10**6)
    A = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    noise = NoiseModel(matrix=Q @ (vals[:, None] * Q.T))
    spec = SpikedModelSpec(p=p, n=n, ells=ells, noise=noise)
    rows = []
    for j, n_prime in enumerate(config["n_primes"]):
        n_prime = int(n_prime)

        def trial(i):
            s = derive_seed(seed, j, i)
            ds = generate_dataset(spec, s)
            G = sample_iid(rng_for(s, 5), (p, n_prime), "gaussian")
            pool = noise.unwhiten(G)
            est_noise = sample_noise_cov(pool)
            err_est = _mse(shrink_predict(ds.Y, est_noise, spec.r).Xhat, ds.X)
            err_known = _mse(shrink_predict(ds.Y, noise, spec.r).Xhat, ds.X)
            return err_est, err_known

        # small pools trip the conditioning warning by design here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "n_prime": n_prime,
                "trials": config["trials"],
                "err_estimated": float(res[:, 0].mean()),
                "err_known": float(res[:, 1].mean()),
            }
        )
    return ("n_prime", "trials", "err_estimated", "err_known"), rows


def _discrepancy_oracle(p, n, ells, noise, masks):
    """Exact finite-p limiting MSE for split-support constant components.

    With u_k constant on its mask and diagonal noise, the whitened spike
    ell_w = ell * ||W u||^2 and tau = ||W u||^2 hold exactly at finite p,
    so the limiting MSE formula needs no data at all.
    """
    gamma = p / n
    mu = noise.mu_eps
    nu = noise.diagonal_values()
    total = 0.0
    for ell, mask in zip(ells, masks):
        tau = float(np.mean(1.0 / nu[mask]))
        ell_w = ell * tau
        c_w = left_cosine(ell_w, gamma)
        s_w = np.sqrt(1.0 - c_w**2)
        c = unwhitened_cosine(c_w, s_w, mu, tau)
        ct = right_cosine(ell_w, gamma)
        total += ell * (1.0 - (c * ct) ** 2)
    return total


def _exp_fig_discrepancies(config, seed):
    gamma = config["gamma"]
    ells = config["ells"]
    rows = []
    for j, log2_p in enumerate(config["log2_ps"]):
        p = 2 ** int(log2_p)
        n = int(round(p / gamma))
        nu = np.linspace(config["nu_min"], config["nu_max"], p)
        noise = NoiseModel(values=nu)
        first, second = halves_masks(p)
        spec = SpikedModelSpec(
            p=p,
            n=n,
            ells=ells,
            noise=noise,
            pc_generator=SplitSupport(masks=(first, second), fill="constant"),
        )
        oracle = _discrepancy_oracle(p, n, ells, noise, (first, second))

        def trial(i):
            ds = generate_dataset(spec, derive_seed(seed, j, i))
            res = shrink_predict(ds.Y, noise, spec.r)
            mse = _mse(res.Xhat, ds.X)
            return abs(oracle - mse), abs(res.amse_estimate - mse)

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "log2_p": int(log2_p),
                "trials": config["trials"],
                "disc_amse": float(res[:, 0].mean()),
                "disc_amse_hat": float(res[:, 1].mean()),
            }
        )
    return ("log2_p", "trials", "disc_amse", "disc_amse_hat"), rows


def _exp_fig_oos(config, seed):
    p = config["p"]
    ells = config["ells"]
    noise = make_noise_cov(p, config["kappa"], profile=config["profile"])
    pcs = blp_pc_generator(p)
    n_lo, n_hi = int(config["n_min"]), int(config["n_max"])

    def trial(i):
        s = derive_seed(seed, 0, i)
        n = int(rng_for(s, 9).integers(n_lo, n_hi + 1))
        spec = SpikedModelSpec(p=p, n=n, ells=ells, noise=noise, pc_generator=pcs)
        ds = generate_dataset(spec, s)
        res = shrink_predict(ds.Y, noise, spec.r)
        mse_in = _mse(res.Xhat, ds.X)
        # Out-of-sample predictor from the same fitted basis.
        agg = ModelAggregates(p=p, n=n, r=spec.r, mu_eps=noise.mu_eps)
        coeffs = np.array([oos_coeff(c, agg) for c in res.components])
        pred = OosPredictor(basis=res.u_w, coeffs=coeffs, noise=noise, components=res.components)
        X0, Y0 = _fresh_pool(ds, s)
        mse_out = _mse(oos_predict(pred, Y0), X0) / n
        return n, mse_in, mse_out

    res = run_trials(trial, config["trials"])
    rows = [
        {"trial": i, "n": int(n), "mse_insample": float(a), "mse_oos": float(b)}
        for i, (n, a, b) in enumerate(res)
    ]
    return ("trial", "n", "mse_insample", "mse_oos"), rows


def _exp_fig_histograms(config, seed):
    p, n = config["p"], config["n"]
    noise = make_noise_cov(p, config["kappa"], profile=config["profile"])
    spec = SpikedModelSpec(p=p, n=n, ells=(config["ell"],), noise=noise)
    raw_edge = noise_bulk_edge(noise, p, n, trials=config["mc_trials"], seed=derive_seed(seed, 10**6))
    w_edge = bulk_edge(p / n)
    eps = config["eps"]
    top = config["top"]

    def trial(i):
        ds = generate_dataset(spec, derive_seed(seed, 0, i))
        sv_raw = all_singular_values(ds.Y)
        sv_w = all_singular_values(noise.whiten(ds.Y))
        rhat_raw = int(np.sum(sv_raw > raw_edge + eps))
        rhat_w = int(np.sum(sv_w > w_edge + eps))
        return sv_raw[:top], sv_w[:top], rhat_raw, rhat_w

    rows = []
    for i, (sv_raw, sv_w, rhat_raw, rhat_w) in enumerate(run_trials(trial, config["trials"])):
        for k in range(top):
            rows.append(
                {
                    "trial": i,
                    "k": k + 1,
                    "sigma_raw": float(sv_raw[k]),
                    "sigma_whitened": float(sv_w[k]),
                    "rhat_raw": rhat_raw,
                    "rhat_whitened": rhat_w,
                }
            )
    schema = ("trial", "k", "sigma_raw", "sigma_whitened", "rhat_raw", "rhat_whitened")
    return schema, rows


def _exp_table_nongaussian(config, seed):
    n = config["n"]
    p = n // 2
    ell = config["ell"]
    nu = np.linspace(config["nu_min"], config["nu_max"], p)
    noise = NoiseModel(values=nu)
    mask = np.ones(p, dtype=bool)
    tau = float(np.mean(1.0 / nu))
    gamma = p / n
    ell_w = ell * tau
    c_w = left_cosine(ell_w, gamma)
    s_w = np.sqrt(1.0 - c_w**2)
    c_theory = unwhitened_cosine(c_w, s_w, noise.mu_eps, tau)
    ct_theory = right_cosine(ell_w, gamma)
    rows = []
    dists = tuple(d.strip() for d in config["dist"].split(",") if d.strip())
    for j, dist in enumerate(dists):
        spec = SpikedModelSpec(
            p=p,
            n=n,
            ells=(ell,),
            noise=noise,
            pc_generator=SplitSupport(masks=(mask,), fill="constant"),
            noise_dist=dist,
        )

        def trial(i):
            ds = generate_dataset(spec, derive_seed(seed, j, i))
            Yw = noise.whiten(ds.Y)
            U, s, Vt = topk_svd(Yw, 1)
            uhat = noise.unwhiten(U[:, 0])
            uhat /= np.linalg.norm(uhat)
            v_true = ds.Z[:, 0] / np.linalg.norm(ds.Z[:, 0])
            cos_outer = abs(float(ds.U[:, 0] @ uhat))
            cos_inner = abs(float(v_true @ Vt[0]))
            return abs(c_theory - cos_outer), abs(ct_theory - cos_inner)

        res = np.array(run_trials(trial, config["trials"]))
        rows.append(
            {
                "n": n,
                "dist": dist,
                "trials": config["trials"],
                "disc_outer": float(res[:, 0].mean()),
                "disc_inner": float(res[:, 1].mean()),
            }
        )
    return ("n", "dist", "trials", "disc_outer", "disc_inner"), rows


# --- registry -------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    fn: Callable
    defaults: dict
    description: str


EXPERIMENTS = {
    "shrinker-curves": Experiment(
        _exp_shrinker_curves,
        {
            "gamma": 0.5,
            "tau": 1.0,
            "mu_eps": 1.0,
            "sigma_min": 1.0,
            "sigma_max": 4.0,
            "points": 200,
        },
        "optimal / naive / population singular value curves over a sigma grid",
    ),
    "fig-blp": Experiment(
        _exp_fig_blp,
        {
            "p": 100,
            "kappa": 100.0,
            "ells": (4.0, 2.0, 1.0),
            "ns": (500, 1000, 2000, 4000, 8000),
            "profile": "unit_norm_linspace",
            "trials": 500,
            "scale": 1.0,
        },
        "whitened shrinkage vs OptShrink vs the BLP oracle as n grows",
    ),
    "fig-comparison": Experiment(
        _exp_fig_comparison,
        {
            "p": 1000,
            "kappa": 100.0,
            "ns": (500, 1000, 2000, 4000),
            "spike_domain": "unwhitened",
            "trials": 50,
            "scale": 1.0,
        },
        "relative signal prediction error: optimal / naive whitened, OptShrink",
    ),
    "fig-comparison-cov": Experiment(
        _exp_fig_comparison_cov,
        {
            "p": 1000,
            "kappa": 100.0,
            "ns": (1000, 2000, 4000),
            "spike_domain": "unwhitened",
            "trials": 50,
            "scale": 1.0,
        },
        "relative nuclear error of covariance estimates: whitened optimal / population, unwhitened",
    ),
    "fig-cosines": Experiment(
        _exp_fig_cosines,
        {
            "p": 500,
            "n": 1000,
            "ell": 0.1,
            "kappas": (10.0, 100.0, 1000.0),
            "profile": "unit_norm_linspace",
            "trials": 50,
            "scale": 1.0,
        },
        "cosines of empirical vs population components, whitened and raw",
    ),
    "fig-estcov": Experiment(
        _exp_fig_estcov,
        {
            "p": 500,
            "n": 625,
            "ells": (9.0, 25.0),
            "nu_min": 0.01,
            "nu_max": 0.2,
            "n_primes": (500, 1250, 2500, 5000, 10000),
            "trials": 2000,
            "scale": 1.0,
        },
        "prediction error with a sample noise covariance vs the true one",
    ),
    "fig-discrepancies": Experiment(
        _exp_fig_discrepancies,
        {
            "gamma": 0.8,
            "ells": (9.0, 4.0),
            "nu_min": 0.005,
            "nu_max": 1.5,
            "log2_ps": (7, 8, 9, 10),
            "trials": 200,
            "scale": 1.0,
        },
        "discrepancy between limiting, estimated, and realized MSE vs dimension",
    ),
    "fig-oos": Experiment(
        _exp_fig_oos,
        {
            "p": 500,
            "n_min": 501,
            "n_max": 1250,
            "kappa": 100.0,
            "ells": (4.0, 2.0, 1.0),
            "profile": "unit_norm_linspace",
            "trials": 2000,
            "scale": 1.0,
        },
        "per-trial in-sample vs out-of-sample prediction error",
    ),
    "fig-histograms": Experiment(
        _exp_fig_histograms,
        {
            "p": 500,
            "n": 1000,
            "ell": 0.5,
            "kappa": 100.0,
            "profile": "linspace_inv_kappa",
            "eps": 0.05,
            "mc_trials": 20,
            "top": 20,
            "trials": 100,
            "scale": 1.0,
        },
        "top singular values and rank detections, raw vs whitened",
    ),
    "table-nongaussian": Experiment(
        _exp_table_nongaussian,
        {
            "n": 1000,
            "ell": 1.0,
            "nu_min": 0.002,
            "nu_max": 1.0,
            "dist": "gaussian,rademacher,t10,t3",
            "trials": 2000,
            "scale": 1.0,
        },
        "cosine discrepancy between theory and observation under non-Gaussian noise",
    ),
}


def experiment_names():
    return sorted(EXPERIMENTS)


def _coerce(key, default, value):
    if isinstance(value, type(default)) and not isinstance(default, tuple):
        return value
    if isinstance(default, bool):
        if str(value).lower() in ("1", "true", "yes"):
            return True
        if str(value).lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"config {key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, str):
        return str(value)
    if isinstance(default, tuple):
        elem = type(default[0]) if default else float
        if isinstance(value, (tuple, list)):
            return tuple(elem(v) for v in value)
        return tuple(elem(v) for v in str(value).split(",") if v != "")
    raise ValueError(f"config {key}: unsupported type {type(default).__name__}")


def run_experiment(name, overrides=None, seed=0, out_dir=None):
    """Run a named experiment and optionally write CSV + config sidecar.

    overrides must use keys present in the experiment's defaults; the
    global "scale" key multiplies every trial count (floored at 1) for
    quick runs. Identical (name, overrides, seed) give identical bytes.
    """
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; known: {', '.join(experiment_names())}")
    exp = EXPERIMENTS[name]
    config = dict(exp.defaults)
    for key, value in (overrides or {}).items():
        if key not in config:
            raise ValueError(f"unknown config key {key!r} for experiment {name}")
        config[key] = _coerce(key, exp.defaults[key], value)
    scale = config.get("scale", 1.0)
    if scale != 1.0:
        for key, value in config.items():
            if key == "trials" or key.endswith("_trials"):
                config[key] = max(1, int(round(value * scale)))
    schema, rows = exp.fn(config, seed)
    stored = dict(config)
    stored["seed"] = int(seed)
    stored["name"] = name
    report = ExperimentReport(name=name, config=stored, schema=tuple(schema), rows=tuple(rows))
    if out_dir is not None:
        report.write(out_dir)
    return report

"""Command-line front end.

Input matrices are raw samples (p rows = coordinates, columns =
observations) in CSV or .hsmx binary; they are rescaled internally and the
outputs are rescaled back, so the shapes and units match the inputs.

Exit codes: 0 success, 2 validation error, 3 numeric failure.
"""

import argparse
import sys

import numpy as np

from .eig_shrinkage import LossFunction, cov_estimate
from .errors import EstimationError, NumericError, WhiteningError
from .harness import EXPERIMENTS, experiment_names, run_experiment
from .matio import load_matrix, save_matrix
from .model_sim import NoiseModel
from .prediction import fit_oos_predictor, load_predictor, oos_predict, save_predictor
from .rank_and_noise import (
    diag_noise_var,
    estimate_rank_raw,
    estimate_rank_whitened,
    ingest,
    sample_noise_cov,
)
from .sv_shrinkage import shrink_predict


def _add_noise_flags(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--noise-cov", metavar="FILE", help="dense noise covariance matrix file")
    group.add_argument("--noise-diag", metavar="FILE", help="per-coordinate noise variances (p x 1 file)")
    group.add_argument(
        "--estimate-noise",
        metavar="HOW",
        help='"diag" for per-coordinate sample variances of the data, or '
        '"sample:FILE" for the sample covariance of a pure-noise pool',
    )


def _resolve_noise(args, samples):
    if args.noise_cov:
        return NoiseModel(matrix=load_matrix(args.noise_cov))
    if args.noise_diag:
        values = load_matrix(args.noise_diag)
        return NoiseModel(values=np.asarray(values).reshape(-1))
    how = args.estimate_noise
    if how == "diag":
        return diag_noise_var(samples)
    if how.startswith("sample:"):
        return sample_noise_cov(load_matrix(how[len("sample:"):]))
    raise ValueError(f'bad --estimate-noise value {how!r}; use "diag" or "sample:FILE"')


def _cmd_shrink(args):
    samples = load_matrix(args.input)
    noise = _resolve_noise(args, samples)
    Y, mean = ingest(samples, center=args.center)
    result = shrink_predict(Y, noise, args.rank, shrinker=args.shrinker)
    out = result.Xhat * np.sqrt(samples.shape[1]) + mean[:, None]
    save_matrix(args.out, out)
    return 0


def _cmd_cov(args):
    samples = load_matrix(args.input)
    noise = _resolve_noise(args, samples)
    Y, _ = ingest(samples, center=args.center)
    est = cov_estimate(
        Y, noise, args.rank, loss=LossFunction.named(args.loss),
        orthogonalize=args.orthogonalize,
    )
    save_matrix(args.out, est.Sigma_x_hat)
    return 0


def _cmd_oos_fit(args):
    samples = load_matrix(args.input)
    noise = _resolve_noise(args, samples)
    Y, _ = ingest(samples)
    pred = fit_oos_predictor(Y, noise, args.rank)
    save_predictor(args.out, pred)
    return 0


def _cmd_oos_predict(args):
    pred = load_predictor(args.predictor)
    Y0 = load_matrix(args.input)
    save_matrix(args.out, oos_predict(pred, Y0))
    return 0


def _cmd_rank(args):
    samples = load_matrix(args.input)
    noise = _resolve_noise(args, samples)
    Y, _ = ingest(samples)
    if args.raw:
        r = estimate_rank_raw(Y, noise, eps=args.eps, mc_trials=args.mc_trials, seed=args.seed)
    else:
        gamma = Y.shape[0] / Y.shape[1]
        r = estimate_rank_whitened(noise.whiten(Y), gamma, eps=args.eps)
    print(r)
    return 0


def _cmd_experiment(args):
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    report = run_experiment(args.name, overrides, seed=args.seed, out_dir=args.out)
    print(f"{args.name}: {len(report.rows)} rows -> {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hetshrink",
        description="Spectral shrinkage with noise whitening for heteroscedastic spiked models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shrink", help="denoise a data matrix by whitened singular value shrinkage")
    p.add_argument("input", help="data matrix file (p x n raw samples)")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--shrinker", choices=("optimal", "naive", "population"), default="optimal")
    p.add_argument("--center", action="store_true", help="subtract per-coordinate means first")
    p.add_argument("--out", default="Xhat.csv")
    _add_noise_flags(p)
    p.set_defaults(fn=_cmd_shrink)

    p = sub.add_parser("cov", help="estimate the signal covariance by whitened eigenvalue shrinkage")
    p.add_argument("input")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--loss", choices=("fro", "op", "nuc"), default="fro")
    p.add_argument("--center", action="store_true")
    p.add_argument("--orthogonalize", action="store_true",
                   help="symmetrically orthogonalize the basis before assembly")
    p.add_argument("--out", default="Sigma_x.csv")
    _add_noise_flags(p)
    p.set_defaults(fn=_cmd_cov)

    p = sub.add_parser("oos-fit", help="fit an out-of-sample predictor from in-sample data")
    p.add_argument("input")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--out", default="predictor.hsos")
    _add_noise_flags(p)
    p.set_defaults(fn=_cmd_oos_fit)

    p = sub.add_parser("oos-predict", help="apply a fitted predictor to fresh observations")
    p.add_argument("predictor", help="predictor file from oos-fit")
    p.add_argument("input", help="matrix of fresh observations (p x m)")
    p.add_argument("--out", default="Xhat0.csv")
    p.set_defaults(fn=_cmd_oos_predict)

    p = sub.add_parser("rank", help="estimate the signal rank")
    p.add_argument("input")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--whitened", action="store_true", default=True,
                      help="count whitened singular values above 1 + sqrt(gamma) + eps (default)")
    mode.add_argument("--raw", action="store_true",
                      help="count raw singular values above a Monte-Carlo noise edge + eps")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--mc-trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_noise_flags(p)
    p.set_defaults(fn=_cmd_rank)

    p = sub.add_parser("experiment", help="run a named experiment and write CSV + config")
    p.add_argument("name", choices=experiment_names())
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="reports")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("list-experiments", help="list experiment names and defaults")
    p.set_defaults(fn=_cmd_list)
    return parser


def _cmd_list(args):
    for name in experiment_names():
        exp = EXPERIMENTS[name]
        print(f"{name}: {exp.description}")
        for key, value in exp.defaults.items():
            print(f"    {key}={value}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (WhiteningError, EstimationError, NumericError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

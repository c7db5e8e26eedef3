"""Rank estimation and noise-covariance estimation.

Rank: count singular values sticking out of the noise bulk, either of the
whitened matrix (edge 1 + sqrt(gamma), known in closed form) or of the raw
matrix (edge estimated by Monte Carlo from the noise model). Noise: sample
covariance from a pure-noise pool, or per-coordinate variances when the
noise is known to be diagonal and the signal components are delocalized.

Scaling conventions: the rank estimators take matrices in the package's
1/sqrt(n) column scaling; the noise estimators take raw samples (columns
as observed). ``ingest`` converts raw samples to the internal scaling.
"""

import warnings

import numpy as np

from .linalg import all_singular_values, op_norm
from .model_sim import NoiseModel, rng_for, sample_iid
from .spectral_params import bulk_edge

__all__ = [
    "ingest",
    "estimate_rank_whitened",
    "estimate_rank_raw",
    "noise_bulk_edge",
    "sample_noise_cov",
    "diag_noise_var",
]

# Condition number above which a sample noise covariance, while invertible,
# is flagged as unreliable for whitening.
_ILL_CONDITIONED = 1e3


def ingest(samples, center=False):
    """Convert raw samples (p x n, columns = observations) to internal scaling.

    Optionally subtracts the per-coordinate sample mean first. Returns
    (Y, mean) with Y = samples / sqrt(n).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("expected a p x n sample matrix")
    n = samples.shape[1]
    mean = samples.mean(axis=1) if center else np.zeros(samples.shape[0])
    return (samples - mean[:, None]) / np.sqrt(n), mean


def estimate_rank_whitened(Yw, gamma, eps=0.05):
    """Number of singular values of the whitened matrix above 1 + sqrt(gamma) + eps."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    threshold = bulk_edge(gamma) + eps
    if not np.isfinite(threshold):
        return 0
    s = all_singular_values(Yw)
    return int(np.sum(s > threshold))


def noise_bulk_edge(noise, p, n, trials=20, seed=0):
    """Monte-Carlo estimate of the operator norm of a pure-noise matrix.

    Averages the top singular value of ``trials`` independent draws of
    Sigma_eps^{1/2} G / sqrt(n). Per-trial streams are derived from the
    seed, so the estimate is reproducible and independent of trial order.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    tops = []
    for i in range(trials):
        G = sample_iid(rng_for(seed, i), (p, n), "gaussian")
        tops.append(op_norm(noise.unwhiten(G) / np.sqrt(n)))
    return float(np.mean(tops))


def estimate_rank_raw(Y, noise, eps=0.05, mc_trials=20, seed=0, edge=None):
    """Rank estimate from the raw matrix against a Monte-Carlo noise edge.

    Counts singular values of Y above b_plus + eps where b_plus is the
    estimated operator norm of pure noise (pass a precomputed ``edge`` to
    share it across a sweep).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    Y = np.asarray(Y, dtype=float)
    if edge is None:
        edge = noise_bulk_edge(noise, Y.shape[0], Y.shape[1], trials=mc_trials, seed=seed)
    threshold = edge + eps
    if not np.isfinite(threshold):
        return 0
    s = all_singular_values(Y)
    return int(np.sum(s > threshold))


def sample_noise_cov(noise_samples):
    """Sample covariance of a pure-noise pool, wrapped for whitening.

    noise_samples is p x n' of raw noise observations. The estimate is
    (1/n') sum_j eps_j eps_j^T as a dense NoiseModel. Fewer samples than
    dimensions leaves the matrix rank-deficient, which cannot be whitened
    and raises WhiteningError; a barely-invertible estimate triggers an
    ill-conditioning warning.
    """
    E = np.asarray(noise_samples, dtype=float)
    if E.ndim != 2:
        raise ValueError("expected a p x n' noise sample matrix")
    p, n_prime = E.shape
    if n_prime < p:
        warnings.warn(
            f"only {n_prime} noise samples for dimension {p}; "
            "sample covariance will be rank deficient"
        )
    S = (E @ E.T) / n_prime
    model = NoiseModel(matrix=S)  # raises WhiteningError when degenerate
    w = model.eigenvalues
    if w[0] > 0 and w[-1] / w[0] > _ILL_CONDITIONED:
        warnings.warn(
            f"sample noise covariance is ill-conditioned "
            f"(condition number {w[-1] / w[0]:.1e}); whitening may be unstable"
        )
    return model


def diag_noise_var(samples):
    """Per-coordinate noise variances from raw data samples.

    Returns a diagonal NoiseModel with nu_i = (1/n) sum_j (Y_ij - mean_i)^2.
    Valid when the noise covariance is diagonal and the signal components
    are delocalized (max entry -> 0), otherwise the estimate keeps a signal
    contribution of order ell * max_i u_i^2 per coordinate.
    """
    Y = np.asarray(samples, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 2:
        raise ValueError("need a p x n sample matrix with n >= 2")
    centered = Y - Y.mean(axis=1, keepdims=True)
    nu = np.mean(centered * centered, axis=1)
    return NoiseModel(values=nu)

"""Subspace and signal-to-noise diagnostics for PCA comparisons."""

import numpy as np

from .errors import NumericError
from .linalg import op_norm, topk_svd

__all__ = ["empirical_pcs", "sin_theta", "snr_operator", "phi", "fix_signs"]


def fix_signs(U):
    """Flip columns so each one's largest-magnitude entry is positive.

    Makes singular vectors deterministic up to the decomposition itself,
    so cosines can be averaged across Monte-Carlo runs.
    """
    U = np.array(U, dtype=float, copy=True)
    if U.ndim == 1:
        U = U[:, None]
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def empirical_pcs(Yw, noise, r):
    """Estimated principal components W^{-1} u_w_hat_k, normalized.

    Columns are unit norm with the largest-magnitude entry positive. These
    span the left subspace of the shrinkage prediction; they are not the
    left singular vectors of the raw data unless the noise is white.
    """
    U, _, _ = topk_svd(np.asarray(Yw, dtype=float), r)
    B = noise.unwhiten(U)
    norms = np.linalg.norm(B, axis=0)
    if np.any(norms == 0):
        raise NumericError("degenerate singular vector with zero unwhitened norm")
    return fix_signs(B / norms)


def _orthonormalize(U, name):
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    Q, R = np.linalg.qr(U)
    diag = np.abs(np.diag(R))
    if np.any(diag < 1e-10 * max(diag.max(initial=0.0), 1.0)):
        raise ValueError(f"{name} has linearly dependent columns")
    return Q


def sin_theta(U, Uhat):
    """Operator-norm sine of the largest principal angle between two spans.

    Both inputs are orthonormalized internally; 0 means equal spans, 1
    orthogonal ones. For one-dimensional subspaces this is
    sqrt(1 - <u, uhat>^2).
    """
    Q = _orthonormalize(U, "U")
    Qhat = _orthonormalize(Uhat, "Uhat")
    if Q.shape[0] != Qhat.shape[0]:
        raise ValueError("subspaces live in different ambient dimensions")
    resid = Q - Qhat @ (Qhat.T @ Q)
    s = np.linalg.svd(resid, compute_uv=False)
    return float(min(1.0, s.max(initial=0.0)))


def snr_operator(X, N):
    """Operator-norm signal-to-noise ratio ||X||_op^2 / ||N||_op^2.

    Equals the ratio of the top eigenvalues of the signal and noise sample
    covariances. Pass the whitened pair (Xw, G) for the whitened SNR.
    """
    X = np.asarray(X, dtype=float)
    N = np.asarray(N, dtype=float)
    if X.shape != N.shape:
        raise ValueError("signal and noise matrices must have the same shape")
    noise_norm = op_norm(N)
    if noise_norm == 0:
        raise NumericError("zero noise matrix; SNR undefined")
    return float(op_norm(X) ** 2 / noise_norm**2)


def phi(noise):
    """Heteroscedasticity factor (tr Sigma^{-1}/p) * (tr Sigma/p).

    At least 1 by Jensen's inequality, with equality exactly for scalar
    covariances; whitening boosts the operator-norm SNR by this factor for
    generic signal components.
    """
    return float(noise.inv_trace_mean * noise.mu_eps)

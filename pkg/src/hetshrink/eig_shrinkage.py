"""Eigenvalue shrinkage of the whitened sample covariance.

For orthogonally-invariant, block-decomposable losses the optimal
replacement eigenvalue solves a 2x2 problem per component: minimize
L(A, t B) over t, where A carries the true variance and B the rank-one
outer product of the estimated component at cosine c. Closed forms exist
for Frobenius (ell c^2), operator (ell), and nuclear (max(ell(2c^2-1), 0))
losses; anything else goes through a golden-section search.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericError
from .spectral_params import estimate_components_svd

__all__ = [
    "LossFunction",
    "FROBENIUS",
    "OPERATOR",
    "NUCLEAR",
    "golden_section",
    "block_matrices",
    "shrink_eigenvalue",
    "CovEstimate",
    "cov_estimate",
    "cov_loss",
]

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LossFunction:
    """Covariance loss selector: fro / op / nuc, or a custom 2x2 block loss.

    A custom loss is a callable L(A, M) on 2x2 symmetric matrices, finite
    on the search bracket and unimodal in the scale of M.
    """

    kind: str
    block_loss: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("frobenius", "operator", "nuclear", "custom"):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if (self.kind == "custom") != (self.block_loss is not None):
            raise ValueError("custom losses need block_loss; named losses must not set it")

    @classmethod
    def named(cls, name):
        aliases = {
            "fro": "frobenius",
            "frobenius": "frobenius",
            "op": "operator",
            "operator": "operator",
            "nuc": "nuclear",
            "nuclear": "nuclear",
        }
        if name not in aliases:
            raise ValueError(f"unknown loss {name!r}")
        return cls(kind=aliases[name])

    @classmethod
    def custom(cls, block_loss):
        return cls(kind="custom", block_loss=block_loss)


FROBENIUS = LossFunction.named("fro")
OPERATOR = LossFunction.named("op")
NUCLEAR = LossFunction.named("nuc")


def golden_section(f, a, b, rel_tol=1e-8, max_iter=200):
    """Minimize a unimodal scalar function on [a, b].

    Returns the midpoint of the final bracket. Raises NumericError if the
    bracket has not shrunk below rel_tol * max(|a|, |b|, 1) within
    max_iter iterations or the function returns non-finite values.
    """
    if b < a:
        raise ValueError("need a <= b")
    tol = rel_tol * max(abs(a), abs(b), 1.0)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if not (np.isfinite(fc) and np.isfinite(fd)):
            raise NumericError(f"loss returned non-finite value on [{a}, {b}]")
        if b - a <= tol:
            return 0.5 * (a + b)
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    raise NumericError(
        f"golden section did not converge: bracket [{a:.6g}, {b:.6g}] after {max_iter} iterations"
    )


def block_matrices(ell, c):
    """2x2 blocks (A, B) of the jointly block-diagonalized covariances.

    A = diag(ell, 0); B is the rank-one projector of a unit vector at
    cosine c to the first axis, so trace(B) = 1.
    """
    if ell <= 0:
        raise ValueError("ell must be positive")
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ValueError("cosine must lie in [0, 1]")
    s = np.sqrt(max(0.0, 1.0 - c * c))
    A = np.array([[ell, 0.0], [0.0, 0.0]])
    B = np.array([[c * c, c * s], [c * s, s * s]])
    return A, B


def shrink_eigenvalue(loss, ell, c):
    """Optimal replacement eigenvalue t~^2 = argmin_t L(A, t B).

    Closed forms for the named losses; custom losses are minimized
    numerically over [0, 4 ell], which covers the operator-loss optimum
    ell with margin.
    """
    if ell <= 0:
        raise ValueError("ell must be positive")
    c2 = c * c
    if loss.kind == "frobenius":
        return float(ell * c2)
    if loss.kind == "operator":
        return float(ell)
    if loss.kind == "nuclear":
        return float(max(ell * (2.0 * c2 - 1.0), 0.0))
    A, B = block_matrices(ell, c)
    return float(golden_section(lambda t: loss.block_loss(A, t * B), 0.0, 4.0 * ell))


@dataclass(frozen=True)
class CovEstimate:
    """Rank-r signal covariance estimate.

    Sigma_x_hat is assembled in the unwhitened basis W^{-1} u_w_hat without
    re-orthogonalization (the basis is only asymptotically orthogonal);
    t2 are the whitened-basis eigenvalues, tilde_t2 the unwhitened ones.
    """

    Sigma_x_hat: np.ndarray
    tilde_t2: np.ndarray
    t2: np.ndarray
    components: tuple


def _loewdin(B):
    # Symmetric orthogonalization: closest orthonormal basis to B.
    u, _, vt = np.linalg.svd(B, full_matrices=False)
    return u @ vt


def cov_estimate(Y, noise, r, loss=FROBENIUS, orthogonalize=False):
    """Estimate the rank-r signal covariance by whitened eigenvalue shrinkage.

    Shrinks the top-r eigenvalues of the whitened sample covariance under
    the given loss and maps back, Sigma_x_hat = sum_k t2_k b_k b_k^T with
    b_k = W^{-1} u_w_hat_k. With orthogonalize=True the unwhitened basis is
    symmetrically orthogonalized first and the tilde_t2 used directly as
    eigenvalues, giving exactly orthonormal eigenvectors.
    """
    Y = np.asarray(Y, dtype=float)
    p, n = Y.shape
    if noise.p != p:
        raise ValueError("noise dimension does not match Y")
    if r > min(p, n):
        raise ValueError("rank exceeds min(p, n)")
    Yw = noise.whiten(Y)
    comps, U, _, _ = estimate_components_svd(Yw, noise, r)
    tilde_t2 = np.zeros(r)
    t2 = np.zeros(r)
    for k, comp in enumerate(comps):
        if not comp.above_threshold:
            continue
        tilde_t2[k] = shrink_eigenvalue(loss, comp.ell, comp.c)
        denom = comp.c_w**2 + comp.s_w**2 * noise.mu_eps * comp.tau
        t2[k] = tilde_t2[k] * comp.tau / denom
    basis = noise.unwhiten(U) if r else np.zeros((p, 0))
    if orthogonalize and r:
        keep = tilde_t2 > 0
        Q = np.zeros_like(basis)
        if keep.any():
            Q[:, keep] = _loewdin(basis[:, keep] / np.linalg.norm(basis[:, keep], axis=0))
        Sigma = (Q * tilde_t2) @ Q.T
    else:
        Sigma = (basis * t2) @ basis.T
    Sigma = (Sigma + Sigma.T) / 2.0
    return CovEstimate(
        Sigma_x_hat=Sigma, tilde_t2=tilde_t2, t2=t2, components=tuple(comps)
    )


def cov_loss(loss, Sigma_hat, Sigma):
    """Report the loss between two symmetric matrices.

    frobenius: squared Frobenius norm of the difference; operator /
    nuclear: the corresponding norm. Custom block losses have no matrix
    counterpart and are rejected.
    """
    Sigma_hat = np.asarray(Sigma_hat, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma_hat.shape != Sigma.shape or Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise ValueError("covariances must be square matrices of equal shape")
    D = Sigma_hat - Sigma
    if loss.kind == "frobenius":
        return float(np.sum(D * D))
    w = np.linalg.eigvalsh((D + D.T) / 2.0)
    if loss.kind == "operator":
        return float(np.abs(w).max(initial=0.0))
    if loss.kind == "nuclear":
        return float(np.abs(w).sum())
    raise ValueError("custom block losses do not define a matrix loss")

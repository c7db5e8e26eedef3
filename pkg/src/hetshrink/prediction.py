"""Column-form prediction: in-sample coefficients, out-of-sample prediction,
and the best-linear-predictor oracle.

In-sample shrinkage with whitening can be rewritten column by column as
Xhat_j = sum_k eta_k <W Y_j, u_w_hat_k> W^{-1} u_w_hat_k. The same form
predicts a fresh observation Y_0, but the optimal coefficient differs
because Y_0 is independent of the fitted singular vectors. Both choices
attain the same limiting MSE.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .matio import read_binary_block, write_binary_block
from .model_sim import NoiseModel
from .spectral_params import ModelAggregates, estimate_components_svd

__all__ = [
    "insample_coeff",
    "oos_coeff",
    "OosPredictor",
    "fit_oos_predictor",
    "oos_predict",
    "blp_oracle",
    "amse_oos",
    "save_predictor",
    "load_predictor",
]

_OOS_MAGIC = b"HSOS"


def _alpha(comp, agg):
    return 1.0 / (comp.c_w**2 + comp.s_w**2 * agg.mu_eps * comp.tau)


def insample_coeff(comp, agg):
    """Optimal in-sample coefficient alpha * ell_w c_w^2 / (ell_w + 1).

    Equals optimal_t / sigma_w; in the classical p << n limit (c_w -> 1)
    this is the Wiener gain ell / (ell + 1).
    """
    if not comp.above_threshold:
        return 0.0
    return float(_alpha(comp, agg) * comp.ell_w * comp.c_w**2 / (comp.ell_w + 1.0))


def oos_coeff(comp, agg):
    """Optimal out-of-sample coefficient alpha * ell_w c_w^2 / (ell_w c_w^2 + 1).

    Differs from the in-sample coefficient at gamma > 0 because a fresh
    observation is independent of the fitted basis; the two coincide as
    c_w -> 1.
    """
    if not comp.above_threshold:
        return 0.0
    return float(
        _alpha(comp, agg) * comp.ell_w * comp.c_w**2 / (comp.ell_w * comp.c_w**2 + 1.0)
    )


@dataclass(frozen=True)
class OosPredictor:
    """Fitted out-of-sample predictor: whitened basis plus coefficients."""

    basis: np.ndarray  # p x r whitened singular vectors
    coeffs: np.ndarray  # r nonnegative coefficients, 0 below threshold
    noise: NoiseModel
    components: tuple = ()

    @property
    def p(self):
        return self.basis.shape[0]

    @property
    def r(self):
        return self.basis.shape[1]


def fit_oos_predictor(Y, noise, r):
    """Fit the rank-r out-of-sample predictor from in-sample data Y."""
    Y = np.asarray(Y, dtype=float)
    p, n = Y.shape
    if noise.p != p:
        raise ValueError("noise dimension does not match Y")
    if r > min(p, n):
        raise ValueError("rank exceeds min(p, n)")
    Yw = noise.whiten(Y)
    comps, U, _, _ = estimate_components_svd(Yw, noise, r)
    agg = ModelAggregates(p=p, n=n, r=r, mu_eps=noise.mu_eps)
    coeffs = np.array([oos_coeff(comp, agg) for comp in comps])
    return OosPredictor(basis=U, coeffs=coeffs, noise=noise, components=tuple(comps))


def oos_predict(pred, Y0):
    """Predict the signal in fresh observations.

    Y0 is a single p-vector or a p-by-m matrix of columns; the output has
    the same shape and lies in the span of the unwhitened basis.
    """
    Y0 = np.asarray(Y0, dtype=float)
    vec = Y0.ndim == 1
    cols = Y0[:, None] if vec else Y0
    if cols.shape[0] != pred.p:
        raise ValueError(f"expected vectors of length {pred.p}, got {cols.shape[0]}")
    proj = pred.basis.T @ pred.noise.whiten(cols)
    out = pred.noise.unwhiten(pred.basis @ (pred.coeffs[:, None] * proj))
    return out[:, 0] if vec else out


def amse_oos(components, agg):
    """Limiting out-of-sample MSE at the optimal coefficients.

    Sum over detected components of ell_w / tau minus the explained part
    ell_w^2 c_w^4 / (ell_w c_w^2 + 1) * alpha / tau, the ratio of squared
    linear to quadratic coefficients of the per-component objective.
    Identical to the in-sample value sum ell (1 - (c c_tilde)^2).
    """
    total = 0.0
    for comp in components:
        if not comp.above_threshold:
            continue
        alpha = _alpha(comp, agg)
        explained = (
            comp.ell_w**2
            * comp.c_w**4
            / (comp.ell_w * comp.c_w**2 + 1.0)
            * alpha
            / comp.tau
        )
        total += comp.ell_w / comp.tau - explained
    return float(total)


def blp_oracle(Sigma_x, noise, Y, validate=False):
    """Best linear predictor Sigma_x (Sigma_x + Sigma_eps)^{-1} Y.

    Evaluated through the whitened eigendecomposition: with
    W Sigma_x W = V diag(lam) V^T, the predictor is
    W^{-1} V diag(lam / (lam + 1)) V^T W Y, which only ever inverts
    well-conditioned quantities. With validate=True the direct solve is
    also computed and a disagreement beyond 1e-8 relative Frobenius raises
    NumericError.
    """
    Sigma_x = np.asarray(Sigma_x, dtype=float)
    Y = np.asarray(Y, dtype=float)
    p = noise.p
    if Sigma_x.shape != (p, p):
        raise ValueError("signal covariance has wrong shape")
    if Y.shape[0] != p:
        raise ValueError("row dimension of Y does not match the covariances")
    Sw = noise.whiten(noise.whiten(Sigma_x).T)
    lam, V = np.linalg.eigh((Sw + Sw.T) / 2.0)
    gain = lam / (lam + 1.0)
    Xhat = noise.unwhiten(V @ (gain[:, None] * (V.T @ noise.whiten(Y))))
    if validate:
        direct = Sigma_x @ np.linalg.solve(Sigma_x + noise.covariance(), Y)
        scale = max(np.linalg.norm(direct), 1e-300)
        rel = np.linalg.norm(Xhat - direct) / scale
        if rel > 1e-8:
            raise NumericError(
                f"spectral and direct BLP forms disagree (relative {rel:.2e})"
            )
    return Xhat


def save_predictor(path_or_buf, pred):
    """Serialize a predictor: magic, u32 p, u32 r, coefficients, basis block,
    noise block (p-by-1 diagonal variances, or p-by-p dense covariance)."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "wb") if own else path_or_buf
    try:
        fh.write(_OOS_MAGIC)
        fh.write(struct.pack("<II", pred.p, pred.r))
        fh.write(np.asarray(pred.coeffs, dtype="<f8").tobytes())
        write_binary_block(fh, pred.basis)
        if pred.noise.is_diagonal:
            write_binary_block(fh, pred.noise.diagonal_values()[:, None])
        else:
            write_binary_block(fh, pred.noise.covariance())
    finally:
        if own:
            fh.close()


def load_predictor(path_or_buf):
    """Read back a predictor written by save_predictor."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "rb") if own else path_or_buf
    try:
        magic = fh.read(4)
        if magic != _OOS_MAGIC:
            raise ValueError(f"bad predictor magic {magic!r}")
        p, r = struct.unpack("<II", fh.read(8))
        coeffs = np.frombuffer(fh.read(8 * r), dtype="<f8").copy()
        basis = read_binary_block(fh)
        noise_block = read_binary_block(fh)
    finally:
        if own:
            fh.close()
    if basis.shape != (p, r):
        raise ValueError("basis block has inconsistent shape")
    if noise_block.shape[1] == 1 and p != 1:
        noise = NoiseModel(values=noise_block[:, 0])
    else:
        noise = NoiseModel(matrix=noise_block)
    return OosPredictor(basis=basis, coeffs=coeffs, noise=noise)

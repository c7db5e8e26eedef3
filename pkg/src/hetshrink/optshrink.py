"""OptShrink: data-driven singular value shrinkage without whitening.

Comparison baseline. Estimates the D-transform of the noise spectrum from
the non-signal singular values of Y itself and replaces each kept singular
value sigma_k by -2 D(sigma_k) / D'(sigma_k). Makes no use of the noise
covariance.

Reference: Nadakuditi, "OptShrink: An Algorithm for Improved Low-Rank
Signal Matrix Denoising by Optimal, Data-Driven Singular Value Shrinkage",
IEEE Trans. Inf. Theory 60(5), 2014.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .linalg import all_singular_values, topk_svd

__all__ = ["OptShrinkComponent", "optshrink_params", "optshrink_predict"]


@dataclass(frozen=True)
class OptShrinkComponent:
    """D-transform estimates for one kept component.

    ell_hat = 1 / D(sigma) estimates the squared signal singular value;
    c2 / ctilde2 estimate the squared left/right cosines; weight is the
    shrunken singular value, clamped at zero.
    """

    sigma: float
    ell_hat: float
    c2: float
    ctilde2: float
    weight: float


def _transforms(z, noise_sv, p, n, r):
    # phi1 / phi2 are the Cauchy-like transforms of the empirical noise
    # spectrum, with 1/z terms standing in for the |p - n| implicit zero
    # singular values; D is their product. The derivative is evaluated
    # analytically from the same sums (finite differences are fragile next
    # to the poles).
    q = min(p, n)
    diff = z * z - noise_sv * noise_sv
    if np.any(np.abs(diff) < 1e-12 * z * z):
        raise NumericError(
            f"singular value {z:.6g} coincides with a noise singular value; "
            "D-transform has a pole there"
        )
    base = np.sum(z / diff)
    dbase = np.sum(-(z * z + noise_sv * noise_sv) / diff**2)
    phi1 = (base + (n - q) / z) / (n - r)
    phi2 = (base + (p - q) / z) / (p - r)
    dphi1 = (dbase - (n - q) / z**2) / (n - r)
    dphi2 = (dbase - (p - q) / z**2) / (p - r)
    D = phi1 * phi2
    dD = phi1 * dphi2 + phi2 * dphi1
    return phi1, phi2, D, dD


def optshrink_params(Y, r):
    """D-transform estimates and top-r singular vectors of Y.

    Returns (components, U, Vt) with U p-by-r and Vt r-by-n. The noise
    spectrum is every singular value past the r-th.
    """
    Y = np.asarray(Y, dtype=float)
    p, n = Y.shape
    if not 0 <= r < min(p, n):
        raise ValueError("need 0 <= r < min(p, n): the noise spectrum must be non-empty")
    s_all = all_singular_values(Y)
    U, s_top, Vt = topk_svd(Y, r)
    noise_sv = s_all[r:]
    comps = []
    for k in range(r):
        z = float(s_top[k])
        phi1, phi2, D, dD = _transforms(z, noise_sv, p, n, r)
        ell_hat = 1.0 / D if D > 0 else np.inf
        # left cosine pairs with the p-side transform, right with the n-side
        comps.append(
            OptShrinkComponent(
                sigma=z,
                ell_hat=float(ell_hat),
                c2=float(np.clip(-2.0 * phi2 / (ell_hat * dD), 0.0, 1.0)),
                ctilde2=float(np.clip(-2.0 * phi1 / (ell_hat * dD), 0.0, 1.0)),
                weight=float(max(0.0, -2.0 * D / dD)),
            )
        )
    return comps, U, Vt


def optshrink_predict(Y, r):
    """Rank-r denoised matrix using OptShrink weights."""
    Y = np.asarray(Y, dtype=float)
    comps, U, Vt = optshrink_params(Y, r)
    if r == 0:
        return np.zeros_like(Y)
    w = np.array([comp.weight for comp in comps])
    return (U * w) @ Vt

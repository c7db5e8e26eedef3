"""Singular value shrinkage with whitening: whiten, shrink, unwhiten.

The optimal replacement value accounts for the change in angles caused by
unwhitening; the naive variant optimizes in the whitened domain only, and
the population variant substitutes the raw estimated spike. All variants
send below-threshold components to zero.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral_params import ModelAggregates, estimate_components_svd

__all__ = [
    "optimal_t",
    "naive_t",
    "population_t",
    "hard_threshold_t",
    "SHRINKERS",
    "ShrinkageResult",
    "shrink_predict",
    "insample_amse",
]


def optimal_t(comp, agg):
    """Frobenius-optimal whitened singular value.

    t = sqrt(ell_w) c_w c_tilde / (c_w^2 + s_w^2 mu_eps tau); the
    denominator corrects for the angle change under unwhitening.
    """
    if not comp.above_threshold:
        return 0.0
    denom = comp.c_w**2 + comp.s_w**2 * agg.mu_eps * comp.tau
    return float(np.sqrt(comp.ell_w) * comp.c_w * comp.c_tilde / denom)


def naive_t(comp, agg):
    """Whitened-domain optimum sqrt(ell_w) c_w c_tilde (ignores unwhitening)."""
    if not comp.above_threshold:
        return 0.0
    return float(np.sqrt(comp.ell_w) * comp.c_w * comp.c_tilde)


def population_t(comp, agg):
    """Estimated population singular value sqrt(ell_w), no shrinkage."""
    if not comp.above_threshold:
        return 0.0
    return float(np.sqrt(comp.ell_w))


def hard_threshold_t(comp, agg):
    """Keep the observed singular value when above the bulk edge, else 0."""
    if not comp.above_threshold:
        return 0.0
    return float(comp.sigma_w)


SHRINKERS = {
    "optimal": optimal_t,
    "naive": naive_t,
    "population": population_t,
    "hard_threshold_passthrough": hard_threshold_t,
}


@dataclass(frozen=True)
class ShrinkageResult:
    """Rank-r prediction of the signal matrix.

    Xhat is in the original (unwhitened) coordinates; t holds the whitened
    singular values after shrinkage; u_w / v_w are the whitened singular
    vectors the prediction was assembled from.
    """

    Xhat: np.ndarray
    t: np.ndarray
    components: tuple
    amse_estimate: float
    u_w: np.ndarray
    v_w: np.ndarray
    warnings: tuple = ()


def insample_amse(components):
    """Estimated limiting MSE sum_k ell_k (1 - (c_k c_tilde_k)^2)."""
    return float(
        sum(
            comp.ell * (1.0 - (comp.c * comp.c_tilde) ** 2)
            for comp in components
            if comp.above_threshold
        )
    )


def shrink_predict(Y, noise, r, shrinker="optimal"):
    """Rank-r signal prediction by shrinkage of the whitened singular values.

    Y is p-by-n in the 1/sqrt(n) column scaling; shrinker is a name from
    SHRINKERS or a callable (component, aggregates) -> t. Requesting more
    components than are detectable is not an error: the excess contributes
    zero and a warning is recorded on the result.
    """
    if callable(shrinker):
        rule = shrinker
    else:
        try:
            rule = SHRINKERS[shrinker]
        except KeyError:
            raise ValueError(f"unknown shrinker {shrinker!r}") from None
    Y = np.asarray(Y, dtype=float)
    p, n = Y.shape
    if noise.p != p:
        raise ValueError("noise dimension does not match Y")
    if r > min(p, n):
        raise ValueError("rank exceeds min(p, n)")
    Yw = noise.whiten(Y)
    comps, U, s, Vt = estimate_components_svd(Yw, noise, r)
    agg = ModelAggregates(p=p, n=n, r=r, mu_eps=noise.mu_eps)
    t = np.array([rule(comp, agg) for comp in comps], dtype=float)
    Xhat = noise.unwhiten((U * t) @ Vt) if r else np.zeros_like(Y)
    notes = ()
    detected = sum(comp.above_threshold for comp in comps)
    if detected < r:
        msg = f"requested rank {r} but only {detected} components above the detection edge"
        warnings.warn(msg)
        notes = (msg,)
    return ShrinkageResult(
        Xhat=Xhat,
        t=t,
        components=tuple(comps),
        amse_estimate=insample_amse(comps),
        u_w=U,
        v_w=Vt.T,
        warnings=notes,
    )

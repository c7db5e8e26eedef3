"""Asymptotic parameter maps for the whitened spiked model.

After whitening, the data matrix is signal-plus-white-noise, so the
classical spiked-model formulas apply: a planted variance ell above the
detection threshold sqrt(gamma) maps to an observed singular value above
the bulk edge 1 + sqrt(gamma), with deterministic limiting cosines between
empirical and population singular vectors. The extra ingredient for
heteroscedastic noise is tau, the squared precision-weighted norm of the
population component, which links the whitened and unwhitened domains and
is itself estimable from the data.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .linalg import topk_svd

__all__ = [
    "ModelAggregates",
    "ComponentEstimate",
    "bulk_edge",
    "sigma_from_spike",
    "spike_from_sigma",
    "left_cosine",
    "right_cosine",
    "estimate_tau",
    "unwhitened_cosine",
    "estimate_components",
    "estimate_components_svd",
]


@dataclass(frozen=True)
class ModelAggregates:
    """Dimensions and noise summaries shared by all components."""

    p: int
    n: int
    r: int
    mu_eps: float

    @property
    def gamma(self):
        return self.p / self.n


@dataclass(frozen=True)
class ComponentEstimate:
    """Estimated parameters of one spiked component.

    sigma_w   observed singular value of the whitened matrix
    ell_w     whitened signal variance
    c_w, s_w  cosine/sine between whitened empirical and population left vectors
    c_tilde   cosine between empirical and population right vectors
    tau       limiting ||W u||^2 linking the two domains (ell_w = ell * tau)
    ell       unwhitened signal variance ell_w / tau
    c         cosine between unwhitened empirical and population components

    Below the detection edge all cosines and variances are zeroed and tau
    is reported as 1.
    """

    sigma_w: float
    ell_w: float
    c_w: float
    s_w: float
    c_tilde: float
    tau: float
    ell: float
    c: float
    above_threshold: bool


def bulk_edge(gamma):
    """Largest singular value attributable to white noise, 1 + sqrt(gamma)."""
    return 1.0 + np.sqrt(gamma)


def sigma_from_spike(ell_w, gamma):
    """Limiting top singular value for a whitened spike of variance ell_w.

    Returns sqrt((ell_w + 1)(1 + gamma/ell_w)) above the detection
    threshold sqrt(gamma), and the bulk edge 1 + sqrt(gamma) at or below it.
    """
    if ell_w <= np.sqrt(gamma):
        return bulk_edge(gamma)
    return float(np.sqrt((ell_w + 1.0) * (1.0 + gamma / ell_w)))


def spike_from_sigma(sigma_w, gamma):
    """Inverse of sigma_from_spike; None at or below the bulk edge.

    The discriminant is evaluated in the factored form
    (sigma^2 - (1+sqrt(gamma))^2)(sigma^2 - (1-sqrt(gamma))^2), which is
    stable near the edge.
    """
    edge = bulk_edge(gamma)
    if sigma_w <= edge:
        return None
    s2 = sigma_w * sigma_w
    rg = np.sqrt(gamma)
    disc = (s2 - edge * edge) * (s2 - (1.0 - rg) ** 2)
    return float((s2 - 1.0 - gamma + np.sqrt(disc)) / 2.0)


def left_cosine(ell_w, gamma):
    """Limiting |<u_w, u_w_hat>| for a whitened spike; 0 below threshold."""
    if ell_w <= np.sqrt(gamma):
        return 0.0
    return float(np.sqrt((1.0 - gamma / ell_w**2) / (1.0 + gamma / ell_w)))


def right_cosine(ell_w, gamma):
    """Limiting |<v_w, v_w_hat>| for a whitened spike; 0 below threshold."""
    if ell_w <= np.sqrt(gamma):
        return 0.0
    return float(np.sqrt((1.0 - gamma / ell_w**2) / (1.0 + 1.0 / ell_w)))


def estimate_tau(c_w, s_w, mu_eps, sigma_quad_value):
    """Estimate tau from the observed Sigma_eps-norm of a whitened vector.

    sigma_quad_value is ||Sigma_eps^{1/2} u_w_hat||^2. Its limit equals
    c_w^2 / tau + s_w^2 mu_eps, so tau = c_w^2 / (value - s_w^2 mu_eps).
    A non-positive denominator is a finite-sample pathology and raises
    EstimationError; callers may demote the component to below-threshold.
    """
    denom = sigma_quad_value - s_w * s_w * mu_eps
    if denom <= 0:
        raise EstimationError(
            f"tau denominator {denom:.3e} is not positive; component too close "
            "to the bulk for reliable estimation"
        )
    return float(c_w * c_w / denom)


def unwhitened_cosine(c_w, s_w, mu_eps, tau):
    """Limiting cosine between unwhitened empirical and population components."""
    cw2 = c_w * c_w
    return float(np.sqrt(cw2 / (cw2 + s_w * s_w * mu_eps * tau)))


def _below_threshold(sigma_w):
    return ComponentEstimate(
        sigma_w=float(sigma_w),
        ell_w=0.0,
        c_w=0.0,
        s_w=1.0,
        c_tilde=0.0,
        tau=1.0,
        ell=0.0,
        c=0.0,
        above_threshold=False,
    )


def estimate_components_svd(Yw, noise, r):
    """Like estimate_components, also returning the rank-r SVD of Yw.

    Returns (components, U, s, Vt). One SVD serves every downstream
    shrinker, so variant comparisons share a single estimation pass.
    """
    Yw = np.asarray(Yw, dtype=float)
    p, n = Yw.shape
    if r > min(p, n):
        raise ValueError("rank exceeds min(p, n)")
    gamma = p / n
    mu = noise.mu_eps
    edge = bulk_edge(gamma)
    U, s, Vt = topk_svd(Yw, r)
    comps = []
    for k in range(r):
        sigma_w = float(s[k])
        if sigma_w <= edge:
            comps.append(_below_threshold(sigma_w))
            continue
        ell_w = spike_from_sigma(sigma_w, gamma)
        c_w = left_cosine(ell_w, gamma)
        s_w = float(np.sqrt(max(0.0, 1.0 - c_w * c_w)))
        c_tilde = right_cosine(ell_w, gamma)
        try:
            tau = estimate_tau(c_w, s_w, mu, noise.sigma_quad(U[:, k]))
        except EstimationError:
            comps.append(_below_threshold(sigma_w))
            continue
        comps.append(
            ComponentEstimate(
                sigma_w=sigma_w,
                ell_w=ell_w,
                c_w=c_w,
                s_w=s_w,
                c_tilde=c_tilde,
                tau=tau,
                ell=ell_w / tau,
                c=unwhitened_cosine(c_w, s_w, mu, tau),
                above_threshold=True,
            )
        )
    return comps, U, s, Vt


def estimate_components(Yw, noise, r):
    """Per-component parameter estimates from an already-whitened matrix.

    Components are ordered by decreasing observed singular value; anything
    at or below the bulk edge (or failing the tau estimate) comes back
    flagged below-threshold with zeroed cosines.
    """
    comps, _, _, _ = estimate_components_svd(Yw, noise, r)
    return comps

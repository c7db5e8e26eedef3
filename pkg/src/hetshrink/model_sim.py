"""Spiked-model data generation and noise whitening.

Observation model: p-dimensional samples Y_j = X_j + eps_j, where the
signal X_j lives on an r-dimensional subspace with variances ``ells`` and
the noise has full-rank covariance Sigma_eps. All matrices in this package
store the columns divided by sqrt(n), so population formulas apply to the
stored matrices directly; raw samples are rescaled at ingestion.

Randomness: every generator takes a 64-bit master seed. Independent
streams are derived with ``derive_seed(master, *indices)``, which feeds
``(master, *indices)`` into numpy's SeedSequence, so trial i of any sweep
is reproducible in isolation and independent of execution order.
"""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import WhiteningError

__all__ = [
    "NoiseModel",
    "UniformSphere",
    "VarianceProfile",
    "SplitSupport",
    "SpikedModelSpec",
    "Dataset",
    "make_noise_cov",
    "generate_dataset",
    "draw_pcs",
    "draw_factors",
    "draw_noise",
    "whiten",
    "unwhiten",
    "derive_seed",
    "rng_for",
    "sample_iid",
]

# Relative eigenvalue floor below which a covariance is rejected rather
# than clamped; silent clamping would hide ill-conditioned noise.
_EIG_REJECT = 1e-12


def derive_seed(master, *indices):
    """Derive an independent 64-bit seed from a master seed and indices."""
    ss = np.random.SeedSequence([int(master)] + [int(i) for i in indices])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed, *indices):
    """Generator for the stream identified by (seed, *indices)."""
    if indices:
        seed = derive_seed(seed, *indices)
    return np.random.default_rng(seed)


def sample_iid(rng, shape, dist):
    """Draw iid mean-zero unit-variance entries.

    dist is "gaussian", "rademacher", or "t<df>" for a Student t rescaled
    to unit variance (requires df > 2, e.g. "t3", "t10").
    """
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if dist.startswith("t"):
        df = float(dist[1:])
        if df <= 2:
            raise ValueError("student t entries need df > 2 for unit variance")
        return rng.standard_t(df, size=shape) / np.sqrt(df / (df - 2.0))
    raise ValueError(f"unknown distribution {dist!r}")


class NoiseModel:
    """Noise covariance Sigma_eps with cached whitening maps.

    Holds either a diagonal (per-coordinate variances) or a dense symmetric
    positive-definite covariance. Exposes the whitener W = Sigma_eps^{-1/2},
    its inverse, and the scalar summaries used by the shrinkage formulas.
    """

    def __init__(self, values=None, matrix=None):
        if (values is None) == (matrix is None):
            raise ValueError("pass exactly one of values= or matrix=")
        if values is not None:
            values = np.asarray(values, dtype=float).reshape(-1)
            if values.size == 0:
                raise ValueError("empty variance vector")
            vmax = float(values.max(initial=0.0))
            if vmax <= 0 or np.any(values < _EIG_REJECT * vmax):
                raise WhiteningError(
                    "noise variances are zero or degenerate; cannot whiten"
                )
            self._diag = values
            self._vecs = None
            self._eigvals = np.sort(values)
        else:
            matrix = np.asarray(matrix, dtype=float)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise ValueError("noise covariance must be square")
            if not np.allclose(matrix, matrix.T, atol=1e-10 * max(1.0, np.abs(matrix).max())):
                raise ValueError("noise covariance must be symmetric")
            w, v = np.linalg.eigh((matrix + matrix.T) / 2.0)
            if w[-1] <= 0 or w[0] < _EIG_REJECT * w[-1]:
                raise WhiteningError(
                    f"noise covariance is rank deficient (eigenvalue ratio "
                    f"{w[0] / w[-1] if w[-1] > 0 else 0:.2e}); cannot whiten"
                )
            self._diag = None
            self._vecs = v
            self._eigvals = w

    @classmethod
    def diagonal(cls, values):
        return cls(values=values)

    @classmethod
    def dense(cls, matrix):
        return cls(matrix=matrix)

    @property
    def is_diagonal(self):
        return self._diag is not None

    @property
    def p(self):
        return self._eigvals.size

    @property
    def eigenvalues(self):
        """Eigenvalues of Sigma_eps, ascending."""
        return self._eigvals

    @property
    def mu_eps(self):
        """Normalized trace tr(Sigma_eps) / p."""
        return float(self._eigvals.sum() / self.p)

    @property
    def inv_trace_mean(self):
        """Normalized trace of the precision matrix, tr(Sigma_eps^{-1}) / p."""
        return float(np.mean(1.0 / self._eigvals))

    def _scale(self, M, power):
        # Apply Sigma_eps^{power/2} (power in {-1, +1}) to the rows of M.
        M = np.asarray(M, dtype=float)
        vec = M.ndim == 1
        if vec:
            M = M[:, None]
        if M.shape[0] != self.p:
            raise ValueError(f"row dimension {M.shape[0]} != noise dimension {self.p}")
        if self._diag is not None:
            out = M * (self._diag[:, None] ** (0.5 * power))
        else:
            out = self._vecs @ ((self._eigvals[:, None] ** (0.5 * power)) * (self._vecs.T @ M))
        return out[:, 0] if vec else out

    def whiten(self, M):
        """Apply W = Sigma_eps^{-1/2} to the columns of M."""
        return self._scale(M, -1)

    def unwhiten(self, M):
        """Apply W^{-1} = Sigma_eps^{1/2} to the columns of M."""
        return self._scale(M, +1)

    def whitener(self):
        """Dense p-by-p whitening matrix W (for inspection/tests)."""
        return self._scale(np.eye(self.p), -1)

    def unwhitener(self):
        return self._scale(np.eye(self.p), +1)

    def covariance(self):
        """Dense Sigma_eps."""
        if self._diag is not None:
            return np.diag(self._diag)
        return self._vecs @ (self._eigvals[:, None] * self._vecs.T)

    def diagonal_values(self):
        """Per-coordinate variances of a diagonal model, in storage order."""
        if self._diag is None:
            raise ValueError("not a diagonal noise model")
        return self._diag.copy()

    def sigma_quad(self, u):
        """Quadratic form u^T Sigma_eps u = ||Sigma_eps^{1/2} u||^2."""
        u = np.asarray(u, dtype=float)
        if self._diag is not None:
            return float(np.einsum("i,i,i->", u, self._diag, u))
        t = self._vecs.T @ u
        return float(np.einsum("i,i,i->", t, self._eigvals, t))

    def scaled(self, a):
        """NoiseModel for a * Sigma_eps (a > 0)."""
        if a <= 0:
            raise ValueError("scale must be positive")
        if self._diag is not None:
            return NoiseModel(values=a * self._diag)
        return NoiseModel(matrix=a * self.covariance())


def whiten(Y, noise):
    """Whitened matrix W Y."""
    return noise.whiten(Y)


def unwhiten(M, noise):
    """Unwhitened matrix W^{-1} M."""
    return noise.unwhiten(M)


def make_noise_cov(p, kappa, profile="linspace_inv_kappa", basis="coordinate", seed=0):
    """Noise covariance with linearly spaced eigenvalues of condition number kappa.

    profile "unit_norm_linspace": eigenvalues proportional to
    linspace(1, kappa, p), normalized so the eigenvalue vector has unit
    Euclidean norm (constant total noise energy across kappa).
    profile "linspace_inv_kappa": eigenvalues linspace(1/kappa, 1, p),
    increasing with the coordinate index.

    basis "coordinate" gives a diagonal model; "random_orthogonal" rotates
    the eigenvalues into a seeded random orthonormal basis.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    if profile == "unit_norm_linspace":
        vals = np.linspace(1.0, float(kappa), p)
        vals = vals / np.linalg.norm(vals)
    elif profile == "linspace_inv_kappa":
        vals = np.linspace(1.0 / kappa, 1.0, p)
    else:
        raise ValueError(f"unknown profile {profile!r}")
    if basis == "coordinate":
        return NoiseModel(values=vals)
    if basis == "random_orthogonal":
        rng = rng_for(seed)
        Q = _random_orthogonal(rng, p)
        return NoiseModel(matrix=Q @ (vals[:, None] * Q.T))
    raise ValueError(f"unknown basis {basis!r}")


def _random_orthogonal(rng, p):
    A = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))


# --- principal-component generators -------------------------------------


@dataclass(frozen=True)
class UniformSphere:
    """Each component drawn uniformly from the sphere, then Gram-Schmidt."""


@dataclass(frozen=True)
class VarianceProfile:
    """Component k has Gaussian entries with variances profiles[k] (sum 1)."""

    profiles: tuple


@dataclass(frozen=True)
class SplitSupport:
    """Component k supported on masks[k]; Gaussian or constant entries there."""

    masks: tuple
    fill: str = "gaussian"  # or "constant"


PcGenerator = Union[UniformSphere, VarianceProfile, SplitSupport]


def _raw_pc(rng, p, gen, k):
    if isinstance(gen, UniformSphere):
        return rng.standard_normal(p)
    if isinstance(gen, VarianceProfile):
        prof = np.asarray(gen.profiles[k], dtype=float)
        return rng.standard_normal(p) * np.sqrt(prof)
    if isinstance(gen, SplitSupport):
        mask = np.asarray(gen.masks[k], dtype=bool)
        v = np.zeros(p)
        if gen.fill == "gaussian":
            v[mask] = rng.standard_normal(int(mask.sum()))
        elif gen.fill == "constant":
            v[mask] = 1.0 / np.sqrt(mask.sum())
        else:
            raise ValueError(f"unknown fill {gen.fill!r}")
        return v
    raise TypeError(f"unknown pc generator {type(gen).__name__}")


def draw_pcs(spec, rng):
    """Orthonormal p-by-r matrix of population principal components."""
    cols = [_raw_pc(rng, spec.p, spec.pc_generator, k) for k in range(spec.r)]
    if not cols:
        return np.zeros((spec.p, 0))
    A = np.column_stack(cols)
    Q, R = np.linalg.qr(A)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def draw_factors(spec, rng):
    """n-by-r factor-value matrix with unit-variance entries."""
    return sample_iid(rng, (spec.n, spec.r), spec.factor_dist)


def draw_noise(spec, rng):
    """Scaled noise matrix Sigma_eps^{1/2} G / sqrt(n), with iid unit G."""
    G = sample_iid(rng, (spec.p, spec.n), spec.noise_dist)
    return spec.noise.unwhiten(G) / np.sqrt(spec.n)


@dataclass(frozen=True)
class SpikedModelSpec:
    """Parameters of one spiked-model draw.

    ells are the signal variances (descending is conventional but not
    required); pc_generator picks the population components; factor_dist
    and noise_dist name the entry distributions of the factor values and
    of the pre-coloring noise matrix.
    """

    p: int
    n: int
    ells: tuple
    noise: NoiseModel
    pc_generator: PcGenerator = field(default_factory=UniformSphere)
    factor_dist: str = "gaussian"
    noise_dist: str = "gaussian"

    def __post_init__(self):
        ells = tuple(float(x) for x in self.ells)
        object.__setattr__(self, "ells", ells)
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be positive")
        if len(ells) > min(self.p, self.n):
            raise ValueError("rank exceeds min(p, n)")
        if any(x <= 0 for x in ells):
            raise ValueError("signal variances must be strictly positive")
        if self.noise.p != self.p:
            raise ValueError("noise dimension does not match p")
        if isinstance(self.pc_generator, VarianceProfile):
            profs = self.pc_generator.profiles
            if len(profs) != len(ells):
                raise ValueError("need one variance profile per component")
            for prof in profs:
                prof = np.asarray(prof, dtype=float)
                if prof.shape != (self.p,) or abs(prof.sum() - 1.0) > 1e-8:
                    raise ValueError("each variance profile must have length p and sum to 1")
        if isinstance(self.pc_generator, SplitSupport):
            masks = self.pc_generator.masks
            if len(masks) != len(ells):
                raise ValueError("need one support mask per component")
            for mask in masks:
                mask = np.asarray(mask, dtype=bool)
                if mask.shape != (self.p,) or not mask.any():
                    raise ValueError("each mask must have length p and be non-empty")

    @property
    def r(self):
        return len(self.ells)

    @property
    def gamma(self):
        return self.p / self.n


@dataclass(frozen=True)
class Dataset:
    """One draw from a SpikedModelSpec, in the 1/sqrt(n) column scaling."""

    Y: np.ndarray
    X: np.ndarray
    eps: np.ndarray
    U: np.ndarray
    Z: np.ndarray
    spec: SpikedModelSpec
    seed: int


def generate_dataset(spec, seed):
    """Draw (U, Z, eps) and assemble Y = X + eps, deterministically in seed.

    The three ingredients come from independent derived streams, so e.g.
    redrawing only the noise for a fixed signal is possible via draw_noise
    with stream index 2.
    """
    U = draw_pcs(spec, rng_for(seed, 0))
    Z = draw_factors(spec, rng_for(seed, 1))
    eps = draw_noise(spec, rng_for(seed, 2))
    scale = np.sqrt(np.asarray(spec.ells, dtype=float))
    X = (U * scale) @ Z.T / np.sqrt(spec.n)
    Y = X + eps
    return Dataset(Y=Y, X=X, eps=eps, U=U, Z=Z, spec=spec, seed=int(seed))

import numpy as np
import pytest

from hetshrink.errors import WhiteningError
from hetshrink.model_sim import (
    NoiseModel,
    SpikedModelSpec,
    SplitSupport,
    UniformSphere,
    VarianceProfile,
    derive_seed,
    generate_dataset,
    make_noise_cov,
    rng_for,
    sample_iid,
    unwhiten,
    whiten,
)


def test_make_noise_cov_degenerate_linspace():
    noise = make_noise_cov(4, 1.0, profile="linspace_inv_kappa")
    np.testing.assert_allclose(noise.eigenvalues, np.ones(4))


def test_make_noise_cov_linspace_inv_kappa():
    noise = make_noise_cov(3, 3.0, profile="linspace_inv_kappa")
    np.testing.assert_allclose(noise.eigenvalues, [1.0 / 3.0, 2.0 / 3.0, 1.0])


def test_make_noise_cov_unit_norm():
    noise = make_noise_cov(2, 2.0, profile="unit_norm_linspace")
    np.testing.assert_allclose(noise.eigenvalues, np.array([1.0, 2.0]) / np.sqrt(5.0))
    assert np.linalg.norm(noise.eigenvalues) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("profile", ["unit_norm_linspace", "linspace_inv_kappa"])
@pytest.mark.parametrize("kappa", [1.5, 10.0, 250.0])
def test_make_noise_cov_condition_number(profile, kappa):
    noise = make_noise_cov(40, kappa, profile=profile)
    w = noise.eigenvalues
    assert w[-1] / w[0] == pytest.approx(kappa, rel=1e-9)


def test_make_noise_cov_rejects_bad_kappa():
    with pytest.raises(ValueError):
        make_noise_cov(5, 0.5)


def test_make_noise_cov_random_basis_same_spectrum():
    noise = make_noise_cov(20, 7.0, basis="random_orthogonal", seed=3)
    diag = make_noise_cov(20, 7.0, basis="coordinate")
    np.testing.assert_allclose(noise.eigenvalues, diag.eigenvalues, rtol=1e-10)
    assert not noise.is_diagonal


def test_noise_model_invariants():
    noise = make_noise_cov(30, 12.0, basis="random_orthogonal", seed=5)
    W = noise.whitener()
    Winv = noise.unwhitener()
    assert np.linalg.norm(W @ Winv - np.eye(30), 2) < 1e-10
    assert noise.mu_eps == pytest.approx(np.trace(noise.covariance()) / 30, abs=1e-12)


def test_noise_model_rejects_degenerate():
    with pytest.raises(WhiteningError):
        NoiseModel(values=np.zeros(4))
    with pytest.raises(WhiteningError):
        NoiseModel(values=[1.0, 1e-20])
    M = np.ones((3, 3))  # rank one
    with pytest.raises(WhiteningError):
        NoiseModel(matrix=M)
    with pytest.raises(ValueError):
        NoiseModel(matrix=np.array([[1.0, 0.5], [0.0, 1.0]]))  # asymmetric


def test_whiten_identity_noise_is_identity():
    noise = NoiseModel(values=np.ones(6))
    Y = rng_for(0).standard_normal((6, 4))
    np.testing.assert_array_equal(whiten(Y, noise), Y)


def test_whiten_diagonal_coordinatewise():
    noise = NoiseModel(values=[4.0, 1.0])
    col = np.array([2.0, 3.0])
    np.testing.assert_allclose(whiten(col, noise), [1.0, 3.0])


@pytest.mark.parametrize("seed", range(5))
def test_whiten_unwhiten_round_trip_dense(seed):
    rng = rng_for(seed)
    A = rng.standard_normal((25, 25))
    noise = NoiseModel(matrix=A @ A.T + 25 * np.eye(25))
    Y = rng.standard_normal((25, 60))
    back = unwhiten(whiten(Y, noise), noise)
    assert np.linalg.norm(back - Y) / np.linalg.norm(Y) < 1e-10


def test_whiten_dimension_mismatch():
    noise = NoiseModel(values=np.ones(4))
    with pytest.raises(ValueError):
        whiten(np.zeros((5, 2)), noise)


def test_sigma_quad_matches_dense_form():
    rng = rng_for(11)
    A = rng.standard_normal((12, 12))
    noise = NoiseModel(matrix=A @ A.T + 12 * np.eye(12))
    u = rng.standard_normal(12)
    assert noise.sigma_quad(u) == pytest.approx(u @ noise.covariance() @ u, rel=1e-12)


def test_sample_iid_variances():
    rng = rng_for(2)
    for dist in ("gaussian", "rademacher", "t10"):
        x = sample_iid(rng_for(2), 200_000, dist)
        assert abs(x.mean()) < 0.02
        assert np.var(x) == pytest.approx(1.0, abs=0.05)
    # t3 has infinite fourth moment, so its sample variance converges
    # slowly; only a loose check is meaningful.
    x = sample_iid(rng_for(2), 500_000, "t3")
    assert np.var(x) == pytest.approx(1.0, abs=0.4)
    with pytest.raises(ValueError):
        sample_iid(rng, 10, "t2")
    with pytest.raises(ValueError):
        sample_iid(rng, 10, "cauchy")


def _basic_spec(p=200, n=400, ells=(4.0,), **kw):
    noise = kw.pop("noise", NoiseModel(values=np.ones(p)))
    return SpikedModelSpec(p=p, n=n, ells=ells, noise=noise, **kw)


def test_generate_dataset_rank_zero():
    spec = _basic_spec(ells=())
    ds = generate_dataset(spec, 0)
    np.testing.assert_array_equal(ds.X, np.zeros((200, 400)))
    np.testing.assert_array_equal(ds.Y, ds.eps)


def test_generate_dataset_determinism():
    spec = _basic_spec()
    a = generate_dataset(spec, 123)
    b = generate_dataset(spec, 123)
    np.testing.assert_array_equal(a.Y, b.Y)
    np.testing.assert_array_equal(a.U, b.U)
    c = generate_dataset(spec, 124)
    assert not np.array_equal(a.Y, c.Y)


def test_generate_dataset_identity_y_eq_x_plus_eps():
    ds = generate_dataset(_basic_spec(), 5)
    np.testing.assert_array_equal(ds.Y, ds.X + ds.eps)
    assert np.abs(ds.U.T @ ds.U - np.eye(1)).max() < 1e-10


def test_generate_dataset_signal_energy():
    # E||X||_F^2 = sum of signal variances under the 1/sqrt(n) scaling.
    energies = [
        np.sum(generate_dataset(_basic_spec(), seed) .X ** 2) for seed in range(20)
    ]
    assert np.mean(energies) == pytest.approx(4.0, rel=0.10)


def test_generate_dataset_factor_variance():
    spec = _basic_spec()
    ds = generate_dataset(spec, 9)
    assert abs(np.var(ds.Z[:, 0]) - 1.0) < 5.0 / np.sqrt(spec.n)


def test_generate_dataset_noise_covariance():
    noise = NoiseModel(values=np.linspace(0.5, 2.0, 40))
    spec = SpikedModelSpec(p=40, n=50_000, ells=(), noise=noise)
    ds = generate_dataset(spec, 3)
    raw = ds.eps * np.sqrt(spec.n)
    sample_var = np.mean(raw * raw, axis=1)
    np.testing.assert_allclose(sample_var, noise.eigenvalues, rtol=0.1)


def test_variance_profile_validation():
    noise = NoiseModel(values=np.ones(10))
    bad = VarianceProfile(profiles=(np.full(10, 0.2),))  # sums to 2
    with pytest.raises(ValueError):
        SpikedModelSpec(p=10, n=20, ells=(1.0,), noise=noise, pc_generator=bad)


def test_split_support_constant_components():
    p = 10
    mask = np.zeros(p, dtype=bool)
    mask[: p // 2] = True
    gen = SplitSupport(masks=(mask,), fill="constant")
    spec = SpikedModelSpec(p=p, n=20, ells=(1.0,), noise=NoiseModel(values=np.ones(p)), pc_generator=gen)
    ds = generate_dataset(spec, 0)
    expected = np.where(mask, 1.0 / np.sqrt(5.0), 0.0)
    np.testing.assert_allclose(ds.U[:, 0], expected)


def test_spec_validation():
    noise = NoiseModel(values=np.ones(10))
    with pytest.raises(ValueError):
        SpikedModelSpec(p=10, n=3, ells=(1.0,) * 5, noise=noise)  # r > min(p, n)
    with pytest.raises(ValueError):
        SpikedModelSpec(p=10, n=20, ells=(-1.0,), noise=noise)
    with pytest.raises(ValueError):
        SpikedModelSpec(p=8, n=20, ells=(1.0,), noise=noise)  # dim mismatch


def test_derive_seed_independence():
    assert derive_seed(1, 0) != derive_seed(1, 1)
    assert derive_seed(1, 0) != derive_seed(2, 0)
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)


def test_weighted_orthogonality_frequency():
    # Uniform-sphere components are generically near-orthogonal in the
    # precision-weighted inner product at large p.
    from hetshrink.model_sim import draw_pcs

    p, r = 500, 3
    noise = make_noise_cov(p, 10.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=p, n=p, ells=(1.0,) * r, noise=noise)
    W2 = 1.0 / noise.eigenvalues  # diagonal of W^2 in storage order
    hits = 0
    trials = 100
    for seed in range(trials):
        U = draw_pcs(spec, rng_for(seed, 0))
        WU = U * np.sqrt(W2)[:, None]
        G = WU.T @ WU
        norms = np.sqrt(np.diag(G))
        C = np.abs(G / np.outer(norms, norms))
        np.fill_diagonal(C, 0.0)
        if C.max() < 0.15:
            hits += 1
    assert hits >= 95


def test_scaling_equivariance_whitening_exact():
    # (sqrt(a) Y, a Sigma) gives a bit-identical whitened matrix when a is a
    # power of two and the noise is diagonal.
    noise = make_noise_cov(30, 5.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=30, n=60, ells=(3.0,), noise=noise)
    ds = generate_dataset(spec, 21)
    a = 4.0
    scaled = noise.scaled(a)
    np.testing.assert_array_equal(scaled.whiten(np.sqrt(a) * ds.Y), noise.whiten(ds.Y))

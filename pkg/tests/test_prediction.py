import io

import numpy as np
import pytest

from hetshrink.model_sim import (
    NoiseModel,
    SpikedModelSpec,
    generate_dataset,
    make_noise_cov,
)
from hetshrink.prediction import (
    OosPredictor,
    amse_oos,
    blp_oracle,
    fit_oos_predictor,
    insample_coeff,
    load_predictor,
    oos_coeff,
    oos_predict,
    save_predictor,
)
from hetshrink.spectral_params import (
    ComponentEstimate,
    ModelAggregates,
    left_cosine,
    right_cosine,
    sigma_from_spike,
    unwhitened_cosine,
)
from hetshrink.sv_shrinkage import insample_amse, shrink_predict


def _component(ell_w, gamma, tau, mu):
    c_w = left_cosine(ell_w, gamma)
    s_w = np.sqrt(1.0 - c_w**2)
    return ComponentEstimate(
        sigma_w=sigma_from_spike(ell_w, gamma),
        ell_w=ell_w,
        c_w=c_w,
        s_w=s_w,
        c_tilde=right_cosine(ell_w, gamma),
        tau=tau,
        ell=ell_w / tau,
        c=unwhitened_cosine(c_w, s_w, mu, tau),
        above_threshold=True,
    )


def _manual_component(ell_w, c_w2, tau, mu):
    c_w = np.sqrt(c_w2)
    s_w = np.sqrt(1.0 - c_w2)
    return ComponentEstimate(
        sigma_w=2.0,
        ell_w=ell_w,
        c_w=c_w,
        s_w=s_w,
        c_tilde=np.sqrt(0.5),
        tau=tau,
        ell=ell_w / tau,
        c=unwhitened_cosine(c_w, s_w, mu, tau),
        above_threshold=True,
    )


_BELOW = ComponentEstimate(
    sigma_w=1.2, ell_w=0.0, c_w=0.0, s_w=1.0, c_tilde=0.0, tau=1.0, ell=0.0, c=0.0,
    above_threshold=False,
)


def test_insample_coeff_value():
    agg = ModelAggregates(p=10, n=10, r=1, mu_eps=1.0)
    comp = _manual_component(2.0, 0.5, 1.0, 1.0)
    assert insample_coeff(comp, agg) == pytest.approx(1.0 / 3.0)
    assert insample_coeff(_BELOW, agg) == 0.0


def test_insample_coeff_wiener_limit():
    # As gamma -> 0 the coefficient tends to the Wiener gain ell_w/(ell_w+1).
    agg = ModelAggregates(p=1, n=10**9, r=1, mu_eps=1.0)
    comp = _component(2.0, 1e-9, 1.0, 1.0)
    assert insample_coeff(comp, agg) == pytest.approx(2.0 / 3.0, abs=1e-6)


def test_oos_coeff_value_differs_from_insample():
    agg = ModelAggregates(p=10, n=10, r=1, mu_eps=1.0)
    comp = _manual_component(2.0, 0.5, 1.0, 1.0)
    assert oos_coeff(comp, agg) == pytest.approx(0.5)
    assert oos_coeff(comp, agg) != insample_coeff(comp, agg)
    assert oos_coeff(_BELOW, agg) == 0.0


def test_coeffs_coincide_at_perfect_cosine():
    agg = ModelAggregates(p=10, n=10, r=1, mu_eps=1.0)
    comp = _component(3.0, 1e-10, 1.0, 1.0)
    assert oos_coeff(comp, agg) == pytest.approx(insample_coeff(comp, agg), rel=1e-8)


def test_oos_predict_examples():
    noise = NoiseModel(values=np.ones(2))
    pred = OosPredictor(basis=np.array([[1.0], [0.0]]), coeffs=np.array([0.5]), noise=noise)
    np.testing.assert_allclose(oos_predict(pred, np.array([3.0, 4.0])), [1.5, 0.0])
    np.testing.assert_allclose(oos_predict(pred, np.zeros(2)), [0.0, 0.0])
    zero = OosPredictor(basis=np.array([[1.0], [0.0]]), coeffs=np.array([0.0]), noise=noise)
    np.testing.assert_allclose(oos_predict(zero, np.array([3.0, 4.0])), [0.0, 0.0])
    with pytest.raises(ValueError):
        oos_predict(pred, np.zeros(3))


def test_amse_oos_matches_insample_closed_form():
    # Out-of-sample and in-sample limiting MSEs agree identically.
    agg = ModelAggregates(p=10, n=10, r=1, mu_eps=1.0)
    comp = _manual_component(2.0, 0.5, 1.0, 1.0)
    assert amse_oos([comp], agg) == pytest.approx(1.5, abs=1e-12)
    ell_bar = comp.ell
    insample = ell_bar * (1.0 - (comp.c * comp.c_tilde) ** 2)
    assert insample == pytest.approx(1.5, abs=1e-12)


def test_amse_identity_on_grid():
    for gamma in (0.1, 0.5, 1.0, 2.0):
        for ell_w in (np.sqrt(gamma) * 1.2, 2.0, 5.0, 50.0):
            for tau in (0.5, 1.0, 3.0):
                for mu in (0.5, 1.0, 2.0):
                    comp = _component(ell_w, gamma, tau, mu)
                    agg = ModelAggregates(p=1, n=1, r=1, mu_eps=mu)
                    a = amse_oos([comp], agg)
                    b = insample_amse([comp])
                    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)


def test_amse_strong_signal_limit():
    # c_w -> 1: AMSE -> ell_bar / (ell_w + 1).
    gamma = 1e-10
    comp = _component(2.0, gamma, 2.0, 1.0)
    agg = ModelAggregates(p=1, n=1, r=1, mu_eps=1.0)
    assert amse_oos([comp], agg) == pytest.approx(comp.ell / 3.0, rel=1e-4)


def test_amse_empty():
    agg = ModelAggregates(p=1, n=1, r=0, mu_eps=1.0)
    assert amse_oos([], agg) == 0.0
    assert amse_oos([_BELOW], agg) == 0.0


def test_blp_zero_signal():
    noise = NoiseModel(values=np.ones(5))
    Y = np.random.default_rng(0).standard_normal((5, 7))
    np.testing.assert_allclose(blp_oracle(np.zeros((5, 5)), noise, Y), np.zeros_like(Y), atol=1e-14)


def test_blp_single_spike_closed_form():
    p = 40
    rng = np.random.default_rng(1)
    u = rng.standard_normal(p)
    u /= np.linalg.norm(u)
    ell = 3.0
    noise = NoiseModel(values=np.ones(p))
    Y = rng.standard_normal((p, 9))
    want = (ell / (ell + 1.0)) * np.outer(u, u @ Y)
    got = blp_oracle(ell * np.outer(u, u), noise, Y, validate=True)
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_blp_two_routes_agree():
    p = 60
    rng = np.random.default_rng(2)
    A = rng.standard_normal((p, p))
    noise = NoiseModel(matrix=A @ A.T + p * np.eye(p))
    B = rng.standard_normal((p, 3))
    Sigma_x = B @ B.T
    Y = rng.standard_normal((p, 20))
    spectral = blp_oracle(Sigma_x, noise, Y, validate=True)
    direct = Sigma_x @ np.linalg.solve(Sigma_x + noise.covariance(), Y)
    assert np.linalg.norm(spectral - direct) / np.linalg.norm(direct) < 1e-10


def test_oos_matches_insample_shrinkage_coeffs():
    # On the training columns, the in-sample column form with eta_k
    # reproduces shrink_predict exactly.
    p, n = 100, 220
    noise = make_noise_cov(p, 5.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=p, n=n, ells=(12.0, 7.0), noise=noise)
    ds = generate_dataset(spec, 5)
    res = shrink_predict(ds.Y, noise, 2)
    agg = ModelAggregates(p=p, n=n, r=2, mu_eps=noise.mu_eps)
    etas = np.array([insample_coeff(c, agg) for c in res.components])
    pred = OosPredictor(basis=res.u_w, coeffs=etas, noise=noise)
    cols = oos_predict(pred, ds.Y * np.sqrt(n)) / np.sqrt(n)
    assert np.linalg.norm(cols - res.Xhat) < 1e-9


def test_fit_and_serialize_round_trip(tmp_path):
    p, n = 50, 120
    noise = make_noise_cov(p, 6.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=p, n=n, ells=(9.0,), noise=noise)
    ds = generate_dataset(spec, 7)
    pred = fit_oos_predictor(ds.Y, noise, 1)
    path = tmp_path / "pred.hsos"
    save_predictor(path, pred)
    back = load_predictor(path)
    np.testing.assert_array_equal(back.basis, pred.basis)
    np.testing.assert_array_equal(back.coeffs, pred.coeffs)
    np.testing.assert_allclose(back.noise.covariance(), noise.covariance())
    Y0 = np.random.default_rng(1).standard_normal((p, 4))
    # memory layout changes through serialization, so BLAS may reassociate
    np.testing.assert_allclose(oos_predict(back, Y0), oos_predict(pred, Y0), atol=1e-12)


def test_serialize_dense_noise(tmp_path):
    p = 20
    rng = np.random.default_rng(3)
    A = rng.standard_normal((p, p))
    noise = NoiseModel(matrix=A @ A.T + p * np.eye(p))
    pred = OosPredictor(
        basis=rng.standard_normal((p, 2)), coeffs=np.array([0.4, 0.2]), noise=noise
    )
    buf = io.BytesIO()
    save_predictor(buf, pred)
    buf.seek(0)
    back = load_predictor(buf)
    assert not back.noise.is_diagonal
    np.testing.assert_allclose(back.noise.covariance(), noise.covariance(), atol=1e-12)


def test_serialize_bad_magic():
    with pytest.raises(ValueError):
        load_predictor(io.BytesIO(b"XXXX" + b"\0" * 16))


def test_gamma_to_zero_convergence_to_blp():
    # Shrinkage with whitening approaches the best linear predictor as the
    # aspect ratio vanishes.
    p = 100
    for kappa in (10.0, 100.0):
        noise = make_noise_cov(p, kappa, profile="unit_norm_linspace")
        gaps = []
        for n in (200, 1000, 5000):
            spec = SpikedModelSpec(p=p, n=n, ells=(4.0, 2.0, 1.0), noise=noise)
            gap = 0.0
            norm_x = 0.0
            for seed in range(20):
                ds = generate_dataset(spec, seed)
                Sigma_x = (ds.U * spec.ells) @ ds.U.T
                xhat = shrink_predict(ds.Y, noise, 3).Xhat
                blp = blp_oracle(Sigma_x, noise, ds.Y)
                gap += np.sum((xhat - blp) ** 2)
                norm_x += np.sum(ds.X**2)
            gaps.append(gap / norm_x)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.05

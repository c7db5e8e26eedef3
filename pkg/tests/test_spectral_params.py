import numpy as np
import pytest

from hetshrink.errors import EstimationError
from hetshrink.model_sim import (
    NoiseModel,
    SpikedModelSpec,
    generate_dataset,
    make_noise_cov,
)
from hetshrink.spectral_params import (
    ModelAggregates,
    bulk_edge,
    estimate_components,
    estimate_tau,
    left_cosine,
    right_cosine,
    sigma_from_spike,
    spike_from_sigma,
    unwhitened_cosine,
)


def test_sigma_from_spike_values():
    assert sigma_from_spike(1.0, 1.0) == pytest.approx(2.0)  # threshold boundary
    assert sigma_from_spike(2.0, 1.0) == pytest.approx(np.sqrt(4.5))
    assert sigma_from_spike(2.0, 0.5) == pytest.approx(np.sqrt(3.75))
    assert sigma_from_spike(0.1, 1.0) == pytest.approx(2.0)  # below threshold: bulk edge


def test_sigma_from_spike_monotone():
    gamma = 0.7
    grid = np.linspace(np.sqrt(gamma) + 1e-6, 50, 500)
    vals = [sigma_from_spike(ell, gamma) for ell in grid]
    assert np.all(np.diff(vals) > 0)


def test_spike_from_sigma_values():
    assert spike_from_sigma(np.sqrt(4.5), 1.0) == pytest.approx(2.0, rel=1e-12)
    assert spike_from_sigma(np.sqrt(3.75), 0.5) == pytest.approx(2.0, rel=1e-12)
    assert spike_from_sigma(bulk_edge(0.5), 0.5) is None
    assert spike_from_sigma(1.0, 0.5) is None


@pytest.mark.parametrize("gamma", [0.1, 0.5, 1.0, 2.0])
def test_round_trip_identity(gamma):
    for ell in np.geomspace(np.sqrt(gamma) * 1.0001, 1e6, 60):
        back = spike_from_sigma(sigma_from_spike(ell, gamma), gamma)
        assert back == pytest.approx(ell, rel=1e-10)


def test_cosines_values():
    assert left_cosine(2.0, 1.0) == pytest.approx(np.sqrt(0.5))
    assert right_cosine(2.0, 1.0) == pytest.approx(np.sqrt(0.5))
    assert left_cosine(1e8, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert right_cosine(1e8, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert left_cosine(np.sqrt(0.5), 0.5) == 0.0
    assert right_cosine(np.sqrt(0.5), 0.5) == 0.0


def test_cosines_monotone_and_bounded():
    gamma = 0.8
    grid = np.geomspace(np.sqrt(gamma) * 1.001, 1e4, 200)
    for fn in (left_cosine, right_cosine):
        vals = np.array([fn(ell, gamma) for ell in grid])
        assert np.all(np.diff(vals) > 0)
        assert np.all((vals > 0) & (vals < 1))


def test_estimate_tau_values():
    assert estimate_tau(np.sqrt(0.5), np.sqrt(0.5), 1.0, 1.0) == pytest.approx(1.0)
    assert estimate_tau(np.sqrt(0.5), np.sqrt(0.5), 2.0, 1.5) == pytest.approx(1.0)
    assert estimate_tau(np.sqrt(0.8), np.sqrt(0.2), 1.0, 0.9) == pytest.approx(0.8 / 0.7)


def test_estimate_tau_failure():
    with pytest.raises(EstimationError):
        estimate_tau(0.5, np.sqrt(0.75), 1.0, 0.5)  # denominator <= 0


def test_unwhitened_cosine_values():
    assert unwhitened_cosine(np.sqrt(0.5), np.sqrt(0.5), 1.0, 1.0) == pytest.approx(np.sqrt(0.5))
    assert unwhitened_cosine(1.0, 0.0, 3.0, 2.0) == pytest.approx(1.0)
    assert unwhitened_cosine(np.sqrt(0.5), np.sqrt(0.5), 1.0, 2.0) == pytest.approx(np.sqrt(1.0 / 3.0))


def test_estimate_components_empty():
    noise = NoiseModel(values=np.ones(10))
    Yw = np.random.default_rng(0).standard_normal((10, 20)) / np.sqrt(20)
    assert estimate_components(Yw, noise, 0) == []


def test_estimate_components_pure_noise_below_threshold():
    # The top noise singular value fluctuates Tracy-Widom style around the
    # asymptotic edge, with upward excursions in a minority of draws.
    p, n = 400, 800
    noise = NoiseModel(values=np.ones(p))
    spec = SpikedModelSpec(p=p, n=n, ells=(), noise=noise)
    hits = 0
    for seed in range(50):
        ds = generate_dataset(spec, seed)
        comp = estimate_components(ds.Y, noise, 1)[0]
        hits += not comp.above_threshold
        if not comp.above_threshold:
            assert comp.c_w == 0.0 and comp.ell_w == 0.0
    assert hits >= 35


def test_estimate_components_planted_spike():
    # Planted whitened spike 4 at gamma = 0.5: estimates concentrate on the
    # population values, tau on 1 for white noise.
    p, n = 1000, 2000
    noise = NoiseModel(values=np.ones(p))
    spec = SpikedModelSpec(p=p, n=n, ells=(4.0,), noise=noise)
    ells, taus = [], []
    for seed in range(100):
        ds = generate_dataset(spec, seed)
        comp = estimate_components(ds.Y, noise, 1)[0]
        assert comp.above_threshold
        ells.append(comp.ell_w)
        taus.append(comp.tau)
    assert abs(np.mean(ells) - 4.0) < 0.15
    assert abs(np.mean(taus) - 1.0) < 0.1


def test_white_noise_collapse():
    # With identity noise the estimated tau is exactly 1 (unit vectors) and
    # the unwhitened cosine equals the whitened one.
    p, n = 1000, 1000
    noise = NoiseModel(values=np.ones(p))
    spec = SpikedModelSpec(p=p, n=n, ells=(5.0, 3.0), noise=noise)
    for seed in range(5):
        ds = generate_dataset(spec, seed)
        for comp in estimate_components(ds.Y, noise, 2):
            assert comp.tau == pytest.approx(1.0, abs=1e-10)
            assert comp.c == pytest.approx(comp.c_w, abs=1e-10)


def test_component_invariants():
    p, n = 300, 600
    noise = make_noise_cov(p, 10.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=p, n=n, ells=(6.0, 2.0), noise=noise)
    ds = generate_dataset(spec, 4)
    comps = estimate_components(noise.whiten(ds.Y), noise, 2)
    edge = bulk_edge(p / n)
    for comp in comps:
        assert comp.c_w**2 + comp.s_w**2 == pytest.approx(1.0, abs=1e-12)
        assert comp.above_threshold == (comp.sigma_w > edge)
        assert 0.0 <= comp.c <= 1.0 and 0.0 <= comp.c_tilde <= 1.0
    assert comps[0].sigma_w >= comps[1].sigma_w


def test_scaling_equivariance():
    # (sqrt(a) Y, a Sigma) leaves every estimate invariant except tau (1/a)
    # and ell (a); exact for diagonal noise and a = power of two.
    p, n = 120, 240
    noise = make_noise_cov(p, 8.0, profile="linspace_inv_kappa")
    spec = SpikedModelSpec(p=p, n=n, ells=(7.0,), noise=noise)
    ds = generate_dataset(spec, 13)
    a = 4.0
    base = estimate_components(noise.whiten(ds.Y), noise, 1)[0]
    scaled_noise = noise.scaled(a)
    scaled = estimate_components(scaled_noise.whiten(np.sqrt(a) * ds.Y), scaled_noise, 1)[0]
    assert scaled.sigma_w == base.sigma_w
    assert scaled.ell_w == base.ell_w
    assert scaled.c_w == base.c_w
    assert scaled.tau == pytest.approx(base.tau / a, rel=1e-14)
    assert scaled.ell == pytest.approx(base.ell * a, rel=1e-14)
    assert scaled.ell * scaled.tau == pytest.approx(base.ell * base.tau, rel=1e-14)


def test_aggregates_gamma():
    agg = ModelAggregates(p=3, n=6, r=1, mu_eps=1.0)
    assert agg.gamma == 0.5

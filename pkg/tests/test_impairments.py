import numpy as np
import pytest

from oracles import random_channels, two_feed_outage
from satprecode.channel import ChannelSet
from satprecode.errors import InvalidArgumentError
from satprecode.impairments import (
    OutageEstimate,
    PhaseNoiseModel,
    VolterraModel,
    crest_factor_clip,
    estimate_outage,
    nonlinear_sinr,
    perturb_csi,
    sample_perturbed_sinr,
    volterra_receive,
)
from satprecode.precoding import evaluate_sinr, mmse_multicast


@pytest.mark.parametrize("model", [
    PhaseNoiseModel("gaussian", 0.0),
    PhaseNoiseModel("uniform", 0.0),
    PhaseNoiseModel("tikhonov", np.inf),
])
def test_identity_models_return_input(small_channels, model):
    assert model.is_identity
    out = perturb_csi(small_channels, model, seed=1)
    assert np.array_equal(out.matrices, small_channels.matrices)


@pytest.mark.parametrize("model", [
    PhaseNoiseModel("gaussian", 0.3),
    PhaseNoiseModel("uniform", np.pi),
    PhaseNoiseModel("tikhonov", 2.0),
])
def test_perturbation_keeps_magnitudes(small_channels, model):
    out = perturb_csi(small_channels, model, seed=5)
    assert np.max(np.abs(np.abs(out.matrices) - np.abs(small_channels.matrices))) <= 1e-15
    assert not np.array_equal(out.matrices, small_channels.matrices)


def test_perturbation_seeded(small_channels):
    model = PhaseNoiseModel("gaussian", 0.2)
    a = perturb_csi(small_channels, model, seed=3).matrices
    b = perturb_csi(small_channels, model, seed=3).matrices
    assert np.array_equal(a, b)


def test_phase_models_validate():
    with pytest.raises(InvalidArgumentError):
        PhaseNoiseModel("laplace", 0.1)
    with pytest.raises(InvalidArgumentError):
        PhaseNoiseModel("gaussian", -0.1)


def test_tikhonov_concentration(rng):
    loose = PhaseNoiseModel("tikhonov", 0.0).draw(20000, rng)
    tight = PhaseNoiseModel("tikhonov", 50.0).draw(20000, rng)
    assert abs(np.mean(np.cos(loose))) < 0.03
    assert np.std(tight) < 0.2


def test_volterra_linear_reduction(rng):
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    W = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    S = np.exp(1j * rng.uniform(0, 2 * np.pi, (2, 50)))
    y = volterra_receive(h, W, S, VolterraModel(1.0, 0.0), noise=0.1)
    linear = h.conj() @ W @ S + 0.1
    assert np.max(np.abs(y - linear)) <= 1e-15 * np.max(np.abs(linear))


def test_volterra_scalar_expansion():
    h, w, s, n = 0.5 - 0.2j, 1.5 + 0.5j, np.exp(0.7j), 0.01j
    g1, g3 = 0.9 + 0.1j, -0.05 + 0.02j
    x = w * s
    y = volterra_receive(np.array([h]), np.array([[w]]), np.array([s]), VolterraModel(g1, g3), n)
    expected = g1 * np.conj(h) * x + g3 * np.conj(h) * x * abs(x) ** 2 + n
    assert np.isclose(y, expected, rtol=1e-14)


def test_volterra_rejects_zero_gain():
    with pytest.raises(InvalidArgumentError):
        VolterraModel(0.0, 1.0)


def test_clip_cases():
    x = np.array([0.2 + 0.1j, 3 * np.exp(0.4j), -2.0])
    out = crest_factor_clip(x, 1.0)
    assert out[0] == x[0]
    assert np.isclose(out[1], np.exp(0.4j))
    assert np.isclose(out[2], -1.0)
    assert np.array_equal(crest_factor_clip(out, 1.0), out)
    small = np.array([0.1, 0.5j])
    assert np.array_equal(crest_factor_clip(small, 1.0), small)
    with pytest.raises(InvalidArgumentError):
        crest_factor_clip(x, 0.0)


def test_outage_deterministic_limits(small_channels):
    W = mmse_multicast(small_channels, 2.0)
    sinr = evaluate_sinr(small_channels, W).sinr
    none = PhaseNoiseModel("gaussian", 0.0)
    below = estimate_outage(small_channels, W, none, 0.5 * sinr.min(), 200, seed=0)
    above = estimate_outage(small_channels, W, none, 2.0 * sinr.max(), 200, seed=0)
    assert np.all(below.probability == 0.0)
    assert np.all(above.probability == 1.0)


def test_outage_matches_quadrature():
    # two unit feeds toward one user; SINR = 2 + 2 cos(phase difference)
    H = np.ones((1, 1, 2), dtype=complex)
    W = np.ones((2, 1), dtype=complex)
    model = PhaseNoiseModel("uniform", np.pi)
    for eps in (0.5, 1.0, 2.0, 3.5):
        est = estimate_outage(ChannelSet.from_matrices(H), W, model, eps, 10000, seed=11)
        p = est.probability[0, 0]
        exact = two_feed_outage(eps)
        se = np.sqrt(exact * (1 - exact) / est.trials)
        assert abs(p - exact) <= 3 * se


def test_outage_merge_and_bounds():
    a = OutageEstimate(np.array([[3]]), 10, 1.0)
    b = OutageEstimate(np.array([[1]]), 30, 1.0)
    merged = a.merge(b)
    assert merged.trials == 40 and merged.probability[0, 0] == 0.1
    with pytest.raises(InvalidArgumentError):
        a.merge(OutageEstimate(np.array([[1]]), 30, 2.0))


def test_sampling_chunk_independent_of_batching(small_channels):
    W = mmse_multicast(small_channels, 2.0)
    model = PhaseNoiseModel("gaussian", 0.1)
    short = sample_perturbed_sinr(small_channels, W, model, 1500, seed=4)
    long = sample_perturbed_sinr(small_channels, W, model, 2500, seed=4)
    assert np.array_equal(short[:1000], long[:1000])
    assert short.shape == (1500, 3, 2)


def test_nonlinear_linear_model_matches(rng):
    ch = ChannelSet.from_matrices(random_channels(rng, 2, 2, 3))
    W = mmse_multicast(ch, 1.0)
    report = nonlinear_sinr(ch, W, VolterraModel(1.0, 0.0), symbol_trials=100000, seed=2)
    exact = evaluate_sinr(ch, W).sinr
    assert np.max(np.abs(report.sinr / exact - 1.0)) <= 0.01
    assert np.all(report.distortion == 0)


def test_nonlinear_strong_cubic_lowers_sinr(rng):
    ch = ChannelSet.from_matrices(random_channels(rng, 2, 2, 3))
    W = mmse_multicast(ch, 4.0)
    linear = nonlinear_sinr(ch, W, VolterraModel(1.0, 0.0), seed=2)
    bent = nonlinear_sinr(ch, W, VolterraModel(1.0, -0.5), seed=2)
    assert np.all(bent.sinr < linear.sinr)


def test_distortion_grows_with_cubic_gain(rng):
    ch = ChannelSet.from_matrices(random_channels(rng, 2, 2, 3))
    W = mmse_multicast(ch, 1.0)
    previous = None
    for g3 in (0.01, 0.02, 0.04, 0.08):
        d = nonlinear_sinr(ch, W, VolterraModel(1.0, g3), seed=8).distortion
        if previous is not None:
            assert np.all(d >= previous)
            assert np.allclose(d, 4.0 * previous, rtol=1e-9)
        previous = d


def test_nonlinear_needs_enough_symbols(small_channels):
    W = mmse_multicast(small_channels, 1.0)
    with pytest.raises(InvalidArgumentError):
        nonlinear_sinr(small_channels, W, VolterraModel(), symbol_trials=10)

import numpy as np
import pytest

from oracles import random_channels
from satprecode.channel import ChannelSet
from satprecode.errors import InstanceTooLargeError, InvalidArgumentError
from satprecode.optimizer import (
    AdmmConfig,
    QosTargets,
    build_qcqp,
    certify,
    interference_free_sinr,
    maxmin_bisection,
    power_min_admm,
    project_quadratic,
    sdr_maxmin_small,
    sdr_power_min,
    stack,
    unstack,
)
from satprecode.optimizer.sdp import from_coordinates, hermitian_basis, to_coordinates
from satprecode.precoding import evaluate_sinr, feed_powers


def channels_of(H):
    return ChannelSet.from_matrices(np.asarray(H, dtype=complex))


# -- QCQP forms ---------------------------------------------------------------


def test_targets_reject_nonpositive():
    with pytest.raises(InvalidArgumentError):
        QosTargets([1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        QosTargets([1.0], noise_variance=0.0)


def test_stack_roundtrip(rng):
    W = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    w = stack(W)
    assert np.array_equal(w[:4], W[:, 0])
    assert np.array_equal(unstack(w, 4), W)


def test_single_user_form():
    h = np.array([1.0 + 1j, 0.5, -2j])
    ch = channels_of(h.reshape(1, 1, 3))
    (con,) = build_qcqp(ch, QosTargets([2.0], noise_variance=0.5))
    expected = np.outer(h.conj(), h) / (0.5 * 2.0)
    assert np.allclose(con.R, expected, atol=1e-15)
    w = np.array([0.2, 1.0 - 1j, 0.3j])
    assert np.isclose(con.value(w), abs(h @ w) ** 2 / 1.0)


def test_constraints_hermitian(small_channels):
    for con in build_qcqp(small_channels, QosTargets.uniform(1.5, 3)):
        assert np.max(np.abs(con.R - con.R.conj().T)) <= 1e-12


def test_qcqp_matches_sinr(small_channels, rng):
    gamma, sigma2 = 0.7, 1.0
    cons = build_qcqp(small_channels, QosTargets.uniform(gamma, 3, sigma2))
    for _ in range(100):
        W = (rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))) * rng.uniform(0.1, 3.0)
        sinr = evaluate_sinr(small_channels, W).sinr
        w = stack(W)
        for con in cons:
            k, i = con.owner
            # w^H R w - 1 = (S - gamma (I + 1)) / (sigma^2 gamma), so the sign agrees
            S = abs(small_channels.matrices[i, k] @ W[:, k]) ** 2
            interference = S / sinr[k, i] - 1.0
            assert np.isclose(con.value(w) - 1.0, (S - gamma * (interference + 1.0)) / gamma, rtol=1e-10, atol=1e-10)
            assert con.satisfied(w) == (sinr[k, i] >= gamma)


# -- projection ---------------------------------------------------------------


def test_projection_lands_on_boundary(small_channels, rng):
    cons = build_qcqp(small_channels, QosTargets.uniform(1.0, 3))
    R = np.stack([c.R for c in cons])
    lam, Q = np.linalg.eigh(R)
    V = 0.01 * (rng.standard_normal((len(cons), 12)) + 1j * rng.standard_normal((len(cons), 12)))
    Z, mu = project_quadratic(lam, Q, V)
    for j in range(len(cons)):
        assert np.isclose(cons[j].value(Z[j]), 1.0, atol=1e-8)
        # stationarity: z - v = mu R z
        assert np.allclose(Z[j] - V[j], mu[j] * R[j] @ Z[j], atol=1e-8 * max(1.0, np.linalg.norm(Z[j])))
    assert np.all(mu >= 0)


def test_projection_is_nearest_point(rng):
    h = np.array([1.0, 0.0])
    R = np.outer(h, h).astype(complex)
    lam, Q = np.linalg.eigh(R[None])
    v = np.array([[0.3 + 0j, 2.0]])
    Z, _ = project_quadratic(lam, Q, v)
    assert np.allclose(Z, [[1.0, 2.0]], atol=1e-10)


def test_projection_keeps_feasible_points():
    R = np.eye(2, dtype=complex)[None]
    lam, Q = np.linalg.eigh(R)
    V = np.array([[3.0 + 0j, 0.0]])
    Z, mu = project_quadratic(lam, Q, V)
    assert np.array_equal(Z, V) and mu[0] == 0


def test_projection_along_missing_top_direction():
    R = np.diag([1.0, -1.0]).astype(complex)[None]
    lam, Q = np.linalg.eigh(R)
    Z, _ = project_quadratic(lam, Q, np.array([[0.0 + 0j, 0.5]]))
    assert np.isclose(abs(Z[0, 0]) ** 2 - abs(Z[0, 1]) ** 2, 1.0, atol=1e-9)


# -- ADMM power minimisation --------------------------------------------------


def test_admm_scalar_closed_form():
    ch = channels_of([[[1.0]]])
    out = power_min_admm(ch, QosTargets([4.0]), 100.0, seed=0)
    assert out.status == "feasible"
    assert np.isclose(abs(out.W.W[0, 0]), 2.0, rtol=1e-4)
    assert np.isclose(out.objective, 4.0, rtol=1e-4)


@pytest.mark.parametrize("sigma2,gamma", [(1.0, 2.0), (0.5, 3.0)])
def test_admm_matched_filter(rng, sigma2, gamma):
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    ch = channels_of(h.reshape(1, 1, 4))
    out = power_min_admm(ch, QosTargets([gamma], sigma2), 1e3, seed=1)
    expected = sigma2 * gamma / np.linalg.norm(h) ** 2
    assert out.feasible
    assert np.isclose(out.objective, expected, rtol=1e-4)
    w = out.W.W[:, 0]
    aligned = h.conj() / np.linalg.norm(h)
    assert np.isclose(abs(np.vdot(aligned, w)), np.linalg.norm(w), rtol=1e-6)


def test_admm_infeasible_status(small_channels):
    out = power_min_admm(small_channels, QosTargets.uniform(1e9, 3), 1e-6, seed=0)
    assert out.status == "infeasible"
    assert not out.feasible and out.W is None


def test_admm_infeasible_found_by_iteration():
    # two users of one beam with orthogonal rows cannot both be served from one feed each
    H = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
    bound = interference_free_sinr(channels_of(H), 1.0)
    assert np.isclose(bound[0], 1.0)
    out = power_min_admm(channels_of(H), QosTargets([0.5]), 1.0, cfg=AdmmConfig(max_iter=500, restarts=2), seed=0)
    assert out.feasible and certify(channels_of(H), QosTargets([0.5]), out.W.W, 1.0)


def test_admm_feasible_is_certified(rng):
    ch = channels_of(random_channels(rng, 1, 3, 5))
    targets = QosTargets.uniform(1.0, 3)
    out = power_min_admm(ch, targets, 50.0, seed=3)
    assert out.feasible
    report = evaluate_sinr(ch, out.W)
    assert np.all(report.min_sinr >= 1.0 - 1e-4)
    assert feed_powers(out.W.W).max() <= 50.0 * (1 + 1e-9)
    assert out.residuals.shape[1] == 2 and out.iterations >= 1


def test_admm_deterministic(rng):
    ch = channels_of(random_channels(rng, 1, 2, 3))
    targets = QosTargets.uniform(1.0, 2)
    a = power_min_admm(ch, targets, 20.0, seed=9)
    b = power_min_admm(ch, targets, 20.0, seed=9)
    assert a.status == b.status and a.iterations == b.iterations
    assert np.array_equal(a.W.W, b.W.W)


def test_admm_config_validation():
    with pytest.raises(InvalidArgumentError):
        AdmmConfig(rho=0.0)
    with pytest.raises(InvalidArgumentError):
        AdmmConfig(restarts=0)


# -- max-min bisection --------------------------------------------------------


def test_maxmin_zero_power(small_channels):
    t, W = maxmin_bisection(small_channels, 0.0)
    assert t == 0.0 and not np.any(W.W)


def test_maxmin_single_feed():
    h = 0.8 - 0.6j
    ch = channels_of([[[h]]])
    result = maxmin_bisection(ch, 5.0, tol=1e-3)
    assert abs(result.t - 5.0 * abs(h) ** 2) <= 1e-3
    assert result.t <= 5.0 * abs(h) ** 2 + 1e-9


def test_maxmin_single_beam_full_power():
    h = np.exp(1j * np.array([0.3, -1.1, 2.0]))
    ch = channels_of(h.reshape(1, 1, 3))
    t, W = maxmin_bisection(ch, 2.0, tol=1e-3)
    # every feed at full power, co-phased toward h
    assert abs(t - 2.0 * np.sum(np.abs(h)) ** 2) <= 1e-3
    assert np.allclose(feed_powers(W.W), 2.0, rtol=1e-6)


def test_maxmin_monotone_in_power():
    ch = channels_of([[[0.7 + 0.2j]]])
    values = [maxmin_bisection(ch, P, tol=1e-3).t for P in (1, 2, 4, 8)]
    assert all(b >= a - 1e-3 for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_maxmin_bracket(rng):
    ch = channels_of(random_channels(rng, 1, 2, 2))
    result = maxmin_bisection(ch, 4.0, tol=1e-2)
    assert result.t_infeasible - result.t <= 1e-2 + 1e-12
    assert np.all(evaluate_sinr(ch, result.W).min_sinr >= result.t - 1e-4)


# -- semidefinite relaxation --------------------------------------------------


def test_hermitian_coordinates_roundtrip(rng):
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    M = A + A.conj().T
    assert np.allclose(from_coordinates(to_coordinates(M), 3), M, atol=1e-14)
    assert len(hermitian_basis(3)) == 9


def test_sdr_single_beam_rank_one():
    h = np.array([1.0, 0.5j])
    ch = channels_of(h.reshape(1, 1, 2))
    result = sdr_power_min(ch, QosTargets([2.0]), 10.0)
    expected = 2.0 / np.linalg.norm(h) ** 2
    assert result.feasible
    assert np.isclose(result.lower_bound, expected, rtol=1e-6)
    lam = np.linalg.eigvalsh(result.lifted[0])
    assert lam[0] <= 1e-6 * lam[-1]
    assert np.isclose(result.extracted_power, expected, rtol=1e-6)


def test_sdr_orthogonal_channels():
    H = np.zeros((1, 2, 2), dtype=complex)
    H[0, 0, 0] = 2.0
    H[0, 1, 1] = 1.0
    result = sdr_power_min(channels_of(H), QosTargets([1.0, 1.0]), 10.0)
    assert np.isclose(result.lower_bound, 0.25 + 1.0, rtol=1e-6)
    assert np.isclose(result.extracted_power, 1.25, rtol=1e-6)


def test_sdr_bound_ordering(rng):
    ch = channels_of(random_channels(rng, 2, 2, 4))
    result = sdr_power_min(ch, QosTargets.uniform(1.0, 2), 50.0)
    assert result.feasible and result.W is not None
    assert result.lower_bound <= result.relaxed_power + 1e-9
    assert result.extracted_power >= result.lower_bound - 1e-9
    assert certify(ch, QosTargets.uniform(1.0, 2), result.W.W, 50.0)


def test_sdr_infeasible():
    H = np.array([[[1.0 + 0j]]])
    assert not sdr_power_min(channels_of(H), QosTargets([10.0]), 1.0).feasible


def test_sdr_too_large(rng):
    ch = channels_of(random_channels(rng, 1, 7, 7))
    with pytest.raises(InstanceTooLargeError):
        sdr_power_min(ch, QosTargets.uniform(1.0, 7), 10.0)
    with pytest.raises(InstanceTooLargeError):
        sdr_maxmin_small(ch, 10.0)


def test_sdr_maxmin_single_beam():
    h = np.array([1.0, 1.0j])
    ch = channels_of(h.reshape(1, 1, 2))
    t_relax, W, lower_bound_power = sdr_maxmin_small(ch, 3.0, tol=1e-3)
    assert abs(t_relax - 3.0 * 4.0) <= 2e-3
    assert np.allclose(feed_powers(W.W), 3.0, rtol=1e-6)
    assert evaluate_sinr(ch, W).min_sinr[0] >= t_relax - 2e-3
    assert lower_bound_power(20.0) == float("inf")


def test_sdr_maxmin_extraction_below_relaxation(rng):
    ch = channels_of(random_channels(rng, 2, 2, 3))
    result = sdr_maxmin_small(ch, 2.0, tol=1e-3)
    assert result.t_extracted <= result.t_relax + 1e-3
    assert feed_powers(result.W.W).max() <= 2.0 * (1 + 1e-9)
    assert result.lower_bound_power(0.5 * result.t_relax) <= 3 * 2.0

import numpy as np
import pytest

from igeb import IgebError, set_logging_callback
from igeb.fem import Mesh
from igeb.integrate import TimeGrid, simulate
from igeb.log import IGEB_LOG_LEVEL_WARN, default_logging_callback
from igeb.lyapunov import (
    boundary_matrix,
    build_W,
    certificate,
    design_weight,
    fit_decay,
    interior_certificate,
    lambda_xi,
    lyapunov_matrix,
    lyapunov_series,
    riemann_weight_matrix,
)
from igeb.model import (
    BeamParameters,
    build_A_Bbar,
    diagonalize,
    near_transparent_K,
)
from igeb.presets import helix_zero_velocity
from igeb.weights import ConstantWeight, ExponentialWeight


def teardown_module(module):
    set_logging_callback(default_logging_callback)


def _hesse():
    params = BeamParameters.hesse2012()
    return params, near_transparent_K(params)


def _weight(b=0.5):
    return ExponentialWeight(a=0.0, b=b, eta=5.0, length=1.0, sign="positive")


def test_sqrt_W():
    params, _ = _hesse()
    W = build_W(params, "sqrt")
    expected = np.sqrt(np.diag(params.mass) * np.diag(params.flexibility))
    np.testing.assert_allclose(W, np.diag(expected), rtol=1e-12)

    np.testing.assert_equal(build_W(params, "identity"), np.eye(6))
    np.testing.assert_allclose(build_W(params, "mc"), params.mass @ params.flexibility)

    with pytest.raises(IgebError, match="unknown W variant 'other'"):
        build_W(params, "other")


def test_riemann_weight_matrix():
    params, _ = _hesse()
    rho, w_value = 1.5, 0.3
    W = build_W(params, "sqrt")
    Q_bar = lyapunov_matrix(params, W, rho, w_value)

    L_inv = diagonalize(params).L_inv
    expected = L_inv.T @ Q_bar @ L_inv
    actual = riemann_weight_matrix(params, rho, w_value)
    np.testing.assert_allclose(actual, expected, atol=1e-12 * np.max(np.abs(actual)))


@pytest.mark.parametrize("w_value", [0.4, -0.4])
def test_lambda_xi_decomposition(w_value):
    params, _ = _hesse()
    rho, w_derivative = 1.5, 1.3
    W = build_W(params, "sqrt")
    A, B = build_A_Bbar(params)

    block = np.zeros((12, 12))
    block[:6, 6:] = W
    block[6:, :6] = W.T

    Q_bar = lyapunov_matrix(params, W, rho, w_value)
    S_bar = w_derivative * (block @ A) - Q_bar @ B - B.T @ Q_bar
    S_bar = 0.5 * (S_bar + S_bar.T)

    Lambda, Xi = lambda_xi(W, params, np.sign(w_value))
    expected = -w_derivative * Lambda + abs(w_value) * Xi

    scale = np.max(np.abs(expected))
    np.testing.assert_allclose(S_bar, expected, atol=1e-12 * scale)

    # the sign of w only flips Xi
    _, Xi_negative = lambda_xi(W, params, -np.sign(w_value))
    np.testing.assert_allclose(Xi_negative, -Xi, atol=1e-12 * scale)


def test_lambda_xi_special_cases():
    params, _ = _hesse()
    Lambda, _ = lambda_xi(build_W(params, "sqrt"), params, 1.0)
    expected = np.sqrt(np.diag(params.mass) / np.diag(params.flexibility))
    np.testing.assert_allclose(Lambda[:6, :6], np.diag(expected), rtol=1e-12)

    unit = BeamParameters(length=1.0, mass=np.eye(6), flexibility=np.eye(6))
    Lambda, Xi = lambda_xi(build_W(unit, "sqrt"), unit, 1.0)
    np.testing.assert_allclose(Lambda, np.eye(12), atol=1e-14)
    np.testing.assert_allclose(Xi, Xi.T, atol=1e-14)


def test_controlled_beam_certificate():
    params, K = _hesse()
    result = certificate(params, K, 1.5, _weight(), "sqrt", grid_points=200)

    assert result.verdict
    assert result.failed_conditions() == []
    for name in ["min_eig_Q", "max_asymmetry_QA", "max_eig_S", "max_eig_mu"]:
        assert name in result.margins

    assert result.margins["min_eig_Q"] > 0
    assert result.margins["max_eig_S"] < 0
    assert result.margins["max_eig_mu"] <= 0
    assert result.constants["C_theta"] == pytest.approx(1.0)

    # max |w| sqrt(C_theta) / rho and |w(l)| C_mu / rho
    assert result.margins["w_bound_interior"] == pytest.approx(0.5 / 1.5)
    C_mu = result.constants["C_mu"]
    assert result.margins["w_bound_end"] == pytest.approx(0.5 * C_mu / 1.5)
    assert result.margins["w_bound_end"] < 1

    report = result.report()
    assert report.startswith("verdict: pass")
    assert "margin max_eig_mu" in report

    document = result.as_dict()
    assert document["verdict"] is True
    assert document["weight"]["type"] == "exponential"


def test_free_beam_certificate():
    params, _ = _hesse()
    result = certificate(params, np.zeros((6, 6)), 1.5, _weight(), grid_points=200)

    assert not result.verdict
    assert result.failed_conditions() == ["(iv) mu negative semi-definite"]
    assert result.margins["max_eig_mu"] > 0
    assert result.constants["C_mu"] == np.inf


def test_certificate_monotone_in_rho():
    params, K = _hesse()
    weight = _weight()

    results = [
        certificate(params, K, rho, weight, grid_points=50)
        for rho in [0.3, 0.45, 1.0, 1.5, 3.0, 10.0]
    ]
    passed = [
        result.conditions["(i) Q positive definite"]
        and result.conditions["(iv) mu negative semi-definite"]
        for result in results
    ]
    assert passed == [False, False, True, True, True, True]

    min_eig_Q = [result.margins["min_eig_Q"] for result in results]
    assert np.all(np.diff(min_eig_Q) > 0)

    max_eig_mu = [result.margins["max_eig_mu"] for result in results]
    assert np.all(np.diff(max_eig_mu) < 0)


def test_zero_weight_certificate():
    params, K = _hesse()
    result = certificate(params, K, 1.5, ConstantWeight(value=0.0), grid_points=50)

    assert not result.verdict
    assert result.failed_conditions() == ["(iii) S negative definite"]


def test_boundary_matrix():
    params, K = _hesse()
    W = build_W(params, "sqrt", 1.0)
    mu = boundary_matrix(params, K, W, 1.5, 0.5)
    assert np.max(np.linalg.eigvalsh(mu)) < 0

    # diagonal entries -2 rho K + w (b + K^2 / b)
    b = np.sqrt(np.diag(params.mass) / np.diag(params.flexibility))
    k = np.diag(K)
    np.testing.assert_allclose(np.diag(mu), -3 * k + 0.5 * (b + k**2 / b))

    mu = boundary_matrix(params, np.zeros((6, 6)), W, 1.5, 0.5)
    np.testing.assert_allclose(mu, 0.5 * np.diag(b), rtol=1e-12)


def test_design_weight():
    params, K = _hesse()
    weight = design_weight(params, K, 1.5)

    assert 1.1 < weight.eta < 1.3
    assert 0.6 < weight.b < 0.7
    assert weight.a == 0.0

    result = certificate(params, K, 1.5, weight, grid_points=200)
    assert result.verdict
    assert result.constants["chi"] * 1.5 * 0.9 == pytest.approx(weight.b)
    assert result.margins["w_bound_end"] == pytest.approx(0.9)

    with pytest.raises(IgebError, match="`safety` must be between 0 and 1"):
        design_weight(params, K, 1.5, safety=1.5)


def test_design_weight_singular_feedback():
    recorded = []
    set_logging_callback(lambda level, message: recorded.append((level, message)))

    params, _ = _hesse()
    weight = design_weight(params, np.zeros((6, 6)), 1.5)
    assert weight.b == pytest.approx(0.9 * 1.5)
    assert any(
        level == IGEB_LOG_LEVEL_WARN and "feedback matrix is singular" in message
        for level, message in recorded
    )

    result = certificate(params, np.zeros((6, 6)), 1.5, weight, grid_points=50)
    assert "(iv) mu negative semi-definite" in result.failed_conditions()


def test_interior_errors():
    params, _ = _hesse()
    with pytest.raises(IgebError, match="`rho` must be strictly positive"):
        interior_certificate(params, 0.0, _weight())

    with pytest.raises(IgebError, match="unknown W variant 'diag'"):
        interior_certificate(params, 1.0, _weight(), "diag")


def test_lyapunov_series():
    params, K = _hesse()
    mesh = Mesh(length=1.0, n_elements=3)
    initial = helix_zero_velocity(params, mesh)
    grid = TimeGrid(horizon=0.01, n_points=11)
    trajectory = simulate(params, mesh, grid, K, initial.state)

    flat = certificate(params, K, 1.5, ConstantWeight(value=0.0), grid_points=10)
    series = lyapunov_series(trajectory, flat)
    np.testing.assert_allclose(series, 1.5 * trajectory.energies, rtol=1e-12)

    weighted = certificate(params, K, 1.5, _weight(), grid_points=10)
    series = lyapunov_series(trajectory, weighted)
    assert np.all(series > 0)

    with_derivative = lyapunov_series(trajectory, weighted, order=1)
    assert np.all(with_derivative >= series)

    with pytest.raises(IgebError, match="`order` must be 0 or 1"):
        lyapunov_series(trajectory, weighted, order=2)


def test_fit_decay():
    times = np.linspace(0, 2, 101)
    beta, r2 = fit_decay(3.0 * np.exp(-2 * 0.7 * times), times)
    assert beta == pytest.approx(0.7)
    assert r2 == pytest.approx(1.0)

    beta, r2 = fit_decay(np.full(101, 4.0), times)
    assert beta == 0.0
    assert r2 == 1.0

    series = np.where(times < 1, 10.0, np.exp(-times))
    beta, _ = fit_decay(series, times, window=(1.0, 2.0))
    assert beta == pytest.approx(0.5)

    with pytest.raises(IgebError, match="must be strictly positive"):
        fit_decay(-np.ones(10), np.arange(10.0))


def test_fit_decay_noisy_series():
    rng = np.random.default_rng(0xDECA)
    times = np.linspace(0, 2, 201)
    noise = rng.uniform(-1.0, 1.0, size=times.shape)
    series = 3.0 * np.exp(-1.4 * times) * (1 + 0.01 * noise)

    beta, r2 = fit_decay(series, times)
    assert beta == pytest.approx(0.7, rel=0.05)
    assert r2 > 0.99

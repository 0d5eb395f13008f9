"""
Quadratic Lyapunov functionals for a single beam with boundary feedback, of the
form

.. math::

    \\bar{\\mathcal{L}}(t) = \\int_0^\\ell \\langle y, \\bar{Q}(x) y \\rangle dx,
    \\qquad \\bar{Q} = \\rho Q^P + w \\begin{bmatrix} 0 & W \\\\ W^T & 0
    \\end{bmatrix}

and the checks ensuring their exponential decay along the solutions.
"""

from typing import Optional

import numpy as np
import scipy.linalg
import scipy.stats

from . import log
from .fem import N_CLAMPED, assemble_mass
from .model import (
    BeamParameters,
    build_A_Bbar,
    build_E,
    check_feedback,
    diagonalize,
    sym_power,
)
from .profiling import profiled
from .status import IGEB_INVALID_PARAMETER, IgebError
from .weights import ExponentialWeight, WeightFunction


W_VARIANTS = ("identity", "mc", "sqrt")

ASYMMETRY_TOLERANCE = 1e-10
DEFINITENESS_TOLERANCE = 1e-12


def build_W(params: BeamParameters, variant: str, x: float = 0.0) -> np.ndarray:
    """
    Extra-diagonal block :math:`W` of the Lyapunov weight matrix:

    - ``"identity"``: :math:`I_6`;
    - ``"mc"``: :math:`M C`;
    - ``"sqrt"``: :math:`C^{-1/2} (C^{1/2} M C^{1/2})^{1/2} C^{1/2}`, which is
      :math:`M^{1/2} C^{1/2}` when :math:`M` and :math:`C` commute.
    """
    mass = params.mass_at(x)
    flexibility = params.flexibility_at(x)
    if variant == "identity":
        return np.eye(6)
    elif variant == "mc":
        return mass @ flexibility
    elif variant == "sqrt":
        c_half = sym_power(flexibility, 0.5)
        c_mhalf = sym_power(flexibility, -0.5)
        return c_mhalf @ sym_power(c_half @ mass @ c_half, 0.5) @ c_half
    else:
        raise IgebError(
            f"unknown W variant '{variant}', expected one of {W_VARIANTS}",
            IGEB_INVALID_PARAMETER,
        )


def _weight_block(W) -> np.ndarray:
    block = np.zeros((12, 12))
    block[:6, 6:] = W
    block[6:, :6] = W.T
    return block


def lambda_xi(W, params: BeamParameters, sign_w: float, x: float = 0.0):
    """
    Matrices :math:`\\Lambda = \\text{diag}(W C^{-1}, W^T M^{-1})` and
    :math:`\\Xi` such that, for constant coefficients,

    .. math::

        \\frac{d}{dx}(\\bar{Q} A) - \\bar{Q} \\bar{B} - \\bar{B}^T \\bar{Q}
            = -w' \\Lambda + |w| \\Xi

    :param W: extra-diagonal block from :py:func:`build_W`
    :param params: parameters of the beam
    :param sign_w: sign of the weight :math:`w` at ``x``
    :returns: the tuple ``(Lambda, Xi)`` of 12x12 matrices
    """
    W = np.asarray(W, dtype=np.float64)
    lambda_1 = scipy.linalg.solve(params.flexibility_at(x), W.T, assume_a="pos").T
    lambda_2 = scipy.linalg.solve(params.mass_at(x), W, assume_a="pos").T

    E = build_E(params.precurvature_at(x))
    coupling = scipy.linalg.block_diag(lambda_1 @ E.T, -lambda_2 @ E)

    Lambda = scipy.linalg.block_diag(lambda_1, lambda_2)
    Xi = -np.sign(sign_w) * (coupling + coupling.T)
    return Lambda, Xi


def lyapunov_matrix(
    params: BeamParameters, W, rho: float, w_value: float, x: float = 0.0
) -> np.ndarray:
    """Weight matrix :math:`\\bar{Q}(x) = \\rho Q^P(x) + w(x) [[0, W], [W^T, 0]]`"""
    return rho * params.energy_matrix(x) + w_value * _weight_block(W)


def boundary_matrix(
    params: BeamParameters, K, W, rho: float, w_value: float, x: Optional[float] = None
) -> np.ndarray:
    """
    Boundary matrix :math:`\\mu(x, K) = -2 \\rho K + |w| \\Lambda^I
    + |w| K \\Lambda^{II} K` at the controlled end.
    """
    if x is None:
        x = params.length
    Lambda, _ = lambda_xi(W, params, 1.0, x)
    lambda_1 = Lambda[:6, :6]
    lambda_2 = Lambda[6:, 6:]
    result = -2 * rho * K + abs(w_value) * (lambda_1 + K @ lambda_2 @ K)
    return 0.5 * (result + result.T)


def riemann_weight_matrix(
    params: BeamParameters, rho: float, w_value: float, x: float = 0.0
) -> np.ndarray:
    """
    Weight matrix of the Lyapunov functional written in Riemann invariants,
    :math:`Q = \\frac12 \\text{diag}((\\rho + w) D^{-2}, (\\rho - w) D^{-2})`. For
    the ``"sqrt"`` variant of :math:`W`, :math:`Q = L^{-T} \\bar{Q} L^{-1}`.
    """
    diagonalization = diagonalize(params, x)
    inverse_squared = np.diag(1.0 / diagonalization.speeds**2)
    return 0.5 * scipy.linalg.block_diag(
        (rho + w_value) * inverse_squared, (rho - w_value) * inverse_squared
    )


def _max_eig(matrix) -> float:
    return float(scipy.linalg.eigvalsh(0.5 * (matrix + matrix.T))[-1])


def _min_eig(matrix) -> float:
    return float(scipy.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])


class LyapunovCertificate:
    """
    Result of the stability checks of a quadratic Lyapunov functional for a beam
    clamped at :math:`x = 0` with feedback :math:`K` at :math:`x = \\ell`:

    - (i) :math:`\\bar{Q}` is positive definite;
    - (ii) :math:`\\bar{Q} A` is symmetric;
    - (iii) :math:`\\bar{S} = \\frac{d}{dx}(\\bar{Q} A) - \\bar{Q} \\bar{B} -
      \\bar{B}^T \\bar{Q}` is negative definite;
    - (iv) :math:`\\mu(\\ell, K)` is negative semi-definite and :math:`w(0) \\geq 0`.
    """

    def __init__(
        self,
        *,
        params: BeamParameters,
        feedback: np.ndarray,
        rho: float,
        weight: WeightFunction,
        variant: str,
        margins: dict,
        conditions: dict,
        constants: dict,
    ):
        self.params = params
        self.feedback = feedback
        self.rho = rho
        self.weight = weight
        self.variant = variant

        self.margins = margins
        """numerical margins of all the conditions"""
        self.conditions = conditions
        """``dict`` from condition name to pass/fail status"""
        self.constants = constants
        """constants :math:`C_\\Lambda, C_\\Xi, C_\\theta, C_\\mu` and the smallest
        admissible decay rate of the weight"""

    @property
    def verdict(self) -> bool:
        return all(self.conditions.values())

    def failed_conditions(self):
        return [name for name, passed in self.conditions.items() if not passed]

    def W(self, x: float = 0.0) -> np.ndarray:
        return build_W(self.params, self.variant, x)

    def lyapunov_matrix(self, x: float) -> np.ndarray:
        w_value = float(self.weight(np.array([x]))[0])
        return lyapunov_matrix(self.params, self.W(x), self.rho, w_value, x)

    def as_dict(self):
        try:
            weight = self.weight.get_hypers()
        except NotImplementedError:
            weight = self.weight.__class__.__name__

        return {
            "verdict": self.verdict,
            "rho": self.rho,
            "variant": self.variant,
            "weight": weight,
            "feedback": self.feedback.tolist(),
            "conditions": dict(self.conditions),
            "margins": dict(self.margins),
            "constants": dict(self.constants),
        }

    def report(self) -> str:
        lines = [f"verdict: {'pass' if self.verdict else 'fail'}"]
        for name, passed in self.conditions.items():
            lines.append(f"condition {name}: {'pass' if passed else 'FAIL'}")
        for name, value in self.margins.items():
            lines.append(f"margin {name}: {value:.6e}")
        for name, value in self.constants.items():
            lines.append(f"constant {name}: {value:.6e}")
        return "\n".join(lines)


def _interior_scan(params, rho, weight, variant, grid_points):
    """Evaluate conditions (i) to (iii) and the constants along the beam"""
    x_grid = np.linspace(0.0, params.length, grid_points)
    w_values = weight(x_grid)
    w_derivatives = weight.derivative(x_grid)

    min_eig_Q = np.inf
    max_asymmetry = 0.0
    max_eig_S = -np.inf
    max_norm_S = 0.0
    C_lambda = np.inf
    C_xi = -np.inf
    C_theta = -np.inf
    eta_min = -np.inf
    max_abs_w = 0.0

    for x, w_value, w_derivative in zip(x_grid, w_values, w_derivatives):
        W = build_W(params, variant, x)
        A, B = build_A_Bbar(params, x)

        Q_bar = lyapunov_matrix(params, W, rho, w_value, x)
        min_eig_Q = min(min_eig_Q, _min_eig(Q_bar))

        QA = Q_bar @ A
        scale = max(1.0, np.max(np.abs(QA)))
        max_asymmetry = max(max_asymmetry, np.max(np.abs(QA - QA.T)) / scale)

        # coefficients are constant, the derivative of Q A only involves w'
        S_bar = w_derivative * (_weight_block(W) @ A) - Q_bar @ B - B.T @ Q_bar
        S_bar = 0.5 * (S_bar + S_bar.T)
        max_eig_S = max(max_eig_S, _max_eig(S_bar))
        max_norm_S = max(max_norm_S, np.linalg.norm(S_bar, 2))

        Lambda, Xi_plus = lambda_xi(W, params, 1.0, x)
        Lambda = 0.5 * (Lambda + Lambda.T)
        C_lambda = min(C_lambda, _min_eig(Lambda))
        C_xi = max(C_xi, _max_eig(Xi_plus), _max_eig(-Xi_plus))

        lambda_mhalf = sym_power(Lambda, -0.5)
        scaled = lambda_mhalf @ Xi_plus @ lambda_mhalf
        eta_min = max(eta_min, _max_eig(scaled), _max_eig(-scaled))

        m_mhalf = sym_power(params.mass_at(x), -0.5)
        C_inv = np.linalg.inv(params.flexibility_at(x))
        theta = m_mhalf @ W @ C_inv @ W.T @ m_mhalf
        C_theta = max(C_theta, _max_eig(theta))

        max_abs_w = max(max_abs_w, abs(w_value))

    margins = {
        "min_eig_Q": min_eig_Q,
        "max_asymmetry_QA": max_asymmetry,
        "max_eig_S": max_eig_S,
    }
    conditions = {
        "(i) Q positive definite": bool(min_eig_Q > 0),
        "(ii) QA symmetric": bool(max_asymmetry <= ASYMMETRY_TOLERANCE),
        "(iii) S negative definite": bool(
            max_eig_S < -DEFINITENESS_TOLERANCE * max(max_norm_S, 1.0)
        ),
    }
    constants = {
        "C_Lambda": C_lambda,
        "C_Xi": C_xi,
        "C_theta": C_theta,
        "eta_min": max(eta_min, 0.0),
        "max_abs_w": max_abs_w,
    }
    return margins, conditions, constants


def interior_certificate(
    params: BeamParameters,
    rho: float,
    weight: WeightFunction,
    W_variant: str = "sqrt",
    grid_points: int = 1000,
):
    """
    Check conditions (i) to (iii) inside a beam, without the boundary condition.
    This is used for the beams of a network.

    :returns: the tuple ``(margins, conditions, constants)`` of dictionaries
    """
    rho = float(rho)
    if not rho > 0:
        raise IgebError(
            f"`rho` must be strictly positive, got {rho}", IGEB_INVALID_PARAMETER
        )

    if W_variant not in W_VARIANTS:
        raise IgebError(
            f"unknown W variant '{W_variant}', expected one of {W_VARIANTS}",
            IGEB_INVALID_PARAMETER,
        )

    return _interior_scan(params, rho, weight, W_variant, int(grid_points))


def _feedback_constant(params, K, W, x):
    """Largest eigenvalue of K^{-1/2} Lambda_I K^{-1/2} + K^{1/2} Lambda_II K^{1/2}"""
    if _min_eig(K) <= 0:
        return np.inf

    Lambda, _ = lambda_xi(W, params, 1.0, x)
    k_half = sym_power(K, 0.5)
    k_mhalf = sym_power(K, -0.5)
    matrix = k_mhalf @ Lambda[:6, :6] @ k_mhalf + k_half @ Lambda[6:, 6:] @ k_half
    return _max_eig(matrix)


@profiled
def certificate(
    params: BeamParameters,
    K,
    rho: float,
    weight: WeightFunction,
    W_variant: str = "sqrt",
    grid_points: int = 1000,
) -> LyapunovCertificate:
    """
    Check that the Lyapunov functional defined by ``rho``, ``weight`` and
    ``W_variant`` decays exponentially for the beam with feedback ``K``.

    :param params: parameters of the beam
    :param K: symmetric positive semi-definite feedback matrix at :math:`x = \\ell`
    :param rho: positive factor in front of :math:`Q^P`
    :param weight: weight :math:`w(x)` of the extra-diagonal terms
    :param W_variant: one of ``"identity"``, ``"mc"`` or ``"sqrt"``
    :param grid_points: number of points of the grid on which pointwise
        conditions are checked
    """
    K = check_feedback(K)
    margins, conditions, constants = interior_certificate(
        params, rho, weight, W_variant, grid_points
    )
    rho = float(rho)

    ell = params.length
    w_start = float(weight(np.array([0.0]))[0])
    w_end = float(weight(np.array([ell]))[0])

    W_end = build_W(params, W_variant, ell)
    mu = boundary_matrix(params, K, W_end, rho, w_end, ell)
    max_eig_mu = _max_eig(mu)
    scale_mu = max(np.linalg.norm(mu, 2), 1.0)

    margins["max_eig_mu"] = max_eig_mu
    margins["w_start"] = w_start
    conditions["(iv) mu negative semi-definite"] = bool(
        max_eig_mu <= DEFINITENESS_TOLERANCE * scale_mu
    )
    conditions["(iv) w(0) non-negative"] = bool(w_start >= 0)

    C_mu = _feedback_constant(params, K, W_end, ell)
    constants["C_mu"] = C_mu
    constants["chi"] = min(constants["C_theta"] ** -0.5, 1.0 / C_mu)

    # sufficient bounds on the weight, both must stay below 1
    margins["w_bound_interior"] = float(
        constants["max_abs_w"] * np.sqrt(constants["C_theta"]) / rho
    )
    margins["w_bound_end"] = 0.0 if w_end == 0 else float(abs(w_end) * C_mu / rho)

    result = LyapunovCertificate(
        params=params,
        feedback=K,
        rho=rho,
        weight=weight,
        variant=W_variant,
        margins=margins,
        conditions=conditions,
        constants=constants,
    )

    if result.verdict:
        log.info("lyapunov", "all stability conditions are fulfilled")
    else:
        log.info(
            "lyapunov",
            "failed stability conditions: " + ", ".join(result.failed_conditions()),
        )
    return result


def design_weight(
    params: BeamParameters,
    K,
    rho: float,
    *,
    W_variant: str = "sqrt",
    eta: Optional[float] = None,
    safety: float = 0.9,
) -> ExponentialWeight:
    """
    Build an increasing exponential weight :math:`w` with :math:`w(0) = 0`
    compatible with the feedback ``K``: the rate :math:`\\eta` must be larger than
    the generalized eigenvalues of :math:`(\\Xi, \\Lambda)`, and the final value is
    ``safety`` times :math:`\\chi \\rho`, with :math:`\\chi =
    \\min(C_\\theta^{-1/2}, C_\\mu^{-1})`.

    :param eta: decay rate of the weight, defaults to the smallest admissible
        one. The cruder bound :math:`C_\\Xi / C_\\Lambda` can be passed here as
        well.
    :param safety: factor between 0 and 1 applied to the largest admissible
        value of the weight
    """
    if not 0 < safety < 1:
        raise IgebError(
            f"`safety` must be between 0 and 1, got {safety}", IGEB_INVALID_PARAMETER
        )

    K = check_feedback(K)
    ell = params.length
    unit_weight = ExponentialWeight(
        a=0.0, b=1.0, eta=1.0, length=ell, sign="positive"
    )
    _, _, constants = interior_certificate(
        params, rho, unit_weight, W_variant, grid_points=2
    )
    C_mu = _feedback_constant(params, K, build_W(params, W_variant, ell), ell)

    chi = min(constants["C_theta"] ** -0.5, 1.0 / C_mu)
    if chi == 0.0:
        # singular feedback, no positive weight can satisfy the boundary condition
        log.warn(
            "lyapunov",
            "the feedback matrix is singular, the weight is only bounded by C_theta",
        )
        chi = constants["C_theta"] ** -0.5

    if eta is None:
        eta = constants["eta_min"]
    eta = max(float(eta), 1e-12)

    return ExponentialWeight(
        a=0.0, b=safety * chi * rho, eta=eta, length=params.length, sign="positive"
    )


def energy(trajectory) -> np.ndarray:
    """
    Discrete energy :math:`\\langle \\mathbf{y}^k, \\mathcal{M} \\mathbf{y}^k
    \\rangle` at all the instants of a trajectory
    """
    states = trajectory.states
    weighted = (trajectory.system.mass @ states.T).T
    return np.sum(states * weighted, axis=1)


@profiled
def lyapunov_series(trajectory, certificate: LyapunovCertificate, order: int = 0):
    """
    Discrete Lyapunov functional at all the instants of a trajectory, using the
    mass matrix assembled with :math:`\\bar{Q}` in place of :math:`Q^P`. With
    ``order=1``, the same quadratic form evaluated on the time derivative of the
    states (central differences inside the time interval) is added.
    """
    if order not in [0, 1]:
        raise IgebError(
            f"`order` must be 0 or 1, got {order}", IGEB_INVALID_PARAMETER
        )

    mass = assemble_mass(trajectory.system.mesh, certificate.lyapunov_matrix)
    mass = mass[N_CLAMPED:, N_CLAMPED:]

    states = trajectory.states
    series = np.sum(states * (mass @ states.T).T, axis=1)
    if order == 1:
        derivatives = np.gradient(states, trajectory.grid.step, axis=0)
        series = series + np.sum(derivatives * (mass @ derivatives.T).T, axis=1)

    return series


def fit_decay(series, times, window=None):
    """
    Fit :math:`\\log L(t) \\approx c - 2 \\beta t` by least squares.

    :param series: positive values of the functional
    :param times: instants corresponding to ``series``
    :param window: optional ``(start, stop)`` interval of times used for the fit
    :returns: the tuple ``(beta, r2)`` of the decay rate and the coefficient of
        determination of the fit
    """
    series = np.asarray(series, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if window is not None:
        start, stop = window
        selected = (times >= start) & (times <= stop)
        series = series[selected]
        times = times[selected]

    if len(series) < 2:
        raise IgebError(
            "need at least two values to fit the decay rate", IGEB_INVALID_PARAMETER
        )

    if np.any(series <= 0):
        raise IgebError(
            "the series must be strictly positive to fit the decay rate",
            IGEB_INVALID_PARAMETER,
        )

    logarithm = np.log(series)
    if np.ptp(logarithm) == 0.0:
        return 0.0, 1.0

    fit = scipy.stats.linregress(times, logarithm)
    return float(-fit.slope / 2), float(fit.rvalue**2)

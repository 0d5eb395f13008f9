"""
Implicit midpoint time discretization of the semi-discrete system, solved with
Newton-Raphson iterations at each time step.
"""

from typing import Optional

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import log
from .fem import AssembledSystem, Mesh, assemble
from .lyapunov import energy
from .model import BeamParameters
from .profiling import profiled
from .status import (
    IGEB_INVALID_PARAMETER,
    IGEB_SOLVER_ERROR,
    ConvergenceError,
    IgebError,
)


class TimeGrid:
    """Uniform time grid of ``n_points`` instants on :math:`[0, T]`"""

    def __init__(self, *, horizon: float, n_points: int):
        self.horizon = float(horizon)
        self.n_points = int(n_points)

        if not self.horizon > 0:
            raise IgebError(
                f"time horizon must be strictly positive, got {self.horizon}",
                IGEB_INVALID_PARAMETER,
            )

        if self.n_points < 2:
            raise IgebError(
                f"time grid needs at least two points, got {self.n_points}",
                IGEB_INVALID_PARAMETER,
            )

    @property
    def step(self) -> float:
        """time step :math:`h_t = T / (N_t - 1)`"""
        return self.horizon / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_points)


class NewtonSettings:
    """
    Settings of the Newton-Raphson iterations. The iterations stop when the
    residual norm is below ``tol_abs + tol_rel * |F(y^k)|``.
    """

    def __init__(
        self,
        *,
        max_iter: int = 20,
        tol_rel: float = 1e-10,
        tol_abs: Optional[float] = None,
    ):
        """
        :param max_iter: maximal number of iterations
        :param tol_rel: tolerance relative to the residual of the initial guess
        :param tol_abs: absolute tolerance, defaults to :math:`10^{-12}
            \\sqrt{N_f}` for a system with :math:`N_f` unknowns
        """
        self.max_iter = int(max_iter)
        self.tol_rel = float(tol_rel)
        self.tol_abs = None if tol_abs is None else float(tol_abs)

        if self.max_iter < 1:
            raise IgebError(
                f"`max_iter` must be at least 1, got {self.max_iter}",
                IGEB_INVALID_PARAMETER,
            )

        if not self.tol_rel > 0:
            raise IgebError(
                f"`tol_rel` must be strictly positive, got {self.tol_rel}",
                IGEB_INVALID_PARAMETER,
            )

        if self.tol_abs is not None and not self.tol_abs > 0:
            raise IgebError(
                f"`tol_abs` must be strictly positive, got {self.tol_abs}",
                IGEB_INVALID_PARAMETER,
            )

    def absolute_tolerance(self, n_dofs: int) -> float:
        if self.tol_abs is None:
            return 1e-12 * np.sqrt(n_dofs)
        return self.tol_abs

    def get_hypers(self):
        return {
            "max_iter": self.max_iter,
            "tol_rel": self.tol_rel,
            "tol_abs": self.tol_abs,
        }


class Trajectory:
    """
    States of a simulation at all the instants of a :py:class:`TimeGrid`, together
    with Newton diagnostics for each time step.
    """

    def __init__(
        self,
        *,
        system: AssembledSystem,
        grid: TimeGrid,
        states: np.ndarray,
        iterations: Optional[np.ndarray] = None,
        residuals: Optional[np.ndarray] = None,
    ):
        states = np.asarray(states, dtype=np.float64)
        if states.shape != (grid.n_points, system.n_dofs):
            raise IgebError(
                f"expected states with shape ({grid.n_points}, {system.n_dofs}), "
                f"got {states.shape}",
                IGEB_INVALID_PARAMETER,
            )

        self.system = system
        self.grid = grid
        self.states = states

        n_steps = grid.n_points - 1
        if iterations is None:
            iterations = np.zeros(n_steps, dtype=np.int64)
        if residuals is None:
            residuals = np.zeros(n_steps)

        self.iterations = np.asarray(iterations, dtype=np.int64)
        """number of Newton iterations for each time step"""
        self.residuals = np.asarray(residuals, dtype=np.float64)
        """final residual norm for each time step"""

        self.energies = energy(self)
        """discrete energy :math:`\\langle \\mathbf{y}^k, \\mathcal{M}
        \\mathbf{y}^k \\rangle` at each instant"""

    @property
    def mesh(self) -> Mesh:
        return self.system.mesh

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def nodal_states(self) -> np.ndarray:
        """states at all nodes, with shape ``(n_times, n_nodes, 12)``"""
        return self.system.full_state(self.states)


def _check_shapes(system, *vectors):
    for vector in vectors:
        if np.shape(vector) != (system.n_dofs,):
            raise IgebError(
                f"expected a vector with {system.n_dofs} components, "
                f"got shape {np.shape(vector)}",
                IGEB_INVALID_PARAMETER,
            )


def residual(system: AssembledSystem, y_k, zeta, h: float) -> np.ndarray:
    """
    Residual of the implicit midpoint rule between ``y_k`` and the candidate
    ``zeta`` for the next time step

    .. math::

        F_k(\\zeta) = (\\mathcal{M} + \\tfrac{h}{2}\\mathcal{K}) \\zeta
            - (\\mathcal{M} - \\tfrac{h}{2}\\mathcal{K}) \\mathbf{y}^k
            + \\tfrac{h}{4} \\mathcal{Q}(\\mathbf{y}^k + \\zeta)
                (\\mathbf{y}^k + \\zeta)
    """
    y_k = np.asarray(y_k, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    _check_shapes(system, y_k, zeta)

    M = system.mass
    K = system.stiffness
    result = M @ (zeta - y_k) + 0.5 * h * (K @ (zeta + y_k))
    result += 0.25 * h * (system.eval_Q(y_k) @ (y_k + zeta))
    result += 0.25 * h * (system.eval_Q(zeta) @ (y_k + zeta))
    return result


def jacobian(system: AssembledSystem, y_k, zeta, h: float) -> scipy.sparse.csr_matrix:
    """
    Jacobian of :py:func:`residual` with respect to ``zeta``

    .. math::

        \\mathcal{M} + \\tfrac{h}{2}\\mathcal{K}
            + \\tfrac{h}{4}(\\mathcal{Q}(\\mathbf{y}^k)
                + \\mathcal{Q}^\\dagger(\\mathbf{y}^k))
            + \\tfrac{h}{4}(\\mathcal{Q}(\\zeta) + \\mathcal{Q}^\\dagger(\\zeta))
    """
    y_k = np.asarray(y_k, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    _check_shapes(system, y_k, zeta)

    result = system.mass + 0.5 * h * system.stiffness
    result = result + 0.25 * h * (system.eval_Q(y_k) + system.eval_Qdagger(y_k))
    result = result + 0.25 * h * (system.eval_Q(zeta) + system.eval_Qdagger(zeta))
    return result.tocsr()


class _Stepper:
    """Newton iterations sharing the linear parts of the residual between steps"""

    def __init__(self, system: AssembledSystem, h: float, settings: NewtonSettings):
        self.system = system
        self.h = float(h)
        self.settings = settings
        self.lhs = (system.mass + 0.5 * self.h * system.stiffness).tocsr()
        self.rhs = (system.mass - 0.5 * self.h * system.stiffness).tocsr()
        self.tol_abs = settings.absolute_tolerance(system.n_dofs)

    def __call__(self, y_k, step_index=None):
        system = self.system
        h = self.h

        Q_k = system.eval_Q(y_k)
        Q_k_sym = Q_k + system.eval_Qdagger(y_k)
        constant = self.rhs @ y_k - 0.25 * h * (Q_k @ y_k)
        linear = (self.lhs + 0.25 * h * Q_k).tocsr()

        def F(zeta):
            # Q(zeta) y_k = Q^dagger(y_k) zeta
            Q_zeta = system.eval_Q(zeta)
            return (
                linear @ zeta
                - constant
                + 0.25 * h * (Q_zeta @ y_k)
                + 0.25 * h * (Q_zeta @ zeta)
            )

        zeta = y_k.copy()
        initial = np.linalg.norm(F(zeta))
        tolerance = self.tol_abs + self.settings.tol_rel * initial

        history = []
        for iteration in range(1, self.settings.max_iter + 1):
            jacobian = self.lhs + 0.25 * h * Q_k_sym
            jacobian = jacobian + 0.25 * h * (
                system.eval_Q(zeta) + system.eval_Qdagger(zeta)
            )
            try:
                lu = scipy.sparse.linalg.splu(jacobian.tocsc())
            except RuntimeError as e:
                raise IgebError(
                    f"failed to factorize the Newton jacobian: {e}", IGEB_SOLVER_ERROR
                )

            zeta = zeta - lu.solve(F(zeta))
            norm = np.linalg.norm(F(zeta))
            history.append(norm)

            if not np.isfinite(norm):
                break

            if norm <= tolerance:
                return zeta, iteration, history

        where = "" if step_index is None else f" at time step {step_index}"
        log.error(
            "integrate",
            f"Newton iterations did not converge{where}, residual norm is "
            f"{history[-1]:.6e} (tolerance {tolerance:.6e})",
        )
        raise ConvergenceError(
            f"Newton iterations did not converge{where} after "
            f"{len(history)} iterations, residual norm is {history[-1]:.6e}",
            residual=float(history[-1]),
            step=step_index,
        )


@profiled
def step(
    system: AssembledSystem,
    y_k,
    h: float,
    settings: Optional[NewtonSettings] = None,
    *,
    full_output: bool = False,
):
    """
    Compute the state at the next time step with the implicit midpoint rule.

    :param system: assembled semi-discrete system
    :param y_k: current state
    :param h: time step, can be negative to go back in time
    :param settings: Newton settings, defaults to :py:class:`NewtonSettings()`
    :param full_output: also return the residual norm after each iteration
    :returns: the new state and the number of Newton iterations, and the list of
        residual norms if ``full_output`` is ``True``
    """
    if settings is None:
        settings = NewtonSettings()

    y_k = np.asarray(y_k, dtype=np.float64)
    _check_shapes(system, y_k)

    state, iterations, history = _Stepper(system, h, settings)(y_k)
    if full_output:
        return state, iterations, history
    return state, iterations


@profiled
def simulate(
    params: BeamParameters,
    mesh: Mesh,
    grid: TimeGrid,
    feedback,
    initial,
    settings: Optional[NewtonSettings] = None,
    *,
    n_threads: int = 1,
) -> Trajectory:
    """
    Simulate a beam clamped at :math:`x = 0`, with the given ``feedback`` at
    :math:`x = \\ell` and starting from the ``initial`` reduced state.

    :param params: parameters of the beam
    :param mesh: mesh used for the space discretization
    :param grid: time grid
    :param feedback: feedback matrix, ``None`` or zero for a free end
    :param initial: initial state, with :py:attr:`Mesh.n_dofs` components
    :param settings: Newton settings
    :param n_threads: number of threads used for the assembly
    """
    if settings is None:
        settings = NewtonSettings()

    system = assemble(params, mesh, feedback, n_threads=n_threads)

    initial = np.asarray(initial, dtype=np.float64)
    _check_shapes(system, initial)

    n_steps = grid.n_points - 1
    states = np.zeros((grid.n_points, system.n_dofs))
    iterations = np.zeros(n_steps, dtype=np.int64)
    residuals = np.zeros(n_steps)
    states[0] = initial

    log.info(
        "integrate",
        f"simulating {n_steps} time steps of size {grid.step:.6e} with "
        f"{system.n_dofs} unknowns",
    )

    stepper = _Stepper(system, grid.step, settings)
    for k in range(n_steps):
        state, n_iterations, history = stepper(states[k], step_index=k)
        states[k + 1] = state
        iterations[k] = n_iterations
        residuals[k] = history[-1]
        log.debug(
            "integrate",
            f"step {k}: {n_iterations} Newton iterations, residual {history[-1]:.3e}",
        )

    return Trajectory(
        system=system,
        grid=grid,
        states=states,
        iterations=iterations,
        residuals=residuals,
    )

"""
Recovery of the centerline position :math:`p` and cross-section rotation
:math:`R` of the beam from the intrinsic variables, and the forward
transformation of initial data.

Rotations are parametrized by unit quaternions stored as arrays
``(q0, q1, q2, q3)``, with ``q0`` the real part.
"""

from typing import Optional

import numpy as np
import scipy.integrate
import scipy.spatial.transform

from .fem import AssembledSystem
from .model import BeamParameters, PointState, skew, unskew
from .profiling import profiled
from .status import IGEB_INVALID_PARAMETER, IGEB_SOLVER_ERROR, IgebError


QUATERNION_TOLERANCE = 1e-9
ROTATION_TOLERANCE = 1e-9

_E1 = np.array([1.0, 0.0, 0.0])


def _check_unit(q):
    norms = np.linalg.norm(q, axis=-1)
    error = np.max(np.abs(norms - 1.0)) if norms.size else 0.0
    if not error <= QUATERNION_TOLERANCE:
        raise IgebError(
            f"expected unit quaternions, norm differs from 1 by {error:.3e}",
            IGEB_INVALID_PARAMETER,
        )


def _check_rotation(R, tolerance=ROTATION_TOLERANCE):
    R = np.asarray(R, dtype=np.float64)
    if R.shape[-2:] != (3, 3):
        raise IgebError(
            f"expected 3x3 rotation matrices, got shape {R.shape}",
            IGEB_INVALID_PARAMETER,
        )

    identity = np.swapaxes(R, -1, -2) @ R - np.eye(3)
    orthogonality = np.max(np.abs(identity)) if identity.size else 0.0
    determinant = np.linalg.det(R)
    if not orthogonality <= tolerance or np.any(np.abs(determinant - 1) > tolerance):
        raise IgebError(
            "expected rotation matrices (orthogonal with unit determinant)",
            IGEB_INVALID_PARAMETER,
        )
    return R


def quat_to_rot(q) -> np.ndarray:
    """
    Rotation matrix :math:`R = (q_0^2 - |q|^2) I + 2 q q^T + 2 q_0 \\hat{q}`
    parametrized by the unit quaternion ``q``. ``q`` can have leading dimensions.
    Quaternions which are not normalized are rejected.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 4:
        raise IgebError(
            f"expected quaternions with 4 components, got shape {q.shape}",
            IGEB_INVALID_PARAMETER,
        )
    _check_unit(q)

    q0 = q[..., 0, None, None]
    vector = q[..., 1:]
    squared = np.sum(vector**2, axis=-1)[..., None, None]
    return (
        (q0**2 - squared) * np.eye(3)
        + 2 * vector[..., :, None] * vector[..., None, :]
        + 2 * q0 * skew(vector)
    )


def rot_to_quat(R) -> np.ndarray:
    """
    Unit quaternion parametrizing the rotation ``R``, with a non-negative real
    part. When the real part is zero, the first non-zero component is positive.
    """
    R = _check_rotation(R)
    shape = R.shape[:-2]
    rotations = scipy.spatial.transform.Rotation.from_matrix(R.reshape(-1, 3, 3))
    xyzw = rotations.as_quat()
    q = np.concatenate([xyzw[:, 3:], xyzw[:, :3]], axis=1)

    for quaternion in q:
        nonzero = np.nonzero(np.abs(quaternion) > 1e-15)[0]
        if len(nonzero) != 0 and quaternion[nonzero[0]] < 0:
            quaternion *= -1

    return q.reshape(shape + (4,))


def U_of(w) -> np.ndarray:
    """
    Skew-symmetric matrix :math:`\\mathcal{U}(w) = \\frac12 \\begin{bmatrix} 0 &
    -w^T \\\\ w & -\\hat{w} \\end{bmatrix}` of the quaternion differential
    equation :math:`\\dot{q} = \\mathcal{U}(w) q`. ``w`` can have leading
    dimensions.
    """
    w = np.asarray(w, dtype=np.float64)
    U = np.zeros(w.shape[:-1] + (4, 4))
    U[..., 0, 1:] = -w
    U[..., 1:, 0] = w
    U[..., 1:, 1:] = -skew(w)
    return 0.5 * U


def advance_quaternion(q, w_k, w_next, h: float) -> np.ndarray:
    """
    Midpoint (Cayley) update :math:`q^{k+1} = (I - \\frac{h}{2} U)^{-1}
    (I + \\frac{h}{2} U) q^k` with :math:`U = \\mathcal{U}((w_k + w_{k+1}) / 2)`.
    All arguments can have the same leading dimensions. The sign of the result
    is chosen such that :math:`\\langle q^{k+1}, q^k \\rangle \\geq 0`.
    """
    q = np.asarray(q, dtype=np.float64)
    U = U_of(0.5 * (np.asarray(w_k) + np.asarray(w_next)))

    identity = np.eye(4)
    try:
        result = np.linalg.solve(
            identity - 0.5 * h * U, ((identity + 0.5 * h * U) @ q[..., None])
        )[..., 0]
    except np.linalg.LinAlgError as e:
        raise IgebError(
            f"singular system in quaternion update: {e}", IGEB_SOLVER_ERROR
        )

    flip = np.sum(result * q, axis=-1) < 0
    result[flip] *= -1
    return result


class FrameField:
    """
    Centerline positions and cross-section orientations at the nodes of a mesh,
    for a set of instants.
    """

    def __init__(self, *, times, nodes, positions, quaternions):
        self.times = np.asarray(times, dtype=np.float64)
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.positions = np.asarray(positions, dtype=np.float64)
        """positions with shape ``(n_times, n_nodes, 3)``"""
        self.quaternions = np.asarray(quaternions, dtype=np.float64)
        """quaternions with shape ``(n_times, n_nodes, 4)``"""

        expected = (len(self.times), len(self.nodes))
        if (
            self.positions.shape != expected + (3,)
            or self.quaternions.shape != expected + (4,)
        ):
            raise IgebError(
                "inconsistent shapes in frame field", IGEB_INVALID_PARAMETER
            )

    def rotations(self) -> np.ndarray:
        """rotation matrices with shape ``(n_times, n_nodes, 3, 3)``"""
        return quat_to_rot(self.quaternions)

    def rows(self):
        """rows ``(t, x, p1, p2, p3, q0, q1, q2, q3)`` ordered by time then node"""
        n_times, n_nodes = len(self.times), len(self.nodes)
        t = np.repeat(self.times, n_nodes)[:, None]
        x = np.tile(self.nodes, n_times)[:, None]
        return np.hstack(
            [
                t,
                x,
                self.positions.reshape(-1, 3),
                self.quaternions.reshape(-1, 4),
            ]
        )


@profiled
def reconstruct_time(trajectory, positions, rotations) -> FrameField:
    """
    Recover the frames at all nodes and instants of ``trajectory``, by marching
    in time from the initial frames. The quaternions follow
    :math:`\\partial_t q = \\mathcal{U}(v_2) q` and the positions
    :math:`\\partial_t p = R v_1` (integrated with the trapezoidal rule).

    :param trajectory: :py:class:`igeb.integrate.Trajectory` to reconstruct
    :param positions: initial centerline positions at the mesh nodes,
        shape ``(n_nodes, 3)``
    :param rotations: initial rotations at the mesh nodes, shape
        ``(n_nodes, 3, 3)``
    """
    mesh = trajectory.mesh
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape != (mesh.n_nodes, 3):
        raise IgebError(
            f"expected initial positions with shape ({mesh.n_nodes}, 3), "
            f"got {positions.shape}",
            IGEB_INVALID_PARAMETER,
        )

    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.shape != (mesh.n_nodes, 3, 3):
        raise IgebError(
            f"expected initial rotations with shape ({mesh.n_nodes}, 3, 3), "
            f"got {rotations.shape}",
            IGEB_INVALID_PARAMETER,
        )

    nodal = trajectory.nodal_states()
    linear = nodal[..., 0:3]
    angular = nodal[..., 3:6]
    h = trajectory.grid.step

    quaternions = np.zeros(nodal.shape[:2] + (4,))
    quaternions[0] = rot_to_quat(rotations)
    for k in range(len(quaternions) - 1):
        quaternions[k + 1] = advance_quaternion(
            quaternions[k], angular[k], angular[k + 1], h
        )

    velocities = np.einsum("tnij,tnj->tni", quat_to_rot(quaternions), linear)
    displacement = scipy.integrate.cumulative_trapezoid(
        velocities, dx=h, axis=0, initial=0
    )

    return FrameField(
        times=trajectory.times,
        nodes=mesh.nodes,
        positions=positions[None, :, :] + displacement,
        quaternions=quaternions,
    )


def _march_space(strains, params: BeamParameters, nodes, position, rotation):
    """Integrate the frames along the nodes from the strains at these nodes"""
    n_nodes = len(nodes)
    quaternions = np.zeros((n_nodes, 4))
    quaternions[0] = rot_to_quat(rotation)

    for alpha in range(n_nodes - 1):
        dx = nodes[alpha + 1] - nodes[alpha]
        curvature = params.precurvature_at(0.5 * (nodes[alpha] + nodes[alpha + 1]))
        quaternions[alpha + 1] = advance_quaternion(
            quaternions[alpha],
            strains[alpha, 3:] + curvature,
            strains[alpha + 1, 3:] + curvature,
            dx,
        )

    tangents = np.einsum(
        "nij,nj->ni", quat_to_rot(quaternions), strains[:, :3] + _E1
    )
    positions = np.asarray(position, dtype=np.float64) + (
        scipy.integrate.cumulative_trapezoid(tangents, x=nodes, axis=0, initial=0)
    )
    return positions, quaternions


def reconstruct_space(
    state, system: AssembledSystem, position, rotation, time: float = 0.0
) -> FrameField:
    """
    Recover the frames along the beam at a single instant from the strains
    :math:`s = C z` of the reduced ``state``, by marching in space from the frame
    ``(position, rotation)`` at the clamped end. The quaternions follow
    :math:`\\partial_x q = \\mathcal{U}(s_2 + \\Upsilon_c) q` and the positions
    :math:`\\partial_x p = R (s_1 + e_1)`.
    """
    if position is None or rotation is None:
        raise IgebError(
            "the frame at the clamped end is required", IGEB_INVALID_PARAMETER
        )

    params = system.params
    mesh = system.mesh
    nodal = system.full_state(state)
    strains = np.stack(
        [
            PointState.from_vector(nodal[i]).strains(params, x)
            for i, x in enumerate(mesh.nodes)
        ]
    )

    positions, quaternions = _march_space(
        strains, params, mesh.nodes, position, rotation
    )
    return FrameField(
        times=[time],
        nodes=mesh.nodes,
        positions=positions[None],
        quaternions=quaternions[None],
    )


@profiled
def reconstruct_space_series(trajectory, position, rotation) -> FrameField:
    """
    Apply :py:func:`reconstruct_space` at every instant of ``trajectory``. The
    frame at the clamped end is constant in time.
    """
    system = trajectory.system
    positions = []
    quaternions = []
    for state, t in zip(trajectory.states, trajectory.times):
        frames = reconstruct_space(state, system, position, rotation, t)
        positions.append(frames.positions[0])
        quaternions.append(frames.quaternions[0])

    return FrameField(
        times=trajectory.times,
        nodes=system.mesh.nodes,
        positions=np.stack(positions),
        quaternions=np.stack(quaternions),
    )


def intrinsic_from_frames(
    params: BeamParameters,
    nodes,
    rotations,
    position_derivatives,
    rotation_derivatives,
    velocities: Optional[np.ndarray] = None,
    angular_velocities: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Intrinsic state :math:`y = (v, z)` at the given ``nodes`` corresponding to a
    beam configuration, with

    .. math::

        v = (R^T \\partial_t p, R^T \\omega), \\qquad
        z = C^{-1} (R^T \\partial_x p - e_1, \\text{vec}(R^T \\partial_x R)
            - \\Upsilon_c)

    :param params: parameters of the beam
    :param nodes: positions along the beam, shape ``(n,)``
    :param rotations: rotations at the nodes, shape ``(n, 3, 3)``
    :param position_derivatives: :math:`\\partial_x p`, shape ``(n, 3)``
    :param rotation_derivatives: :math:`\\partial_x R`, shape ``(n, 3, 3)``
    :param velocities: :math:`\\partial_t p`, shape ``(n, 3)``, defaults to zero
    :param angular_velocities: angular velocities in the fixed frame,
        shape ``(n, 3)``, defaults to zero
    :returns: array with shape ``(n, 12)``
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    rotations = _check_rotation(rotations)
    transposed = np.swapaxes(rotations, -1, -2)
    n = len(nodes)

    if velocities is None:
        velocities = np.zeros((n, 3))
    if angular_velocities is None:
        angular_velocities = np.zeros((n, 3))

    linear_velocity = np.einsum("nij,nj->ni", transposed, velocities)
    angular_velocity = np.einsum("nij,nj->ni", transposed, angular_velocities)

    linear_strain = np.einsum("nij,nj->ni", transposed, position_derivatives) - _E1
    angular_strain = unskew(transposed @ np.asarray(rotation_derivatives))

    state = np.zeros((n, 12))
    for i, x in enumerate(nodes):
        strain = np.concatenate(
            [linear_strain[i], angular_strain[i] - params.precurvature_at(x)]
        )
        point = PointState(
            v=np.concatenate([linear_velocity[i], angular_velocity[i]]),
            z=np.linalg.solve(params.flexibility_at(x), strain),
        )
        state[i] = point.as_vector()

    return state

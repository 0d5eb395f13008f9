"""
Initial data for simulations, given as beam configurations (centerline and
cross-section frames) transformed to intrinsic variables.
"""

from typing import Optional

import numpy as np
import scipy.interpolate

from .fem import N_CLAMPED, Mesh
from .model import BeamParameters, check_feedback
from .reconstruct import intrinsic_from_frames
from .status import IGEB_INVALID_PARAMETER, IgebError


PRESETS = ("helix_zero_velocity", "helix_compatible_velocity", "zero")


def helix_frames(nodes):
    """
    Helical configuration without shear

    .. math::

        p^0(x) = \\frac{1}{\\sqrt{2}} (x, 1 - \\cos x, \\sin x)

    with the Frenet frame :math:`R^0` as cross-section orientation. The first
    column of :math:`R^0` is the unit tangent :math:`\\partial_x p^0`.

    :returns: the tuple ``(positions, rotations, position_derivatives,
        rotation_derivatives)`` evaluated at ``nodes``
    """
    x = np.asarray(nodes, dtype=np.float64)
    sin = np.sin(x)
    cos = np.cos(x)
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    sqrt2 = np.sqrt(2.0)

    positions = np.stack([x, 1 - cos, sin], axis=-1) / sqrt2
    position_derivatives = np.stack([one, sin, cos], axis=-1) / sqrt2

    rotations = np.stack(
        [
            np.stack([one, zero, -one], axis=-1),
            np.stack([sin, sqrt2 * cos, sin], axis=-1),
            np.stack([cos, -sqrt2 * sin, cos], axis=-1),
        ],
        axis=-2,
    ) / sqrt2
    rotation_derivatives = np.stack(
        [
            np.stack([zero, zero, zero], axis=-1),
            np.stack([cos, -sqrt2 * sin, cos], axis=-1),
            np.stack([-sin, -sqrt2 * cos, -sin], axis=-1),
        ],
        axis=-2,
    ) / sqrt2

    return positions, rotations, position_derivatives, rotation_derivatives


def straight_frames(nodes):
    """Straight beam along :math:`e_1` with all frames equal to the identity"""
    x = np.asarray(nodes, dtype=np.float64)
    positions = np.zeros((len(x), 3))
    positions[:, 0] = x
    rotations = np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy()
    return positions, rotations


class InitialData:
    """
    Initial state of a simulation, together with the frames used to start the
    reconstruction of the centerline.
    """

    def __init__(self, *, name: str, state, positions, rotations, description=None):
        self.name = name
        self.state = np.asarray(state, dtype=np.float64)
        """reduced state, without the clamped velocities"""
        self.positions = np.asarray(positions, dtype=np.float64)
        """initial centerline positions at the mesh nodes"""
        self.rotations = np.asarray(rotations, dtype=np.float64)
        """initial rotations at the mesh nodes"""
        self.description = {} if description is None else dict(description)

    @property
    def clamped_position(self) -> np.ndarray:
        return self.positions[0]

    @property
    def clamped_rotation(self) -> np.ndarray:
        return self.rotations[0]


def _reduce(nodal) -> np.ndarray:
    return nodal.reshape(-1)[N_CLAMPED:].copy()


def helix_zero_velocity(params: BeamParameters, mesh: Mesh) -> InitialData:
    """Helical beam at rest"""
    nodes = mesh.nodes
    positions, rotations, dp, dR = helix_frames(nodes)
    nodal = intrinsic_from_frames(params, nodes, rotations, dp, dR)
    return InitialData(
        name="helix_zero_velocity",
        state=_reduce(nodal),
        positions=positions,
        rotations=rotations,
    )


def helix_compatible_velocity(
    params: BeamParameters, mesh: Mesh, feedback
) -> InitialData:
    """
    Helical beam with velocities compatible with the boundary conditions: they
    vanish at the clamped end and satisfy :math:`z(\\ell) = -K v(\\ell)` at the
    controlled end. Each component goes from 0 at :math:`x = 0` to
    :math:`-K^{-1} z^0(\\ell)` at :math:`x = \\ell` along a cubic Hermite
    curve with zero slope at both ends.
    """
    K = check_feedback(feedback)
    if np.linalg.matrix_rank(K) < 6:
        raise IgebError(
            "the compatible velocity preset requires an invertible feedback",
            IGEB_INVALID_PARAMETER,
        )

    nodes = mesh.nodes
    positions, rotations, dp, dR = helix_frames(nodes)
    nodal = intrinsic_from_frames(params, nodes, rotations, dp, dR)

    target = -np.linalg.solve(K, nodal[-1, 6:])
    curve = scipy.interpolate.CubicHermiteSpline(
        [0.0, params.length],
        np.stack([np.zeros(6), target]),
        np.zeros((2, 6)),
    )
    nodal[:, :6] = curve(nodes)

    return InitialData(
        name="helix_compatible_velocity",
        state=_reduce(nodal),
        positions=positions,
        rotations=rotations,
        description={
            "velocity_profile": "cubic Hermite, zero slopes at both ends",
            "velocity_at_end": target.tolist(),
        },
    )


def zero(params: BeamParameters, mesh: Mesh) -> InitialData:
    """Straight beam at rest, the trivial solution"""
    positions, rotations = straight_frames(mesh.nodes)
    return InitialData(
        name="zero",
        state=np.zeros(mesh.n_dofs),
        positions=positions,
        rotations=rotations,
    )


def initial_data(
    name: str,
    params: BeamParameters,
    mesh: Mesh,
    feedback: Optional[np.ndarray] = None,
) -> InitialData:
    """Build the initial data called ``name``, one of :py:data:`PRESETS`"""
    if name == "helix_zero_velocity":
        return helix_zero_velocity(params, mesh)
    elif name == "helix_compatible_velocity":
        if feedback is None:
            feedback = np.zeros((6, 6))
        return helix_compatible_velocity(params, mesh, feedback)
    elif name == "zero":
        return zero(params, mesh)

    raise IgebError(
        f"unknown initial data preset '{name}', expected one of {PRESETS}",
        IGEB_INVALID_PARAMETER,
    )

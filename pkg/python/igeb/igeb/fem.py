"""
Finite elements semi-discretization of the IGEB system, using quadratic (P2)
Lagrange elements. The beam is clamped at :math:`x = 0` (zero velocities) and
subject to a velocity feedback :math:`z(\\ell) = -K v(\\ell)` at :math:`x = \\ell`,
``K = 0`` corresponding to a free end.

The semi-discrete system reads

.. math::

    \\mathcal{M} \\dot{\\mathbf{y}} + \\mathcal{K} \\mathbf{y}
        + \\mathcal{Q}(\\mathbf{y}) \\mathbf{y} = 0

where :math:`\\mathbf{y}` contains the 12 components of the state at all nodes but
the first one, stored node after node.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
import scipy.sparse

from . import log
from .model import BeamParameters, G_of, build_E, check_feedback
from .profiling import profiled
from .status import IGEB_INVALID_PARAMETER, IgebError


N_COMPONENTS = 12
N_CLAMPED = 6

ELEMENT_MASS = np.array([[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]]) / 30
ELEMENT_STIFFNESS = (
    np.array([[-3.0, -4.0, 1.0], [4.0, 0.0, -4.0], [-1.0, 4.0, 3.0]]) / 6
)
ELEMENT_NONLINEAR = np.array(
    [
        [[39.0, 20.0, -3.0], [20.0, 16.0, -8.0], [-3.0, -8.0, -3.0]],
        [[20.0, 16.0, -8.0], [16.0, 192.0, 16.0], [-8.0, 16.0, 20.0]],
        [[-3.0, -8.0, -3.0], [-8.0, 16.0, 20.0], [-3.0, 20.0, 39.0]],
    ]
) / 420


def reference_shape(xi: float):
    """
    Values and derivatives of the three quadratic shape functions on the
    reference element :math:`[0, 1]`

    .. math::

        \\tilde{N}_1 = (1 - \\xi)(1 - 2\\xi), \\quad
        \\tilde{N}_2 = 4\\xi(1 - \\xi), \\quad
        \\tilde{N}_3 = \\xi(2\\xi - 1)

    >>> values, derivatives = reference_shape(0.25)
    >>> values.tolist()
    [0.375, 0.75, -0.125]
    """
    xi = float(xi)
    if not 0.0 <= xi <= 1.0:
        raise IgebError(
            f"reference coordinate must be in [0, 1], got {xi}", IGEB_INVALID_PARAMETER
        )

    values = np.array([(1 - xi) * (1 - 2 * xi), 4 * xi * (1 - xi), xi * (2 * xi - 1)])
    derivatives = np.array([4 * xi - 3, 4 - 8 * xi, 4 * xi - 1])
    return values, derivatives


def element_matrices():
    """
    Get the reference element matrices :math:`(\\mathcal{M}^e, \\mathcal{K}^e,
    \\mathcal{P}_1^e, \\mathcal{P}_2^e, \\mathcal{P}_3^e)`, with
    :math:`\\mathcal{M}^e_{ab} = \\int_0^1 \\tilde{N}_a \\tilde{N}_b`,
    :math:`\\mathcal{K}^e_{ab} = \\int_0^1 \\tilde{N}_a' \\tilde{N}_b` and
    :math:`(\\mathcal{P}_c^e)_{ab} = \\int_0^1 \\tilde{N}_c \\tilde{N}_a \\tilde{N}_b`.
    """
    return (
        ELEMENT_MASS.copy(),
        ELEMENT_STIFFNESS.copy(),
        ELEMENT_NONLINEAR[0].copy(),
        ELEMENT_NONLINEAR[1].copy(),
        ELEMENT_NONLINEAR[2].copy(),
    )


class Mesh:
    """Uniform mesh of :math:`[0, \\ell]` with ``n_elements`` quadratic elements"""

    def __init__(self, *, length: float, n_elements: int):
        self.length = float(length)
        self.n_elements = int(n_elements)

        if not self.length > 0:
            raise IgebError(
                f"mesh length must be strictly positive, got {self.length}",
                IGEB_INVALID_PARAMETER,
            )

        if self.n_elements < 1:
            raise IgebError(
                f"mesh needs at least one element, got {self.n_elements}",
                IGEB_INVALID_PARAMETER,
            )

    @property
    def n_nodes(self) -> int:
        return 2 * self.n_elements + 1

    @property
    def element_size(self) -> float:
        return self.length / self.n_elements

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_nodes)

    @property
    def midpoints(self) -> np.ndarray:
        """position of the middle node of each element"""
        return self.nodes[1::2]

    @property
    def n_dofs(self) -> int:
        """number of unknowns after removing the clamped velocities"""
        return N_COMPONENTS * self.n_nodes - N_CLAMPED


def dof_index(component: int, node: int) -> int:
    """
    Position of ``component`` (between 0 and 11) of the state at ``node`` in the
    full vector of unknowns. Both indexes start at 0.
    """
    return N_COMPONENTS * node + component


def reduced_dof_index(component: int, node: int) -> int:
    """Same as :py:func:`dof_index` after removal of the clamped velocities"""
    index = dof_index(component, node) - N_CLAMPED
    if index < 0:
        raise IgebError(
            f"component {component} of node {node} is fixed by the clamped end",
            IGEB_INVALID_PARAMETER,
        )
    return index


def _flux_matrix() -> np.ndarray:
    flux = np.zeros((12, 12))
    flux[:6, 6:] = -np.eye(6)
    flux[6:, :6] = -np.eye(6)
    return flux


def _coupling_matrix(precurvature) -> np.ndarray:
    E = build_E(precurvature)
    coupling = np.zeros((12, 12))
    coupling[:6, 6:] = -E
    coupling[6:, :6] = E.T
    return coupling


def _in_chunks(function, n_elements: int, n_threads: int) -> np.ndarray:
    """
    Evaluate ``function`` on chunks of element indexes, concatenating the results
    in element order.
    """
    elements = np.arange(n_elements)
    if n_threads <= 1 or n_elements < 2:
        return function(elements)

    chunks = np.array_split(elements, min(n_threads, n_elements))
    with ThreadPoolExecutor(max_workers=len(chunks)) as executor:
        results = list(executor.map(function, chunks))

    return np.concatenate(results, axis=0)


def _element_dofs(mesh: Mesh) -> np.ndarray:
    offsets = 2 * N_COMPONENTS * np.arange(mesh.n_elements)
    return offsets[:, None] + np.arange(3 * N_COMPONENTS)[None, :]


def _scatter(blocks: np.ndarray, mesh: Mesh) -> scipy.sparse.csr_matrix:
    """Sum the ``(n_elements, 36, 36)`` element ``blocks`` in a global matrix"""
    dofs = _element_dofs(mesh)
    rows = np.broadcast_to(dofs[:, :, None], blocks.shape)
    cols = np.broadcast_to(dofs[:, None, :], blocks.shape)
    size = N_COMPONENTS * mesh.n_nodes
    matrix = scipy.sparse.coo_matrix(
        (blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(size, size)
    )
    return matrix.tocsr()


def _reduce(matrix):
    return matrix[N_CLAMPED:, N_CLAMPED:]


@profiled
def assemble_mass(
    mesh: Mesh, energy_field: Callable[[float], np.ndarray], *, n_threads: int = 1
) -> scipy.sparse.csr_matrix:
    """
    Assemble the (full, not reduced) mass matrix weighted by a 12x12 matrix field,
    frozen at the middle of each element.

    :param mesh: mesh of the beam
    :param energy_field: function returning the weight matrix at a position, for
        example :py:meth:`BeamParameters.energy_matrix`
    :param n_threads: number of threads used for the assembly
    """
    h = mesh.element_size
    midpoints = mesh.midpoints

    def blocks(elements):
        weights = np.stack([energy_field(midpoints[e]) for e in elements])
        return h * np.einsum("ab,eij->eaibj", ELEMENT_MASS, weights).reshape(
            len(elements), 36, 36
        )

    return _scatter(_in_chunks(blocks, mesh.n_elements, n_threads), mesh)


class AssembledSystem:
    """
    Semi-discrete IGEB system for a given beam, mesh and boundary feedback. The
    full matrices (with the clamped components) are kept in the ``*_full``
    attributes, and the reduced ones are available as properties.
    """

    def __init__(
        self,
        *,
        params: BeamParameters,
        mesh: Mesh,
        feedback: np.ndarray,
        mass_full,
        k1_full,
        k2_full,
        k3_full,
        nonlinear: np.ndarray,
    ):
        self.params = params
        self.mesh = mesh
        self.feedback = feedback

        self.mass_full = mass_full
        self.k1_full = k1_full
        self.k2_full = k2_full
        self.k3_full = k3_full

        self.nonlinear = nonlinear
        """
        Nonlinear generators with shape ``(n_elements, 12, 12, 12)``, such that
        ``nonlinear[e, p]`` is :math:`\\mathbf{G}(x_e, e_p) = -\\mathcal{G}(e_p)
        Q^P(x_e)` at the middle of element ``e``.
        """

        self.mass = _reduce(mass_full).tocsr()
        """reduced mass matrix :math:`\\mathcal{M}`"""
        self.stiffness = _reduce(k1_full + k2_full + k3_full).tocsr()
        """reduced stiffness matrix :math:`\\mathcal{K}`"""

        self._dofs = _element_dofs(mesh)

    @property
    def nonlinear_dagger(self) -> np.ndarray:
        """
        Generators of the adjoint map, ``nonlinear_dagger[e, j][i, p]`` is
        ``nonlinear[e, p][i, j]`` so that :math:`\\mathbf{G}(y) \\bar{y} =
        \\mathbf{G}^\\dagger(\\bar{y}) y`.
        """
        return np.transpose(self.nonlinear, (0, 3, 2, 1))

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_dofs

    def full_state(self, y) -> np.ndarray:
        """
        Get the nodal values of the reduced state ``y``, as an array of shape
        ``(..., n_nodes, 12)``, with zero velocities at the clamped node.
        """
        y = np.asarray(y, dtype=np.float64)
        if y.shape[-1] != self.n_dofs:
            raise IgebError(
                f"expected a state with {self.n_dofs} components, got {y.shape[-1]}",
                IGEB_INVALID_PARAMETER,
            )
        full = np.zeros(y.shape[:-1] + (N_COMPONENTS * self.mesh.n_nodes,))
        full[..., N_CLAMPED:] = y
        return full.reshape(y.shape[:-1] + (self.mesh.n_nodes, N_COMPONENTS))

    def reduced_state(self, nodal) -> np.ndarray:
        """Inverse of :py:meth:`full_state`, dropping the clamped velocities"""
        nodal = np.asarray(nodal, dtype=np.float64)
        flat = nodal.reshape(nodal.shape[:-2] + (-1,))
        return flat[..., N_CLAMPED:].copy()

    def _nonlinear_blocks(self, y, generators) -> np.ndarray:
        nodal = self.full_state(y)
        per_element = np.stack([nodal[0:-1:2], nodal[1::2], nodal[2::2]], axis=1)
        # value of the generator at each of the three nodes of each element
        at_nodes = np.einsum("ecp,epij->ecij", per_element, generators)
        blocks = self.mesh.element_size * np.einsum(
            "cab,ecij->eaibj", ELEMENT_NONLINEAR, at_nodes
        )
        return blocks.reshape(self.mesh.n_elements, 36, 36)

    def eval_Q(self, y) -> scipy.sparse.csr_matrix:
        """Reduced nonlinear matrix :math:`\\mathcal{Q}(\\mathbf{y})`"""
        blocks = self._nonlinear_blocks(y, self.nonlinear)
        return _reduce(_scatter(blocks, self.mesh)).tocsr()

    def eval_Qdagger(self, y) -> scipy.sparse.csr_matrix:
        """
        Reduced adjoint nonlinear matrix :math:`\\mathcal{Q}^\\dagger(\\mathbf{y})`,
        such that :math:`\\mathcal{Q}(\\mathbf{y}) \\bar{\\mathbf{y}} =
        \\mathcal{Q}^\\dagger(\\bar{\\mathbf{y}}) \\mathbf{y}`.
        """
        blocks = self._nonlinear_blocks(y, self.nonlinear_dagger)
        return _reduce(_scatter(blocks, self.mesh)).tocsr()


@profiled
def assemble(
    params: BeamParameters,
    mesh: Mesh,
    feedback: Optional[np.ndarray] = None,
    *,
    n_threads: int = 1,
) -> AssembledSystem:
    """
    Assemble the semi-discrete system, with coefficients frozen at the middle of
    each element.

    :param params: parameters of the beam
    :param mesh: mesh of the beam, with the same length as ``params``
    :param feedback: symmetric positive semi-definite feedback matrix at the
        controlled end, ``None`` or zero for a free end
    :param n_threads: number of threads used for the assembly
    """
    if abs(mesh.length - params.length) > 1e-12 * params.length:
        raise IgebError(
            f"mesh length ({mesh.length}) does not match the beam length "
            f"({params.length})",
            IGEB_INVALID_PARAMETER,
        )

    if feedback is None:
        feedback = np.zeros((6, 6))
    feedback = check_feedback(feedback)

    h = mesh.element_size
    midpoints = mesh.midpoints
    flux = _flux_matrix()

    mass_full = assemble_mass(mesh, params.energy_matrix, n_threads=n_threads)

    k1_block = -np.kron(ELEMENT_STIFFNESS, flux)
    k1_blocks = np.broadcast_to(k1_block, (mesh.n_elements, 36, 36))
    k1_full = _scatter(np.ascontiguousarray(k1_blocks), mesh)

    def coupling_blocks(elements):
        return np.stack(
            [
                h
                * np.kron(
                    ELEMENT_MASS,
                    _coupling_matrix(params.precurvature_at(midpoints[e])),
                )
                for e in elements
            ]
        )

    k2_full = _scatter(_in_chunks(coupling_blocks, mesh.n_elements, n_threads), mesh)

    size = N_COMPONENTS * mesh.n_nodes
    last = mesh.n_nodes - 1
    k3_full = scipy.sparse.lil_matrix((size, size))
    for i in range(6):
        for j in range(6):
            if feedback[i, j] != 0.0:
                k3_full[dof_index(i, last), dof_index(j, last)] = feedback[i, j]
        k3_full[dof_index(i + 6, last), dof_index(i, last)] = -1.0
    k3_full = k3_full.tocsr()

    def generator_blocks(elements):
        basis = np.eye(N_COMPONENTS)
        return np.stack(
            [
                -G_of(basis) @ params.energy_matrix(midpoints[e])
                for e in elements
            ]
        )

    nonlinear = _in_chunks(generator_blocks, mesh.n_elements, n_threads)

    log.debug(
        "fem",
        f"assembled system with {mesh.n_elements} elements and "
        f"{mesh.n_dofs} unknowns",
    )

    return AssembledSystem(
        params=params,
        mesh=mesh,
        feedback=feedback,
        mass_full=mass_full,
        k1_full=k1_full,
        k2_full=k2_full,
        k3_full=k3_full,
        nonlinear=nonlinear,
    )

"""
Coefficients of the intrinsic geometrically exact beam (IGEB) system

.. math::

    \\partial_t y + A(x) \\partial_x y + \\bar{B}(x) y = \\bar{g}(x, y)

where the state :math:`y = (v, z)` gathers the linear and angular velocities
:math:`v` and the internal forces and moments :math:`z`, all expressed in the
body-attached frame.
"""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .status import IGEB_INVALID_PARAMETER, IGEB_UNSUPPORTED, IgebError


SYMMETRY_TOLERANCE = 1e-12
DIAGONAL_TOLERANCE = 1e-14

_E1 = np.array([1.0, 0.0, 0.0])


def skew(u) -> np.ndarray:
    """
    Skew-symmetric matrix :math:`\\hat{u}` such that :math:`\\hat{u} x = u \\times x`.
    ``u`` can have any leading shape, the last dimension must be 3.
    """
    u = np.asarray(u, dtype=np.float64)
    result = np.zeros(u.shape[:-1] + (3, 3))
    result[..., 0, 1] = -u[..., 2]
    result[..., 0, 2] = u[..., 1]
    result[..., 1, 0] = u[..., 2]
    result[..., 1, 2] = -u[..., 0]
    result[..., 2, 0] = -u[..., 1]
    result[..., 2, 1] = u[..., 0]
    return result


def unskew(matrix) -> np.ndarray:
    """Inverse of :py:func:`skew`, using the skew-symmetric part of ``matrix``."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return 0.5 * np.stack(
        [
            matrix[..., 2, 1] - matrix[..., 1, 2],
            matrix[..., 0, 2] - matrix[..., 2, 0],
            matrix[..., 1, 0] - matrix[..., 0, 1],
        ],
        axis=-1,
    )


def sym_power(matrix, power: float) -> np.ndarray:
    """Power of a symmetric positive definite ``matrix``, from its eigendecomposition"""
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    result = (eigenvectors * eigenvalues**power) @ eigenvectors.T
    return 0.5 * (result + result.T)


def is_diagonal(matrix, tolerance=DIAGONAL_TOLERANCE) -> bool:
    matrix = np.asarray(matrix)
    scale = max(np.max(np.abs(matrix)), 1e-300)
    off_diagonal = matrix - np.diag(np.diag(matrix))
    return bool(np.max(np.abs(off_diagonal)) <= tolerance * scale)


def check_spd(matrix, name: str) -> np.ndarray:
    """
    Check that ``matrix`` is a symmetric positive definite 6x6 matrix, and return
    it symmetrized. A :py:class:`IgebError` is raised otherwise.
    """
    matrix = np.array(matrix, dtype=np.float64)
    if matrix.shape != (6, 6):
        raise IgebError(
            f"`{name}` must be a 6x6 matrix, got shape {matrix.shape}",
            IGEB_INVALID_PARAMETER,
        )

    if not np.all(np.isfinite(matrix)):
        raise IgebError(f"`{name}` contains non finite values", IGEB_INVALID_PARAMETER)

    scale = max(1.0, np.max(np.abs(matrix)))
    if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE * scale:
        raise IgebError(f"`{name}` must be symmetric", IGEB_INVALID_PARAMETER)

    matrix = 0.5 * (matrix + matrix.T)
    smallest = scipy.linalg.eigvalsh(matrix)[0]
    if not smallest > 0:
        raise IgebError(
            f"`{name}` must be positive definite, smallest eigenvalue "
            f"is {smallest:.6e}",
            IGEB_INVALID_PARAMETER,
        )

    return matrix


def check_feedback(matrix, name: str = "feedback") -> np.ndarray:
    """
    Check that ``matrix`` is a symmetric positive semi-definite 6x6 matrix (zero is
    allowed and corresponds to a free end).
    """
    matrix = np.array(matrix, dtype=np.float64)
    if matrix.shape != (6, 6):
        raise IgebError(
            f"`{name}` must be a 6x6 matrix, got shape {matrix.shape}",
            IGEB_INVALID_PARAMETER,
        )

    scale = max(1.0, np.max(np.abs(matrix)))
    if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE * scale:
        raise IgebError(f"`{name}` must be symmetric", IGEB_INVALID_PARAMETER)

    matrix = 0.5 * (matrix + matrix.T)
    smallest = scipy.linalg.eigvalsh(matrix)[0]
    if smallest < -SYMMETRY_TOLERANCE * scale:
        raise IgebError(
            f"`{name}` must be positive semi-definite, smallest eigenvalue "
            f"is {smallest:.6e}",
            IGEB_INVALID_PARAMETER,
        )

    return matrix


class IsotropicSection:
    """
    Cross-section of a prismatic beam made of an isotropic material, with
    principal axis aligned with the body-attached frame.
    """

    def __init__(
        self,
        *,
        density: float,
        area: float,
        young_modulus: float,
        shear_modulus: float,
        inertia_2: float,
        inertia_3: float,
        shear_factors: Tuple[float, float, float] = (1.0, 1.0, 1.0),
    ):
        """
        :param density: mass density :math:`\\rho` (kg/m³)
        :param area: area :math:`a` of the cross section (m²)
        :param young_modulus: Young modulus :math:`E` (Pa)
        :param shear_modulus: shear modulus :math:`G` (Pa)
        :param inertia_2: second moment of area :math:`I_2` (m⁴)
        :param inertia_3: second moment of area :math:`I_3` (m⁴)
        :param shear_factors: shear correction factors :math:`(k_1, k_2, k_3)`
        """
        self.density = float(density)
        self.area = float(area)
        self.young_modulus = float(young_modulus)
        self.shear_modulus = float(shear_modulus)
        self.inertia_2 = float(inertia_2)
        self.inertia_3 = float(inertia_3)
        self.shear_factors = tuple(float(k) for k in shear_factors)

        if len(self.shear_factors) != 3:
            raise IgebError(
                "`shear_factors` must contain 3 values", IGEB_INVALID_PARAMETER
            )

        values = {
            "density": self.density,
            "area": self.area,
            "young_modulus": self.young_modulus,
            "shear_modulus": self.shear_modulus,
            "inertia_2": self.inertia_2,
            "inertia_3": self.inertia_3,
            "shear_factors[0]": self.shear_factors[0],
            "shear_factors[1]": self.shear_factors[1],
            "shear_factors[2]": self.shear_factors[2],
        }
        for name, value in values.items():
            if not value > 0:
                raise IgebError(
                    f"`{name}` must be strictly positive, got {value}",
                    IGEB_INVALID_PARAMETER,
                )

    def get_hypers(self):
        return {
            "density": self.density,
            "area": self.area,
            "young_modulus": self.young_modulus,
            "shear_modulus": self.shear_modulus,
            "inertia_2": self.inertia_2,
            "inertia_3": self.inertia_3,
            "shear_factors": list(self.shear_factors),
        }


def isotropic_mass_flex(section: IsotropicSection) -> Tuple[np.ndarray, np.ndarray]:
    r"""
    Mass and flexibility matrices of a prismatic isotropic beam

    .. math::

        M = \rho \, \text{diag}(a I_3, J), \qquad
        C = \text{diag}(S_1, S_2)^{-1}

    with :math:`J = \text{diag}((I_2 + I_3) k_1, I_2, I_3)`,
    :math:`S_1 = a\,\text{diag}(E, k_2 G, k_3 G)` and
    :math:`S_2 = J \, \text{diag}(G, E, E)`.
    """
    k1, k2, k3 = section.shear_factors
    J = np.array(
        [
            (section.inertia_2 + section.inertia_3) * k1,
            section.inertia_2,
            section.inertia_3,
        ]
    )
    S1 = section.area * np.array(
        [section.young_modulus, k2 * section.shear_modulus, k3 * section.shear_modulus]
    )
    S2 = J * np.array(
        [section.shear_modulus, section.young_modulus, section.young_modulus]
    )

    mass = section.density * np.diag(np.concatenate([np.full(3, section.area), J]))
    flexibility = np.diag(1.0 / np.concatenate([S1, S2]))
    return mass, flexibility


class BeamParameters:
    """
    Physical description of a single beam: length, mass matrix :math:`M`,
    flexibility matrix :math:`C` and pre-curvature :math:`\\Upsilon_c`.

    The coefficients are constant along the beam, but all evaluation functions
    take the position ``x`` to keep the interface of coefficient fields.
    """

    def __init__(
        self,
        *,
        length: float,
        mass,
        flexibility,
        precurvature: Optional[np.ndarray] = None,
    ):
        """
        :param length: length :math:`\\ell` of the beam (m)
        :param mass: 6x6 symmetric positive definite mass matrix
        :param flexibility: 6x6 symmetric positive definite flexibility matrix
        :param precurvature: curvature and twist before deformation, defaults to
            zero (straight and untwisted beam)
        """
        self.length = float(length)
        if not self.length > 0:
            raise IgebError(
                f"`length` must be strictly positive, got {self.length}",
                IGEB_INVALID_PARAMETER,
            )

        self.mass = check_spd(mass, "mass")
        self.flexibility = check_spd(flexibility, "flexibility")

        if precurvature is None:
            precurvature = np.zeros(3)
        self.precurvature = np.array(precurvature, dtype=np.float64)
        if self.precurvature.shape != (3,):
            raise IgebError(
                "`precurvature` must be a 3-vector, "
                f"got shape {self.precurvature.shape}",
                IGEB_INVALID_PARAMETER,
            )

    @staticmethod
    def from_section(
        section: IsotropicSection, *, length: float, precurvature=None
    ) -> "BeamParameters":
        """Create parameters for a prismatic isotropic beam"""
        mass, flexibility = isotropic_mass_flex(section)
        return BeamParameters(
            length=length,
            mass=mass,
            flexibility=flexibility,
            precurvature=precurvature,
        )

    @staticmethod
    def hesse2012() -> "BeamParameters":
        """
        Reference beam used for the numerical experiments:
        :math:`M = \\text{diag}(1, 1, 1, 20, 10, 10)`,
        :math:`C = \\text{diag}(10^4, 10^4, 10^4, 500, 500, 500)^{-1}` and
        :math:`\\ell = 1`.
        """
        return BeamParameters(
            length=1.0,
            mass=np.diag([1.0, 1.0, 1.0, 20.0, 10.0, 10.0]),
            flexibility=np.diag(1.0 / np.array([1e4, 1e4, 1e4, 500, 500, 500])),
        )

    @property
    def is_diagonal(self) -> bool:
        """Are both the mass and flexibility matrices diagonal?"""
        return is_diagonal(self.mass) and is_diagonal(self.flexibility)

    def mass_at(self, x: float = 0.0) -> np.ndarray:
        return self.mass

    def flexibility_at(self, x: float = 0.0) -> np.ndarray:
        return self.flexibility

    def precurvature_at(self, x: float = 0.0) -> np.ndarray:
        return self.precurvature

    def energy_matrix(self, x: float = 0.0) -> np.ndarray:
        """:math:`Q^P(x) = \\text{diag}(M(x), C(x))`"""
        return scipy.linalg.block_diag(self.mass_at(x), self.flexibility_at(x))

    def get_hypers(self):
        return {
            "length": self.length,
            "mass": self.mass.tolist(),
            "flexibility": self.flexibility.tolist(),
            "precurvature": self.precurvature.tolist(),
        }


class PointState:
    """Value of the state :math:`y = (v, z)` at a single point of the beam"""

    def __init__(self, v, z):
        self.v = np.array(v, dtype=np.float64)
        self.z = np.array(z, dtype=np.float64)
        if self.v.shape != (6,) or self.z.shape != (6,):
            raise IgebError(
                "both `v` and `z` must be 6-vectors", IGEB_INVALID_PARAMETER
            )

    @staticmethod
    def from_vector(y) -> "PointState":
        y = np.asarray(y, dtype=np.float64)
        return PointState(y[:6], y[6:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.z])

    def strains(self, params: BeamParameters, x: float = 0.0) -> np.ndarray:
        """Strains :math:`s = C z`"""
        return params.flexibility_at(x) @ self.z


def build_E(precurvature) -> np.ndarray:
    """
    Matrix containing the curvature and twist at rest,
    :math:`E = \\begin{bmatrix} \\hat{\\Upsilon}_c & 0 \\\\
    \\hat{e}_1 & \\hat{\\Upsilon}_c \\end{bmatrix}`.
    """
    upsilon = skew(precurvature)
    E = np.zeros((6, 6))
    E[:3, :3] = upsilon
    E[3:, 3:] = upsilon
    E[3:, :3] = skew(_E1)
    return E


def _exchange_matrix() -> np.ndarray:
    J = np.zeros((12, 12))
    J[:6, 6:] = np.eye(6)
    J[6:, :6] = np.eye(6)
    return J


def build_A_Bbar(params: BeamParameters, x: float = 0.0):
    """
    Coefficients :math:`A = -(Q^P)^{-1} \\begin{bmatrix} 0 & I \\\\ I & 0
    \\end{bmatrix}` and :math:`\\bar{B} = (Q^P)^{-1} \\begin{bmatrix} 0 & -E \\\\
    E^T & 0 \\end{bmatrix}` of the IGEB system.
    """
    energy = params.energy_matrix(x)
    E = build_E(params.precurvature_at(x))

    coupling = np.zeros((12, 12))
    coupling[:6, 6:] = -E
    coupling[6:, :6] = E.T

    A = -scipy.linalg.solve(energy, _exchange_matrix(), assume_a="pos")
    B = scipy.linalg.solve(energy, coupling, assume_a="pos")
    return A, B


def G_of(u) -> np.ndarray:
    """
    Matrix :math:`\\mathcal{G}(u)` defining the quadratic nonlinearity. It is linear
    in ``u``, and ``u`` can have any leading shape (the last dimension must be 12).
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != 12:
        raise IgebError(
            f"expected a 12-vector, got shape {u.shape}", IGEB_INVALID_PARAMETER
        )

    u1, u2, u3, u4 = (skew(u[..., 3 * i : 3 * (i + 1)]) for i in range(4))

    G = np.zeros(u.shape[:-1] + (12, 12))
    G[..., 0:3, 0:3] = u2
    G[..., 3:6, 0:3] = u1
    G[..., 3:6, 3:6] = u2
    G[..., 0:3, 9:12] = u3
    G[..., 3:6, 6:9] = u3
    G[..., 3:6, 9:12] = u4
    G[..., 6:9, 6:9] = u2
    G[..., 6:9, 9:12] = u1
    G[..., 9:12, 9:12] = u2
    return -G


def gbar(params: BeamParameters, u, x: float = 0.0) -> np.ndarray:
    """Source term :math:`\\bar{g}(x, u) = Q^P(x)^{-1} \\mathcal{G}(u) Q^P(x) u`"""
    u = np.asarray(u, dtype=np.float64)
    energy = params.energy_matrix(x)
    return scipy.linalg.solve(energy, G_of(u) @ (energy @ u), assume_a="pos")


class Diagonalization:
    """
    Diagonal form of the principal part of the IGEB system, such that
    :math:`L A L^{-1} = \\text{diag}(-D, D)`.
    """

    def __init__(self, *, D, U, L, L_inv):
        self.D = D
        """positive diagonal 6x6 matrix of characteristic speeds"""
        self.U = U
        """orthogonal matrix with :math:`\\Theta = U^T D^2 U`"""
        self.L = L
        """12x12 change of variable to Riemann invariants"""
        self.L_inv = L_inv
        """inverse of :py:attr:`L`"""

    @property
    def speeds(self) -> np.ndarray:
        """characteristic speeds, diagonal of :py:attr:`D`"""
        return np.diag(self.D).copy()

    @property
    def eigenvalues(self) -> np.ndarray:
        """eigenvalues of :math:`A`, negative ones first"""
        return np.concatenate([-self.speeds, self.speeds])


def diagonalize(params: BeamParameters, x: float = 0.0) -> Diagonalization:
    """
    Diagonalize :math:`A(x)`, using the eigendecomposition
    :math:`\\Theta = (C^{1/2} M C^{1/2})^{-1} = U^T D^2 U`.

    When :math:`\\Theta` is diagonal (for example when :math:`M` and :math:`C` are
    diagonal), :math:`U` is the identity and the speeds keep the order of the
    components. Otherwise the eigenvalues are sorted in ascending order and each
    eigenvector has its largest-magnitude component positive.
    """
    mass = params.mass_at(x)
    flexibility = params.flexibility_at(x)

    c_half = sym_power(flexibility, 0.5)
    c_mhalf = sym_power(flexibility, -0.5)
    theta = sym_power(c_half @ mass @ c_half, -1.0)

    if is_diagonal(theta, 1e-13):
        U = np.eye(6)
        squared_speeds = np.diag(theta).copy()
    else:
        squared_speeds, eigenvectors = scipy.linalg.eigh(theta)
        for i in range(6):
            largest = np.argmax(np.abs(eigenvectors[:, i]))
            if eigenvectors[largest, i] < 0:
                eigenvectors[:, i] *= -1
        U = eigenvectors.T

    speeds = np.sqrt(squared_speeds)
    D = np.diag(speeds)
    D_inv = np.diag(1.0 / speeds)

    L = np.block(
        [
            [U @ c_mhalf, D @ U @ c_half],
            [U @ c_mhalf, -D @ U @ c_half],
        ]
    )
    L_inv = 0.5 * np.block(
        [
            [c_half @ U.T, c_half @ U.T],
            [c_mhalf @ U.T @ D_inv, -c_mhalf @ U.T @ D_inv],
        ]
    )
    return Diagonalization(D=D, U=U, L=L, L_inv=L_inv)


def transparent_K(params: BeamParameters, x: float = 0.0) -> np.ndarray:
    """
    Feedback matrix :math:`K = C^{-1/2} (C^{1/2} M C^{1/2})^{1/2} C^{-1/2}` for which
    the boundary does not reflect any outgoing information.
    """
    flexibility = params.flexibility_at(x)
    c_half = sym_power(flexibility, 0.5)
    c_mhalf = sym_power(flexibility, -0.5)
    K = c_mhalf @ sym_power(c_half @ params.mass_at(x) @ c_half, 0.5) @ c_mhalf
    return 0.5 * (K + K.T)


def near_transparent_mu(params: BeamParameters, x: float = 0.0) -> Tuple[float, float]:
    """
    Coefficients :math:`(\\mu_1, \\mu_2)` of the feedback
    :math:`K = \\text{diag}(\\mu_1 I_3, \\mu_2 I_3)` closest to the transparent one,
    defined from the diagonal :math:`b` of :math:`M^{1/2} C^{-1/2}` as
    :math:`\\mu_1 = \\sqrt{\\min_{i \\leq 3} b_i \\max_{j \\leq 3} b_j}` and similarly
    for :math:`\\mu_2` over the last three components.
    """
    mass = params.mass_at(x)
    flexibility = params.flexibility_at(x)
    if not (is_diagonal(mass) and is_diagonal(flexibility)):
        raise IgebError(
            "near transparent feedback requires diagonal mass and flexibility "
            "matrices",
            IGEB_UNSUPPORTED,
        )

    b = np.sqrt(np.diag(mass) / np.diag(flexibility))
    mu_1 = np.sqrt(np.min(b[:3]) * np.max(b[:3]))
    mu_2 = np.sqrt(np.min(b[3:]) * np.max(b[3:]))
    return float(mu_1), float(mu_2)


def near_transparent_K(params: BeamParameters, x: float = 0.0) -> np.ndarray:
    """Feedback matrix :math:`\\text{diag}(\\mu_1 I_3, \\mu_2 I_3)`"""
    mu_1, mu_2 = near_transparent_mu(params, x)
    return np.diag([mu_1] * 3 + [mu_2] * 3)


def to_riemann(y, diagonalization: Diagonalization) -> np.ndarray:
    """Riemann invariants :math:`r = L y`; ``y`` can have leading dimensions"""
    return np.asarray(y, dtype=np.float64) @ diagonalization.L.T


def from_riemann(r, diagonalization: Diagonalization) -> np.ndarray:
    """Physical state :math:`y = L^{-1} r`; ``r`` can have leading dimensions"""
    return np.asarray(r, dtype=np.float64) @ diagonalization.L_inv.T

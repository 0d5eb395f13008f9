import numpy as np
import pytest

from igeb import IgebError
from igeb.model import (
    BeamParameters,
    G_of,
    IsotropicSection,
    PointState,
    build_A_Bbar,
    diagonalize,
    from_riemann,
    gbar,
    near_transparent_K,
    near_transparent_mu,
    skew,
    to_riemann,
    transparent_K,
    unskew,
)


def random_spd(rng, size=6):
    matrix = rng.normal(size=(size, size))
    return matrix @ matrix.T + size * np.eye(size)


def random_beam(rng):
    return BeamParameters(
        length=1.0 + rng.random(),
        mass=random_spd(rng),
        flexibility=random_spd(rng),
        precurvature=rng.normal(size=3),
    )


def test_skew():
    u = np.array([1.0, 2.0, 3.0])
    x = np.array([-0.5, 0.25, 4.0])
    np.testing.assert_allclose(skew(u) @ x, np.cross(u, x))
    np.testing.assert_allclose(unskew(skew(u)), u)

    # leading dimensions
    u = np.arange(12, dtype=np.float64).reshape(4, 3)
    assert skew(u).shape == (4, 3, 3)
    np.testing.assert_allclose(unskew(skew(u)), u)


def test_nonlinearity_identities():
    rng = np.random.default_rng(0x1234)
    for _ in range(1000):
        a = rng.normal(size=12)
        b = rng.normal(size=12)

        polarized = a @ G_of(b) + b @ G_of(a)
        scale = np.linalg.norm(a) * np.linalg.norm(b)
        assert np.max(np.abs(polarized)) <= 1e-12 * scale

        assert abs(a @ G_of(a) @ a) <= 1e-12 * np.linalg.norm(a) ** 3


def test_G_is_linear():
    rng = np.random.default_rng(7)
    a = rng.normal(size=12)
    b = rng.normal(size=12)
    np.testing.assert_allclose(G_of(2 * a - b), 2 * G_of(a) - G_of(b), atol=1e-14)

    batched = G_of(np.stack([a, b]))
    np.testing.assert_allclose(batched[0], G_of(a))
    np.testing.assert_allclose(batched[1], G_of(b))


def test_source_conserves_energy():
    rng = np.random.default_rng(42)
    params = random_beam(rng)
    for _ in range(20):
        u = rng.normal(size=12)
        energy_rate = u @ params.energy_matrix() @ gbar(params, u)
        assert abs(energy_rate) <= 1e-10 * np.linalg.norm(u) ** 3 * np.linalg.norm(
            params.energy_matrix(), 2
        )


def test_coupling_is_skew():
    rng = np.random.default_rng(3)
    for _ in range(100):
        params = random_beam(rng)
        _, B = build_A_Bbar(params)
        QB = params.energy_matrix() @ B
        assert np.max(np.abs(QB + QB.T)) <= 1e-12 * np.max(np.abs(QB))


def test_diagonalization():
    rng = np.random.default_rng(0xBEA)
    for _ in range(100):
        params = random_beam(rng)
        A, _ = build_A_Bbar(params)
        diagonalization = diagonalize(params)

        diagonal = diagonalization.L @ A @ diagonalization.L_inv
        expected = np.diag(diagonalization.eigenvalues)
        assert np.max(np.abs(diagonal - expected)) <= 1e-10 * np.max(
            np.abs(expected)
        )

        np.testing.assert_allclose(
            diagonalization.L @ diagonalization.L_inv, np.eye(12), atol=1e-10
        )
        assert np.all(diagonalization.speeds > 0)


def test_hesse_speeds():
    params = BeamParameters.hesse2012()
    diagonalization = diagonalize(params)

    expected = [100, 100, 100, 5, np.sqrt(50), np.sqrt(50)]
    np.testing.assert_allclose(diagonalization.speeds, expected, rtol=1e-10)
    np.testing.assert_allclose(diagonalization.U, np.eye(6))

    # compare with a dense eigensolver
    A, _ = build_A_Bbar(params)
    eigenvalues = np.sort(np.linalg.eigvals(A).real)
    np.testing.assert_allclose(
        eigenvalues, np.sort(diagonalization.eigenvalues), rtol=1e-10
    )


def test_identity_beam_speeds():
    params = BeamParameters(length=1.0, mass=np.eye(6), flexibility=np.eye(6))
    np.testing.assert_allclose(diagonalize(params).speeds, np.ones(6))


def test_riemann_invariants():
    rng = np.random.default_rng(11)
    params = random_beam(rng)
    diagonalization = diagonalize(params)

    y = rng.normal(size=(5, 12))
    r = to_riemann(y, diagonalization)
    np.testing.assert_allclose(from_riemann(r, diagonalization), y, atol=1e-12)


def test_transparent_feedback():
    params = BeamParameters.hesse2012()
    mu_1, mu_2 = near_transparent_mu(params)
    assert mu_1 == pytest.approx(100.0, rel=1e-12)
    assert mu_2 == pytest.approx(84.0896415, rel=1e-8)

    np.testing.assert_allclose(
        near_transparent_K(params), np.diag([mu_1] * 3 + [mu_2] * 3)
    )

    expected = np.sqrt(np.diag(params.mass) / np.diag(params.flexibility))
    np.testing.assert_allclose(transparent_K(params), np.diag(expected), rtol=1e-12)


def test_isotropic_section():
    section = IsotropicSection(
        density=7800.0,
        area=1e-3,
        young_modulus=2e11,
        shear_modulus=8e10,
        inertia_2=1e-7,
        inertia_3=2e-7,
    )
    params = BeamParameters.from_section(section, length=2.0)
    assert params.is_diagonal
    assert params.length == 2.0

    mass = np.diag(params.mass)
    np.testing.assert_allclose(mass[:3], 7800.0 * 1e-3)

    flexibility = np.diag(params.flexibility)
    np.testing.assert_allclose(1.0 / flexibility[0], 2e11 * 1e-3)


def test_point_state():
    rng = np.random.default_rng(11)
    params = random_beam(rng)
    y = rng.normal(size=12)

    point = PointState.from_vector(y)
    np.testing.assert_equal(point.v, y[:6])
    np.testing.assert_equal(point.z, y[6:])
    np.testing.assert_equal(point.as_vector(), y)

    strains = point.strains(params, 0.5)
    np.testing.assert_allclose(strains, params.flexibility @ y[6:])

    with pytest.raises(IgebError, match="both `v` and `z` must be 6-vectors"):
        PointState(np.zeros(6), np.zeros(3))

    with pytest.raises(IgebError, match="both `v` and `z` must be 6-vectors"):
        PointState.from_vector(np.zeros(10))


def test_errors():
    message = "`length` must be strictly positive, got -1.0"
    with pytest.raises(IgebError, match=message):
        BeamParameters(length=-1.0, mass=np.eye(6), flexibility=np.eye(6))

    with pytest.raises(IgebError, match="`mass` must be symmetric"):
        mass = np.eye(6)
        mass[0, 1] = 0.5
        BeamParameters(length=1.0, mass=mass, flexibility=np.eye(6))

    with pytest.raises(IgebError, match="`flexibility` must be positive definite"):
        BeamParameters(length=1.0, mass=np.eye(6), flexibility=-np.eye(6))

    with pytest.raises(IgebError, match="`mass` must be a 6x6 matrix"):
        BeamParameters(length=1.0, mass=np.eye(3), flexibility=np.eye(6))

    rng = np.random.default_rng(5)
    with pytest.raises(IgebError, match="diagonal mass and flexibility"):
        near_transparent_mu(random_beam(rng))

    with pytest.raises(IgebError, match="expected a 12-vector"):
        G_of(np.zeros(6))

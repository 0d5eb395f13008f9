import numpy as np
import pytest
import scipy.spatial.transform

from igeb import IgebError, set_logging_callback
from igeb.config import default_network_weights
from igeb.log import default_logging_callback
from igeb.lyapunov import certificate
from igeb.model import BeamParameters, near_transparent_K, transparent_K
from igeb.network import (
    BeamNetwork,
    NodeSpec,
    certify_network,
    certify_node,
    nodal_matrices,
    reflection,
    serial_network,
    star_certificate,
    star_network,
)
from igeb.status import IGEB_UNSUPPORTED
from igeb.weights import ConstantWeight, exp_weight


def teardown_module(module):
    set_logging_callback(default_logging_callback)


def _rotation_z(angle):
    rotation = scipy.spatial.transform.Rotation.from_euler("z", angle, degrees=True)
    return rotation.as_matrix()


def _star(kinds=None):
    params = BeamParameters.hesse2012()
    K = near_transparent_K(params)
    return star_network(
        [params] * 3,
        [_rotation_z(angle) for angle in [0, 60, -60]],
        weights=default_network_weights("star", 3, 1.0, 5.0, 1.0),
        rho=1.5,
        feedbacks=[K] * 3,
        kinds=kinds,
    )


def _single(b, feedback=None):
    params = BeamParameters.hesse2012()
    if feedback is None:
        feedback = near_transparent_K(params)
    weight = exp_weight(0.0, b, 5.0, 1.0, "positive")
    network = serial_network(
        [params], [np.eye(3)], weights=[weight], rho=1.5, feedback=feedback
    )
    return network, weight


def test_simple_reflections():
    params = BeamParameters.hesse2012()
    network, _ = _single(0.5, feedback=transparent_K(params))
    assert network.nodes[0].kind == "clamped"
    assert network.nodes[1].kind == "controlled"

    np.testing.assert_equal(reflection(nodal_matrices(network, 0)), -np.eye(6))
    # transparent feedback absorbs all the incoming information
    np.testing.assert_allclose(
        reflection(nodal_matrices(network, 1)), np.zeros((6, 6)), atol=1e-10
    )

    free = serial_network(
        [params],
        [_rotation_z(30)],
        weights=[ConstantWeight(value=0.0)],
        rho=1.0,
        feedback=None,
        end="free",
    )
    np.testing.assert_equal(reflection(nodal_matrices(free, 1)), np.eye(6))


def test_transmission_between_identical_beams():
    params = BeamParameters.hesse2012()
    network = serial_network(
        [params] * 2,
        [_rotation_z(45)] * 2,
        weights=default_network_weights("serial", 2, 1.0, 5.0, 1.0),
        rho=1.5,
        feedback=near_transparent_K(params),
    )
    assert network.is_serial()
    assert not network.is_star()

    nodal = certify_node(network, 1)
    swap = np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(6))
    np.testing.assert_allclose(nodal.reflection, swap, atol=1e-10)

    assert nodal.verdict
    np.testing.assert_allclose(nodal.boundary, 0.0, atol=1e-12)
    np.testing.assert_allclose(nodal.congruent, 0.0, atol=1e-9)

    result = certify_network(network, grid_points=100)
    assert result.verdict


def test_controlled_congruent_matrix():
    params = BeamParameters.hesse2012()
    rng = np.random.default_rng(12)
    A = rng.normal(size=(6, 6))
    feedback = A @ A.T + 50 * np.eye(6)

    network = serial_network(
        [params],
        [_rotation_z(20)],
        weights=[exp_weight(0.0, 0.7, 5.0, 1.0, "positive")],
        rho=1.5,
        feedback=feedback,
    )
    nodal = certify_node(network, 1)

    d_half = np.diag(np.sqrt(nodal.speeds[0]))
    scaled = 2 * d_half @ nodal.boundary @ d_half
    np.testing.assert_allclose(
        np.sort(np.linalg.eigvalsh(scaled)),
        np.sort(np.diag(nodal.congruent)),
        atol=1e-10 * np.max(np.abs(scaled)),
    )


def test_star():
    network = _star()
    assert network.is_star()
    assert network.multiple_nodes() == [1]
    assert network.nodes[1].incidences == [(0, "end"), (1, "start"), (2, "start")]

    result = star_certificate(network, grid_points=100)
    assert result.verdict
    assert result.failures() == []
    assert len(result.nodes) == 4
    assert len(result.beams) == 3

    center = result.nodes[1]
    assert center.w_bar == [0.0, 0.0, 0.0]
    assert center.reflection.shape == (18, 18)
    assert center.gamma_condition_number == pytest.approx(np.sqrt(20))

    document = result.as_dict()
    assert document["verdict"] is True
    assert document["nodes"][1]["kind"] == "multiple"

    assert result.report().startswith("verdict: pass")


def test_clamped_star():
    recorded = []
    set_logging_callback(lambda level, message: recorded.append(message))

    network = _star(kinds=["clamped", "controlled", "controlled"])
    result = certify_network(network, grid_points=100)

    assert not result.verdict
    assert not result.nodes[0].verdict
    assert result.nodes[0].max_eigenvalue > 0
    assert all(node.verdict for node in result.nodes[1:])

    failures = result.failures()
    assert len(failures) == 1
    assert failures[0].startswith("node 0 (clamped): boundary matrix has a positive")
    assert any(message.startswith("igeb::network -- node 0") for message in recorded)


@pytest.mark.parametrize("b", [0.5, 1.49])
def test_single_beam_agrees_with_lyapunov(b):
    network, weight = _single(b)
    params = network.beams[0]

    single = certificate(params, near_transparent_K(params), 1.5, weight)
    result = certify_network(network)
    assert result.verdict == single.verdict
    assert result.verdict == (b < 1.0)

    if not result.verdict:
        assert not result.nodes[1].verdict
        assert result.nodes[1].max_eigenvalue > 0
        assert np.max(np.diag(result.nodes[1].congruent)) == pytest.approx(
            0.012, abs=2e-3
        )


def test_errors():
    params = BeamParameters.hesse2012()
    weight = ConstantWeight(value=0.0)

    mass = params.mass.copy()
    mass[0, 1] = mass[1, 0] = 0.1
    coupled = BeamParameters(length=1.0, mass=mass, flexibility=params.flexibility)
    with pytest.raises(IgebError, match="does not have diagonal mass") as error:
        serial_network(
            [coupled], [np.eye(3)], weights=[weight], rho=1.0, feedback=np.eye(6)
        )
    assert error.value.status == IGEB_UNSUPPORTED

    with pytest.raises(IgebError, match="each end of each beam must belong"):
        BeamNetwork(
            beams=[params],
            frames=[np.eye(3)],
            nodes=[NodeSpec(kind="clamped", incidences=[(0, "start")])],
            weights=[weight],
            rho=1.0,
        )

    with pytest.raises(IgebError, match="frame of beam 0 is not a rotation matrix"):
        serial_network(
            [params], [2 * np.eye(3)], weights=[weight], rho=1.0, feedback=np.eye(6)
        )

    with pytest.raises(IgebError, match="controlled nodes require a feedback"):
        NodeSpec(kind="controlled", incidences=[(0, "end")])

    with pytest.raises(IgebError, match="multiple nodes must connect the end"):
        NodeSpec(kind="multiple", incidences=[(0, "start"), (1, "start")])

    with pytest.raises(IgebError, match="unknown node kind 'loose'"):
        NodeSpec(kind="loose", incidences=[(0, "end")])

"""
Stability certificates for networks of beams, written in Riemann invariants.

Each node of the network connects one or more beam ends. At a node :math:`n`,
the information leaving the node into the beams is given by a reflection of
the incoming information, :math:`r_n^{out} = \\mathcal{B}_n r_n^{in}`, and the
quadratic Lyapunov functional decays if all the boundary matrices

.. math::

    \\mathcal{M}_n = \\mathcal{B}_n^T Q_n^{out} \\bar{D}_n \\mathcal{B}_n
        - Q_n^{in} \\bar{D}_n

are negative semi-definite, together with the interior conditions on each beam.
Only beams with diagonal mass and flexibility matrices are supported.
"""

from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from . import log
from .lyapunov import interior_certificate
from .model import (
    BeamParameters,
    check_feedback,
    diagonalize,
    sym_power,
)
from .profiling import profiled
from .status import IGEB_INVALID_PARAMETER, IGEB_UNSUPPORTED, IgebError
from .weights import WeightFunction


NODE_KINDS = ("controlled", "free", "clamped", "multiple")
BEAM_ENDS = ("start", "end")

FRAME_TOLERANCE = 1e-10
NSD_TOLERANCE = 1e-10


def _check_frame(R, index):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise IgebError(
            f"frame of beam {index} must be a 3x3 matrix, got shape {R.shape}",
            IGEB_INVALID_PARAMETER,
        )

    if (
        np.max(np.abs(R.T @ R - np.eye(3))) > FRAME_TOLERANCE
        or abs(np.linalg.det(R) - 1) > FRAME_TOLERANCE
    ):
        raise IgebError(
            f"frame of beam {index} is not a rotation matrix", IGEB_INVALID_PARAMETER
        )
    return R


class NodeSpec:
    """
    Description of a node: its kind, the beam ends meeting there and the
    feedback applied at the node.

    Simple nodes (``"controlled"``, ``"free"`` or ``"clamped"``) have a single
    incident beam end. For ``"multiple"`` nodes, the first incidence must be the
    end (:math:`x = \\ell`) of a beam, and all the other ones the start
    (:math:`x = 0`) of other beams.
    """

    def __init__(self, *, kind: str, incidences, feedback=None):
        """
        :param kind: one of ``"controlled"``, ``"free"``, ``"clamped"`` or
            ``"multiple"``
        :param incidences: list of ``(beam index, end)`` tuples, with end either
            ``"start"`` or ``"end"``
        :param feedback: 6x6 feedback matrix for controlled and multiple nodes
        """
        self.kind = str(kind)
        if self.kind not in NODE_KINDS:
            raise IgebError(
                f"unknown node kind '{self.kind}', expected one of {NODE_KINDS}",
                IGEB_INVALID_PARAMETER,
            )

        self.incidences = [(int(beam), str(end)) for beam, end in incidences]
        for _, end in self.incidences:
            if end not in BEAM_ENDS:
                raise IgebError(
                    f"beam end must be 'start' or 'end', got '{end}'",
                    IGEB_INVALID_PARAMETER,
                )

        if self.kind == "multiple":
            if len(self.incidences) < 2:
                raise IgebError(
                    "multiple nodes must connect at least two beams",
                    IGEB_INVALID_PARAMETER,
                )
            ends = [end for _, end in self.incidences]
            if ends[0] != "end" or any(end != "start" for end in ends[1:]):
                raise IgebError(
                    "multiple nodes must connect the end of one beam to the start "
                    "of all the others",
                    IGEB_INVALID_PARAMETER,
                )
        elif len(self.incidences) != 1:
            raise IgebError(
                f"{self.kind} nodes must have exactly one incident beam",
                IGEB_INVALID_PARAMETER,
            )

        if self.kind in ["free", "clamped"]:
            self.feedback = np.zeros((6, 6))
        elif feedback is None:
            if self.kind == "controlled":
                raise IgebError(
                    "controlled nodes require a feedback matrix",
                    IGEB_INVALID_PARAMETER,
                )
            self.feedback = np.zeros((6, 6))
        else:
            self.feedback = check_feedback(feedback)

    @property
    def degree(self) -> int:
        return len(self.incidences)


class BeamNetwork:
    """
    A network of beams, each one with constant parameters, a constant reference
    frame and a Lyapunov weight :math:`w_i`. All beams share the same factor
    :math:`\\rho`.
    """

    def __init__(
        self,
        *,
        beams: Sequence[BeamParameters],
        frames,
        nodes: Sequence[NodeSpec],
        weights: Sequence[WeightFunction],
        rho: float,
    ):
        self.beams = list(beams)
        self.frames = [_check_frame(R, i) for i, R in enumerate(frames)]
        self.nodes = list(nodes)
        self.weights = list(weights)
        self.rho = float(rho)

        n_beams = len(self.beams)
        if n_beams == 0:
            raise IgebError("a network needs at least one beam", IGEB_INVALID_PARAMETER)

        if len(self.frames) != n_beams or len(self.weights) != n_beams:
            raise IgebError(
                "expected one frame and one weight for each beam",
                IGEB_INVALID_PARAMETER,
            )

        if not self.rho > 0:
            raise IgebError(
                f"`rho` must be strictly positive, got {self.rho}",
                IGEB_INVALID_PARAMETER,
            )

        seen = set()
        for node in self.nodes:
            for incidence in node.incidences:
                if not 0 <= incidence[0] < n_beams:
                    raise IgebError(
                        f"node refers to beam {incidence[0]}, but there are only "
                        f"{n_beams} beams",
                        IGEB_INVALID_PARAMETER,
                    )
                if incidence in seen:
                    raise IgebError(
                        f"beam {incidence[0]} {incidence[1]} appears in two nodes",
                        IGEB_INVALID_PARAMETER,
                    )
                seen.add(incidence)

        if len(seen) != 2 * n_beams:
            raise IgebError(
                "each end of each beam must belong to exactly one node",
                IGEB_INVALID_PARAMETER,
            )

        for i, beam in enumerate(self.beams):
            if not beam.is_diagonal:
                raise IgebError(
                    f"beam {i} does not have diagonal mass and flexibility matrices",
                    IGEB_UNSUPPORTED,
                )

    def multiple_nodes(self) -> List[int]:
        return [i for i, node in enumerate(self.nodes) if node.kind == "multiple"]

    def is_star(self) -> bool:
        """
        Is this network a star: beam 0 goes from a simple node to the only
        multiple node, and all the other beams go from the multiple node to a
        simple node. A single beam is a degenerate star.
        """
        multiple = self.multiple_nodes()
        if len(self.beams) == 1:
            return len(multiple) == 0
        if len(multiple) != 1:
            return False

        center = self.nodes[multiple[0]]
        expected = [(0, "end")] + [(i, "start") for i in range(1, len(self.beams))]
        return center.incidences == expected

    def is_serial(self) -> bool:
        """Is this network a chain of beams, beam ``i`` starting where ``i-1`` ends"""
        for node in self.nodes:
            if node.kind == "multiple":
                if node.degree != 2:
                    return False
                (first, _), (second, _) = node.incidences
                if second != first + 1:
                    return False
        return len(self.multiple_nodes()) == len(self.beams) - 1


class NodalCertificate:
    """Matrices and verdict of the boundary condition at one node"""

    def __init__(self, *, index: int, node: NodeSpec):
        self.index = index
        self.node = node
        self.gammas = []
        """:math:`\\gamma_i^n = \\bar{R}_i C_i^{1/2} U_i^T` for each incidence"""
        self.sigmas = []
        """:math:`\\sigma_i^n = \\bar{R}_i C_i^{-1/2} U_i^T D_i^{-1} U_i C_i^{-1/2}
        \\bar{R}_i^T` for each incidence"""
        self.speeds = []
        """characteristic speeds of the beam at each incidence"""
        self.w_bar = []
        """signed weight :math:`\\bar{w}` for each incidence"""
        self.feedback_bar = None
        """feedback matrix in the global frame, :math:`\\bar{R} K \\bar{R}^T`"""
        self.reflection = None
        self.boundary = None
        self.congruent = None
        self.max_eigenvalue = None
        self.verdict = None

    @property
    def G(self) -> np.ndarray:
        """block diagonal matrix of the :math:`\\gamma_i^n`"""
        return scipy.linalg.block_diag(*self.gammas)

    @property
    def D_bar(self) -> np.ndarray:
        return np.diag(np.concatenate(self.speeds))

    @property
    def gamma_condition_number(self) -> float:
        return float(max(np.linalg.cond(gamma) for gamma in self.gammas))

    def weighted_speeds(self, rho: float):
        """:math:`(Q^{out} \\bar{D}, Q^{in} \\bar{D})` for this node"""
        out_weights = np.concatenate(
            [np.full(6, rho + w) for w in self.w_bar]
        )
        in_weights = np.concatenate(
            [np.full(6, rho - w) for w in self.w_bar]
        )
        inverse_speeds = 1.0 / np.concatenate(self.speeds)
        return (
            np.diag(0.5 * out_weights * inverse_speeds),
            np.diag(0.5 * in_weights * inverse_speeds),
        )

    def as_dict(self):
        return {
            "node": self.index,
            "kind": self.node.kind,
            "verdict": self.verdict,
            "max_eigenvalue": self.max_eigenvalue,
            "w_bar": list(self.w_bar),
            "boundary": None if self.boundary is None else self.boundary.tolist(),
            "congruent": None if self.congruent is None else self.congruent.tolist(),
        }


def _global_block(R) -> np.ndarray:
    return scipy.linalg.block_diag(R, R)


def nodal_matrices(network: BeamNetwork, index: int) -> NodalCertificate:
    """
    Build the matrices :math:`\\gamma_i^n`, :math:`\\sigma_i^n`,
    :math:`\\bar{K}_n` and the signed weights at node ``index`` of the network.
    """
    node = network.nodes[index]
    nodal = NodalCertificate(index=index, node=node)

    for beam_index, end in node.incidences:
        params = network.beams[beam_index]
        x = 0.0 if end == "start" else params.length

        diagonalization = diagonalize(params, x)
        if not np.allclose(diagonalization.U, np.eye(6)):
            raise IgebError(
                f"beam {beam_index} can not be diagonalized with U = I",
                IGEB_UNSUPPORTED,
            )

        R_bar = _global_block(network.frames[beam_index])
        flexibility = params.flexibility_at(x)
        c_half = sym_power(flexibility, 0.5)
        c_mhalf = sym_power(flexibility, -0.5)
        U = diagonalization.U
        D_inv = np.diag(1.0 / diagonalization.speeds)

        gamma = R_bar @ c_half @ U.T
        sigma = R_bar @ c_mhalf @ U.T @ D_inv @ U @ c_mhalf @ R_bar.T
        nodal.gammas.append(gamma)
        nodal.sigmas.append(0.5 * (sigma + sigma.T))
        nodal.speeds.append(diagonalization.speeds)

        w_value = float(network.weights[beam_index](np.array([x]))[0])
        nodal.w_bar.append(w_value if end == "end" else -w_value)

    first_beam = node.incidences[0][0]
    R_bar = _global_block(network.frames[first_beam])
    feedback_bar = R_bar @ node.feedback @ R_bar.T
    nodal.feedback_bar = 0.5 * (feedback_bar + feedback_bar.T)
    return nodal


def _ones_block(k: int) -> np.ndarray:
    return np.kron(np.ones((k, k)), np.eye(6))


def reflection(nodal: NodalCertificate) -> np.ndarray:
    """
    Reflection matrix :math:`\\mathcal{B}_n` such that :math:`r_n^{out} =
    \\mathcal{B}_n r_n^{in}` at this node.
    """
    kind = nodal.node.kind
    if kind == "clamped":
        result = -np.eye(6)
    elif kind == "free":
        result = np.eye(6)
    elif kind == "controlled":
        gamma = nodal.gammas[0]
        sigma = nodal.sigmas[0]
        K_bar = nodal.feedback_bar
        try:
            result = np.linalg.solve((sigma + K_bar) @ gamma, (sigma - K_bar) @ gamma)
        except np.linalg.LinAlgError:
            raise IgebError(
                f"singular reflection at node {nodal.index}", IGEB_INVALID_PARAMETER
            )
    else:
        k = nodal.node.degree
        total = sum(nodal.sigmas) + nodal.feedback_bar
        S_inv = scipy.linalg.block_diag(*([np.linalg.inv(total)] * k))
        Sigma = scipy.linalg.block_diag(*nodal.sigmas)
        G = nodal.G
        result = 2 * np.linalg.solve(G, S_inv @ _ones_block(k) @ Sigma @ G) - np.eye(
            6 * k
        )

    nodal.reflection = result
    return result


def nodal_boundary_matrix(nodal: NodalCertificate, rho: float):
    """
    Boundary matrix :math:`\\mathcal{M}_n = \\mathcal{B}_n^T Q_n^{out} \\bar{D}_n
    \\mathcal{B}_n - Q_n^{in} \\bar{D}_n`, its largest eigenvalue and whether it
    is negative semi-definite.

    :returns: the tuple ``(M, max_eigenvalue, verdict)``
    """
    B = nodal.reflection if nodal.reflection is not None else reflection(nodal)
    Q_out, Q_in = nodal.weighted_speeds(rho)

    outgoing = B.T @ Q_out @ B
    M = outgoing - Q_in
    M = 0.5 * (M + M.T)

    max_eigenvalue = float(scipy.linalg.eigvalsh(M)[-1])
    scale = np.linalg.norm(outgoing, 2) + np.linalg.norm(Q_in, 2)
    verdict = bool(max_eigenvalue <= NSD_TOLERANCE * scale)

    nodal.boundary = M
    nodal.max_eigenvalue = max_eigenvalue
    nodal.verdict = verdict
    return M, max_eigenvalue, verdict


def congruent_boundary_matrix(nodal: NodalCertificate, rho: float) -> np.ndarray:
    """
    Matrix :math:`\\tilde{\\mathcal{M}}_n` congruent to the boundary matrix
    :math:`\\mathcal{M}_n`, with an explicit dependency on the weights and
    feedback.

    For simple controlled nodes, this is the diagonal matrix
    :math:`\\rho (F - I) + \\bar{w} (F + I)` with :math:`F = (I + \\Upsilon)^{-2}
    (I - \\Upsilon)^2` and :math:`\\Upsilon` the eigenvalues of
    :math:`\\bar{D}^{1/2} \\gamma^T \\bar{K} \\gamma \\bar{D}^{1/2}`. For free and
    clamped nodes, :math:`\\mathcal{M}_n = \\bar{w} \\bar{D}^{-1}` is returned.
    """
    kind = nodal.node.kind
    w_bar = nodal.w_bar
    if kind in ["free", "clamped"]:
        result = w_bar[0] * np.diag(1.0 / nodal.speeds[0])
    elif kind == "controlled":
        gamma = nodal.gammas[0]
        d_half = np.diag(np.sqrt(nodal.speeds[0]))
        upsilon = scipy.linalg.eigvalsh(
            d_half @ gamma.T @ nodal.feedback_bar @ gamma @ d_half
        )
        F = (1 - upsilon) ** 2 / (1 + upsilon) ** 2
        result = np.diag(rho * (F - 1) + w_bar[0] * (F + 1))
    else:
        k = nodal.node.degree
        total = sum(nodal.sigmas) + nodal.feedback_bar
        ones = _ones_block(k)
        W = np.diag(np.repeat(w_bar, 6))
        Sigma = scipy.linalg.block_diag(*nodal.sigmas)
        Sigma_inv = scipy.linalg.block_diag(*[np.linalg.inv(s) for s in nodal.sigmas])
        S = scipy.linalg.block_diag(*([total] * k))

        result = (
            -2 * rho * np.kron(np.ones((k, k)), nodal.feedback_bar)
            + 2 * ones @ W @ Sigma @ ones
            - ones @ W @ S
            - S @ W @ ones
            + W @ S @ Sigma_inv @ S
        )

    result = 0.5 * (result + result.T)
    nodal.congruent = result
    return result


def certify_node(network: BeamNetwork, index: int) -> NodalCertificate:
    """Build all the matrices and the verdict for node ``index``"""
    nodal = nodal_matrices(network, index)
    reflection(nodal)
    nodal_boundary_matrix(nodal, network.rho)
    congruent_boundary_matrix(nodal, network.rho)
    return nodal


class NetworkCertificate:
    """Aggregated nodal and interior verdicts for a network"""

    def __init__(self, *, nodes: List[NodalCertificate], beams: List[dict]):
        self.nodes = nodes
        self.beams = beams
        """for each beam, a ``dict`` with ``margins``, ``conditions`` and
        ``constants`` of the interior conditions"""

    @property
    def verdict(self) -> bool:
        nodes = all(node.verdict for node in self.nodes)
        beams = all(all(beam["conditions"].values()) for beam in self.beams)
        return nodes and beams

    def failures(self) -> List[str]:
        """human readable descriptions of the failing conditions"""
        result = []
        for node in self.nodes:
            if not node.verdict:
                result.append(
                    f"node {node.index} ({node.node.kind}): boundary matrix has a "
                    f"positive eigenvalue {node.max_eigenvalue:.6e}"
                )
        for i, beam in enumerate(self.beams):
            for name, passed in beam["conditions"].items():
                if not passed:
                    result.append(f"beam {i}: condition {name} fails")
        return result

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "nodes": [node.as_dict() for node in self.nodes],
            "beams": self.beams,
            "failures": self.failures(),
        }

    def report(self) -> str:
        lines = [f"verdict: {'pass' if self.verdict else 'fail'}"]
        for node in self.nodes:
            status = "pass" if node.verdict else "FAIL"
            lines.append(
                f"node {node.index} ({node.node.kind}): {status}, max eigenvalue "
                f"{node.max_eigenvalue:.6e}"
            )
        for i, beam in enumerate(self.beams):
            passed = all(beam["conditions"].values())
            lines.append(f"beam {i}: {'pass' if passed else 'FAIL'}")
        lines.extend(self.failures())
        return "\n".join(lines)


@profiled
def certify_network(
    network: BeamNetwork, grid_points: int = 1000
) -> NetworkCertificate:
    """
    Check all the nodal conditions and the interior conditions of all beams
    (with the ``"sqrt"`` variant of :math:`W`) of a star or serial network.
    """
    if not (network.is_star() or network.is_serial()):
        raise IgebError(
            "only star and serial networks are supported", IGEB_UNSUPPORTED
        )

    nodes = [certify_node(network, i) for i in range(len(network.nodes))]
    beams = []
    for params, weight in zip(network.beams, network.weights):
        margins, conditions, constants = interior_certificate(
            params, network.rho, weight, "sqrt", grid_points
        )
        beams.append(
            {"margins": margins, "conditions": conditions, "constants": constants}
        )

    result = NetworkCertificate(nodes=nodes, beams=beams)
    if result.verdict:
        log.info("network", "all nodal and interior conditions are fulfilled")
    else:
        log.info("network", "; ".join(result.failures()))
    return result


def star_certificate(network: BeamNetwork, grid_points: int = 1000):
    """Same as :py:func:`certify_network`, for star networks only"""
    if not network.is_star():
        raise IgebError("this network is not a star", IGEB_UNSUPPORTED)
    return certify_network(network, grid_points)


def _simple_node(kind, incidence, feedback):
    if kind == "controlled":
        return NodeSpec(kind=kind, incidences=[incidence], feedback=feedback)
    return NodeSpec(kind=kind, incidences=[incidence])


def star_network(
    beams: Sequence[BeamParameters],
    frames,
    *,
    weights: Sequence[WeightFunction],
    rho: float,
    feedbacks,
    center_feedback: Optional[np.ndarray] = None,
    kinds: Optional[Sequence[str]] = None,
) -> BeamNetwork:
    """
    Build a star network: beam 0 goes from node 0 to the central node 1, and
    beam ``i > 0`` goes from the central node to node ``i + 1``.

    :param feedbacks: feedback matrices at the simple nodes, in node order
        (node 0, then nodes 2 to N)
    :param center_feedback: feedback at the central node, defaults to zero
    :param kinds: kinds of the simple nodes in the same order as ``feedbacks``,
        defaults to all ``"controlled"``
    """
    n_beams = len(beams)
    if kinds is None:
        kinds = ["controlled"] * n_beams
    if len(kinds) != n_beams or len(feedbacks) != n_beams:
        raise IgebError(
            "expected one kind and one feedback for each simple node",
            IGEB_INVALID_PARAMETER,
        )

    if n_beams == 1:
        nodes = [
            _simple_node(kinds[0], (0, "start"), feedbacks[0]),
            NodeSpec(
                kind="controlled" if center_feedback is not None else "free",
                incidences=[(0, "end")],
                feedback=center_feedback,
            ),
        ]
    else:
        nodes = [_simple_node(kinds[0], (0, "start"), feedbacks[0])]
        nodes.append(
            NodeSpec(
                kind="multiple",
                incidences=[(0, "end")] + [(i, "start") for i in range(1, n_beams)],
                feedback=center_feedback,
            )
        )
        for i in range(1, n_beams):
            nodes.append(_simple_node(kinds[i], (i, "end"), feedbacks[i]))

    return BeamNetwork(
        beams=beams, frames=frames, nodes=nodes, weights=weights, rho=rho
    )


def serial_network(
    beams: Sequence[BeamParameters],
    frames,
    *,
    weights: Sequence[WeightFunction],
    rho: float,
    feedback,
    start: str = "clamped",
    start_feedback: Optional[np.ndarray] = None,
    end: str = "controlled",
) -> BeamNetwork:
    """
    Build a chain of beams: beam ``i`` goes from node ``i`` to node ``i + 1``.
    Inner nodes are multiple nodes without feedback, the first and last nodes
    are of kind ``start`` and ``end``. ``feedback`` is used at the last node
    and ``start_feedback`` at the first one.
    """
    n_beams = len(beams)
    nodes = [_simple_node(start, (0, "start"), start_feedback)]
    for i in range(1, n_beams):
        nodes.append(
            NodeSpec(kind="multiple", incidences=[(i - 1, "end"), (i, "start")])
        )
    nodes.append(_simple_node(end, (n_beams - 1, "end"), feedback))
    return BeamNetwork(
        beams=beams, frames=frames, nodes=nodes, weights=weights, rho=rho
    )

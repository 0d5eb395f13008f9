"""
JSON configuration of the command line tool. A configuration document contains
the sections ``beam``, ``feedback``, ``discretization``, ``initial``,
``newton``, ``output``, ``certificate`` and ``network``; missing sections and
keys take default values.
"""

import copy
import json
import os
from typing import Any, Dict, Optional

import numpy as np

from .fem import Mesh
from .integrate import NewtonSettings, TimeGrid
from .lyapunov import W_VARIANTS, design_weight
from .model import (
    BeamParameters,
    IsotropicSection,
    check_feedback,
    near_transparent_K,
    transparent_K,
)
from .network import BeamNetwork, serial_network, star_network
from .presets import PRESETS, InitialData, initial_data, straight_frames
from .series import nodal_from_rows, read_series
from .status import IGEB_CONFIG_ERROR, IgebError
from .weights import (
    ExponentialWeight,
    ShiftedWeight,
    TranslatedWeight,
    WeightFunction,
    weight_from_hypers,
)


FEEDBACK_MODES = ("free", "transparent", "near_transparent", "diagonal", "matrix")
TOPOLOGIES = ("star", "serial")
SIMPLE_NODE_KINDS = ("controlled", "free", "clamped")

DEFAULTS = {
    "beam": {"preset": "hesse2012"},
    "feedback": {"mode": "near_transparent"},
    "discretization": {
        "n_elements": 20,
        "n_times": 1001,
        "horizon": 1.0,
        "threads": None,
    },
    "initial": {"preset": "helix_zero_velocity"},
    "newton": {"max_iter": 20, "tol_rel": 1e-10, "tol_abs": None},
    "output": {"directory": "igeb-output", "reconstruct": "both"},
    "certificate": {
        "rho": 1.5,
        "W": "sqrt",
        "grid_points": 1000,
        "weight": {"type": "design", "safety": 0.9, "eta": None},
    },
    "network": {
        "topology": "star",
        "n_beams": 3,
        "angles": [0.0, 60.0, -60.0],
        "rho": 1.5,
        "nodes": None,
        "feedback": {"mode": "near_transparent"},
        "center_feedback": {"mode": "free"},
        "weights": {"type": "default", "eta": 5.0, "amplitude": 1.0},
        "grid_points": 1000,
    },
}

# sections where the user can give a completely different set of keys
_REPLACED_SECTIONS = ("beam", "feedback", "initial")


class BadConfiguration(IgebError):
    """Invalid configuration, the message names the faulty field"""

    def __init__(self, message):
        super().__init__(message, IGEB_CONFIG_ERROR)


def _merge(defaults, values, path):
    result = copy.deepcopy(defaults)
    for key, value in values.items():
        if key not in defaults:
            raise BadConfiguration(f"unknown configuration key '{path}{key}'")

        if isinstance(defaults[key], dict) and isinstance(value, dict):
            if path == "network." and key in ["feedback", "center_feedback"]:
                result[key] = copy.deepcopy(value)
            elif path == "network." and key == "weights":
                result[key] = copy.deepcopy(value)
            elif path == "certificate." and key == "weight":
                result[key] = copy.deepcopy(value)
            else:
                result[key] = _merge(defaults[key], value, f"{path}{key}.")
        else:
            result[key] = copy.deepcopy(value)
    return result


def parse_override(override: str):
    """
    Parse a ``KEY=VALUE`` override into a dotted path and a value. ``VALUE`` is
    parsed as JSON, and kept as a string if this fails.
    """
    if "=" not in override:
        raise BadConfiguration(f"invalid override '{override}', expected KEY=VALUE")

    key, value = override.split("=", 1)
    key = key.strip()
    if not key:
        raise BadConfiguration(f"invalid override '{override}', missing key")

    try:
        value = json.loads(value)
    except json.JSONDecodeError:
        pass
    return key.split("."), value


def apply_overrides(document: Dict[str, Any], overrides) -> Dict[str, Any]:
    """Apply all the ``KEY=VALUE`` ``overrides`` to a copy of ``document``"""
    document = copy.deepcopy(document)
    for override in overrides:
        path, value = parse_override(override)
        current = document
        for i, key in enumerate(path[:-1]):
            if key not in current or current[key] is None:
                current[key] = {}
            if not isinstance(current[key], dict):
                raise BadConfiguration(
                    f"can not override '{'.'.join(path)}': "
                    f"'{'.'.join(path[: i + 1])}' is not a section"
                )
            current = current[key]
        current[path[-1]] = value
    return document


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadConfiguration(f"'{name}' must be an integer, got {value!r}")
    if int(value) != value or value < 1:
        raise BadConfiguration(f"'{name}' must be a positive integer, got {value!r}")
    return int(value)


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BadConfiguration(f"'{name}' must be a number, got {value!r}")
    return float(value)


def thread_count(requested: Optional[int] = None) -> int:
    """
    Number of threads to use: ``requested`` (or all the cpus), capped by the
    ``IGEB_THREADS`` environment variable.
    """
    if requested is None:
        requested = os.cpu_count() or 1

    cap = os.environ.get("IGEB_THREADS")
    if cap is not None:
        try:
            cap = int(cap)
        except ValueError:
            raise BadConfiguration(f"IGEB_THREADS must be an integer, got '{cap}'")
        if cap < 1:
            raise BadConfiguration(f"IGEB_THREADS must be positive, got {cap}")
        requested = min(requested, cap)

    return max(int(requested), 1)


def _matrix_6x6(value, name):
    """A 6x6 matrix given explicitly, or by its diagonal"""
    try:
        array = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise BadConfiguration(f"'{name}' must be a list of numbers")

    if array.shape == (6,):
        return np.diag(array)
    elif array.shape == (6, 6):
        return array
    raise BadConfiguration(
        f"'{name}' must be a 6x6 matrix or a list of 6 diagonal values, "
        f"got shape {array.shape}"
    )


class RunConfig:
    """
    Validated configuration of a run. The normalized document (with all
    defaults filled in) is available with :py:meth:`to_dict`.
    """

    def __init__(self, document: Optional[Dict[str, Any]] = None, overrides=()):
        if document is None:
            document = {}
        if not isinstance(document, dict):
            raise BadConfiguration("the configuration must be a JSON object")

        document = apply_overrides(document, overrides)

        normalized = {}
        for section, defaults in DEFAULTS.items():
            values = document.get(section, {})
            if values is None:
                values = {}
            if not isinstance(values, dict):
                raise BadConfiguration(f"'{section}' must be an object")

            if section in _REPLACED_SECTIONS and values:
                normalized[section] = copy.deepcopy(values)
            else:
                normalized[section] = _merge(defaults, values, f"{section}.")

        for section in document:
            if section not in DEFAULTS:
                raise BadConfiguration(f"unknown configuration section '{section}'")

        self._document = normalized
        self._check_sections()

    @staticmethod
    def from_file(path, overrides=()) -> "RunConfig":
        if not os.path.exists(path):
            raise BadConfiguration(f"configuration file '{path}' does not exist")

        with open(path) as fd:
            try:
                document = json.load(fd)
            except json.JSONDecodeError as e:
                raise BadConfiguration(f"invalid JSON in '{path}': {e}")
        return RunConfig(document, overrides)

    def to_dict(self) -> Dict[str, Any]:
        return copy.deepcopy(self._document)

    def __getitem__(self, section):
        return self._document[section]

    def _check_sections(self):
        discretization = self["discretization"]
        _positive_int(discretization["n_elements"], "discretization.n_elements")
        n_times = _positive_int(discretization["n_times"], "discretization.n_times")
        if n_times < 2:
            raise BadConfiguration("'discretization.n_times' must be at least 2")
        if _number(discretization["horizon"], "discretization.horizon") <= 0:
            raise BadConfiguration("'discretization.horizon' must be positive")
        if discretization["threads"] is not None:
            _positive_int(discretization["threads"], "discretization.threads")

        newton = self["newton"]
        _positive_int(newton["max_iter"], "newton.max_iter")
        _number(newton["tol_rel"], "newton.tol_rel")
        if newton["tol_abs"] is not None:
            _number(newton["tol_abs"], "newton.tol_abs")

        certificate = self["certificate"]
        if certificate["W"] not in W_VARIANTS:
            raise BadConfiguration(
                f"'certificate.W' must be one of {W_VARIANTS}, "
                f"got {certificate['W']!r}"
            )

        network = self["network"]
        if network["topology"] not in TOPOLOGIES:
            raise BadConfiguration(
                f"'network.topology' must be one of {TOPOLOGIES}, "
                f"got {network['topology']!r}"
            )
        _positive_int(network["n_beams"], "network.n_beams")

        reconstruct = self["output"]["reconstruct"]
        if reconstruct not in ["time", "space", "both"]:
            raise BadConfiguration(
                "'output.reconstruct' must be 'time', 'space' or 'both', "
                f"got {reconstruct!r}"
            )

    def validate(self):
        """
        Build all the objects needed for a run, converting errors to
        :py:class:`BadConfiguration`.
        """
        params = self.beam()
        K = self.feedback(params)
        mesh = self.mesh(params)
        self.grid()
        self.newton()
        self.initial(params, mesh, K)

    def _wrap(self, section, function, *args):
        try:
            return function(*args)
        except BadConfiguration:
            raise
        except IgebError as e:
            raise BadConfiguration(f"invalid '{section}' section: {e.message}")

    def beam(self) -> BeamParameters:
        return self._wrap("beam", build_beam, self["beam"])

    def feedback(self, params: BeamParameters) -> np.ndarray:
        return self._wrap("feedback", build_feedback, self["feedback"], params)

    def mesh(self, params: BeamParameters) -> Mesh:
        n_elements = int(self["discretization"]["n_elements"])
        return self._wrap(
            "discretization",
            lambda: Mesh(length=params.length, n_elements=n_elements),
        )

    def grid(self) -> TimeGrid:
        discretization = self["discretization"]
        return self._wrap(
            "discretization",
            lambda: TimeGrid(
                horizon=float(discretization["horizon"]),
                n_points=int(discretization["n_times"]),
            ),
        )

    def newton(self) -> NewtonSettings:
        return self._wrap("newton", lambda: NewtonSettings(**self["newton"]))

    def n_threads(self) -> int:
        return thread_count(self["discretization"]["threads"])

    def initial(self, params, mesh, K) -> InitialData:
        return self._wrap("initial", build_initial, self["initial"], params, mesh, K)

    def weight(self, params, K) -> WeightFunction:
        certificate = self["certificate"]
        return self._wrap(
            "certificate",
            build_weight,
            certificate["weight"],
            params,
            K,
            float(certificate["rho"]),
            certificate["W"],
        )

    def network(self) -> BeamNetwork:
        params = self.beam()
        return self._wrap("network", build_network, self["network"], params)


def build_beam(section) -> BeamParameters:
    """Create the beam parameters from the ``beam`` section"""
    section = dict(section)
    if "preset" in section:
        preset = section.pop("preset")
        if section:
            raise BadConfiguration(
                "'beam.preset' can not be combined with other keys, got "
                f"{sorted(section)}"
            )
        if preset != "hesse2012":
            raise BadConfiguration(
                f"unknown beam preset '{preset}', expected 'hesse2012'"
            )
        return BeamParameters.hesse2012()

    if "length" not in section:
        raise BadConfiguration("missing 'beam.length'")
    length = _number(section.pop("length"), "beam.length")
    precurvature = section.pop("precurvature", None)

    if "section" in section:
        hypers = section.pop("section")
        if not isinstance(hypers, dict):
            raise BadConfiguration("'beam.section' must be an object")
        try:
            cross_section = IsotropicSection(**hypers)
        except TypeError as e:
            raise BadConfiguration(f"invalid 'beam.section': {e}")
        params = BeamParameters.from_section(
            cross_section, length=length, precurvature=precurvature
        )
    else:
        if "mass" not in section or "flexibility" not in section:
            raise BadConfiguration(
                "the beam needs either 'beam.section' or both 'beam.mass' and "
                "'beam.flexibility'"
            )
        params = BeamParameters(
            length=length,
            mass=_matrix_6x6(section.pop("mass"), "beam.mass"),
            flexibility=_matrix_6x6(section.pop("flexibility"), "beam.flexibility"),
            precurvature=precurvature,
        )

    if section:
        raise BadConfiguration(f"unknown keys in 'beam': {sorted(section)}")
    return params


def build_feedback(section, params: BeamParameters, name="feedback") -> np.ndarray:
    """Create the feedback matrix from a ``feedback`` section"""
    mode = section.get("mode")
    if mode not in FEEDBACK_MODES:
        raise BadConfiguration(
            f"'{name}.mode' must be one of {FEEDBACK_MODES}, got {mode!r}"
        )

    if mode == "free":
        return np.zeros((6, 6))
    elif mode == "transparent":
        return transparent_K(params, params.length)
    elif mode == "near_transparent":
        return near_transparent_K(params, params.length)
    elif mode == "diagonal":
        mu = section.get("mu")
        if mu is None or len(mu) != 2:
            raise BadConfiguration(f"'{name}.mu' must contain two values")
        mu_1 = _number(mu[0], f"{name}.mu[0]")
        mu_2 = _number(mu[1], f"{name}.mu[1]")
        return check_feedback(np.diag([mu_1] * 3 + [mu_2] * 3), name)
    else:
        if "matrix" not in section:
            raise BadConfiguration(f"missing '{name}.matrix'")
        matrix = _matrix_6x6(section["matrix"], f"{name}.matrix")
        return check_feedback(matrix, name)


def build_initial(section, params, mesh, K) -> InitialData:
    """
    Create the initial data from the ``initial`` section, either a preset or a
    file containing the nodal states (columns ``t, x, v1..v6, z1..z6``, only the
    first instant is used).
    """
    if "preset" in section:
        preset = section["preset"]
        if preset not in PRESETS:
            raise BadConfiguration(
                f"'initial.preset' must be one of {PRESETS}, got {preset!r}"
            )
        return initial_data(preset, params, mesh, K)

    if "file" not in section:
        raise BadConfiguration("the 'initial' section needs a 'preset' or a 'file'")

    path = section["file"]
    try:
        _, rows = read_series(path)
        _, nodes, nodal = nodal_from_rows(rows)
    except IgebError as e:
        raise BadConfiguration(f"invalid 'initial.file': {e.message}")

    if len(nodes) != mesh.n_nodes or not np.allclose(nodes, mesh.nodes):
        raise BadConfiguration(
            f"'initial.file' contains {len(nodes)} nodes which do not match the "
            f"{mesh.n_nodes} nodes of the mesh"
        )

    state = nodal[0].reshape(-1)
    if np.any(state[:6] != 0):
        raise BadConfiguration(
            "'initial.file' must have zero velocities at the clamped end"
        )

    positions, rotations = straight_frames(mesh.nodes)
    return InitialData(
        name="file",
        state=state[6:],
        positions=positions,
        rotations=rotations,
        description={"file": path},
    )


def build_weight(section, params, K, rho, W_variant) -> WeightFunction:
    """
    Create the Lyapunov weight from the ``certificate.weight`` section: either
    ``{"type": "design"}`` to build a weight compatible with the feedback, or
    the description of a weight.
    """
    section = dict(section)
    if section.get("type") == "design":
        eta = section.get("eta")
        return design_weight(
            params,
            K,
            rho,
            W_variant=W_variant,
            eta=eta,
            safety=float(section.get("safety", 0.9)),
        )
    return weight_from_hypers(section)


def _rotation_z(angle):
    angle = np.deg2rad(angle)
    cos, sin = np.cos(angle), np.sin(angle)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


def default_network_weights(topology, n_beams, length, eta, amplitude):
    """
    Weights used by default in networks. For stars, the weight of beam 0 is
    negative and vanishes at the central node, and the weights of the other
    beams are positive and vanish at the central node. For serial chains, a
    single increasing weight is spread over all the beams.
    """
    if topology == "serial":
        total = ExponentialWeight(
            a=0.0, b=amplitude, eta=eta, length=n_beams * length, sign="positive"
        )
        return [TranslatedWeight(total, offset=i * length) for i in range(n_beams)]

    incoming = ExponentialWeight(
        a=-amplitude, b=0.0, eta=eta, length=length, sign="negative"
    )
    outgoing = ExponentialWeight(
        a=0.0, b=amplitude, eta=eta, length=length, sign="positive"
    )
    weights = [ShiftedWeight(incoming, anchor="end", length=length)]
    for _ in range(1, n_beams):
        weights.append(ShiftedWeight(outgoing, anchor="start", length=length))
    return weights


def build_network(section, params: BeamParameters) -> BeamNetwork:
    """Create a network of identical beams from the ``network`` section"""
    topology = section["topology"]
    n_beams = int(section["n_beams"])

    angles = section["angles"]
    if angles is None:
        angles = [0.0] * n_beams
    if len(angles) != n_beams:
        raise BadConfiguration(
            f"'network.angles' must contain {n_beams} values, got {len(angles)}"
        )
    frames = [_rotation_z(_number(a, "network.angles")) for a in angles]

    weights = section["weights"]
    if isinstance(weights, dict) and weights.get("type") == "default":
        weights = default_network_weights(
            topology,
            n_beams,
            params.length,
            _number(weights.get("eta", 5.0), "network.weights.eta"),
            _number(weights.get("amplitude", 1.0), "network.weights.amplitude"),
        )
    elif isinstance(weights, list) and len(weights) == n_beams:
        weights = [weight_from_hypers(hypers) for hypers in weights]
    else:
        raise BadConfiguration(
            "'network.weights' must be {'type': 'default', ...} or a list with "
            "one weight per beam"
        )

    K = build_feedback(section["feedback"], params, "network.feedback")
    center_feedback = build_feedback(
        section["center_feedback"], params, "network.center_feedback"
    )
    rho = _number(section["rho"], "network.rho")

    kinds = section["nodes"]
    if topology == "star":
        if kinds is None:
            kinds = ["controlled"] * n_beams
        if len(kinds) != n_beams or any(k not in SIMPLE_NODE_KINDS for k in kinds):
            raise BadConfiguration(
                f"'network.nodes' must contain {n_beams} kinds among "
                f"{SIMPLE_NODE_KINDS}"
            )
        return star_network(
            [params] * n_beams,
            frames,
            weights=weights,
            rho=rho,
            feedbacks=[K] * n_beams,
            center_feedback=center_feedback,
            kinds=kinds,
        )
    else:
        if kinds is None:
            kinds = ["clamped", "controlled"]
        if len(kinds) != 2 or any(k not in SIMPLE_NODE_KINDS for k in kinds):
            raise BadConfiguration(
                "'network.nodes' must contain the kinds of the first and last "
                f"nodes among {SIMPLE_NODE_KINDS}"
            )
        return serial_network(
            [params] * n_beams,
            frames,
            weights=weights,
            rho=rho,
            feedback=K,
            start=kinds[0],
            start_feedback=K,
            end=kinds[1],
        )

from . import fem  # noqa
from . import integrate  # noqa
from . import lyapunov  # noqa
from . import model  # noqa
from . import network  # noqa
from . import presets  # noqa
from . import reconstruct  # noqa
from . import weights  # noqa
from .fem import AssembledSystem, Mesh, assemble
from .integrate import NewtonSettings, TimeGrid, Trajectory, simulate, step
from .log import set_logging_callback  # noqa
from .lyapunov import LyapunovCertificate, certificate, design_weight
from .model import BeamParameters, IsotropicSection, diagonalize
from .network import BeamNetwork, NodeSpec, certify_network, star_certificate
from .profiling import Profiler  # noqa
from .reconstruct import FrameField, reconstruct_space, reconstruct_time
from .status import ConvergenceError, IgebError  # noqa
from .version import __version__  # noqa


__all__ = [
    "AssembledSystem",
    "BeamNetwork",
    "BeamParameters",
    "FrameField",
    "IsotropicSection",
    "LyapunovCertificate",
    "Mesh",
    "NewtonSettings",
    "NodeSpec",
    "TimeGrid",
    "Trajectory",
    "assemble",
    "certificate",
    "certify_network",
    "design_weight",
    "diagonalize",
    "reconstruct_space",
    "reconstruct_time",
    "simulate",
    "star_certificate",
    "step",
]

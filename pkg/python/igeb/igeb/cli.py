"""
Command line interface, running simulations and stability certificates from a
JSON configuration file.

.. code-block:: bash

    igeb simulate --config beam.json --out results/
    igeb reconstruct --out results/
    igeb certify --config beam.json --override feedback.mode=free
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import log
from .config import BadConfiguration, RunConfig
from .fem import assemble
from .integrate import Trajectory, simulate
from .lyapunov import certificate, fit_decay, lyapunov_series
from .model import build_A_Bbar, diagonalize, near_transparent_mu, transparent_K
from .network import certify_network
from .profiling import Profiler
from .reconstruct import reconstruct_space_series, reconstruct_time
from .series import (
    ENERGY_COLUMNS,
    FRAME_COLUMNS,
    STATE_COLUMNS,
    OutputBundle,
    nodal_from_rows,
    read_metadata,
    read_series,
    state_rows,
    write_metadata,
    write_series,
)
from .status import IGEB_CONFIG_ERROR, IgebError, exit_code
from .version import __version__


COMMANDS = ("simulate", "reconstruct", "certify", "certify-network", "info")


def _parser():
    parser = argparse.ArgumentParser(
        prog="igeb",
        description=(
            "simulation and Lyapunov stability certificates for geometrically "
            "exact beams"
        ),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="path to the JSON configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration value, using a dotted path for KEY",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="print debug messages"
    )
    parser.add_argument(
        "--profile", action="store_true", help="print timing information on stderr"
    )
    return parser


def load_config(path, overrides) -> RunConfig:
    if path is None:
        return RunConfig({}, overrides)
    return RunConfig.from_file(path, overrides)


def _bundle(config: RunConfig, out) -> OutputBundle:
    if out is None:
        out = config["output"]["directory"]
    return OutputBundle(out)


def _metadata(config: RunConfig, initial=None):
    metadata = {"version": __version__, "config": config.to_dict()}
    if initial is not None:
        metadata["initial"] = {"name": initial.name, **initial.description}
    return metadata


def cmd_simulate(config: RunConfig, out=None) -> OutputBundle:
    """Run a simulation and write the states and energy series"""
    config.validate()
    params = config.beam()
    K = config.feedback(params)
    mesh = config.mesh(params)
    grid = config.grid()
    initial = config.initial(params, mesh, K)
    weight = config.weight(params, K)

    bundle = _bundle(config, out)
    bundle.ensure_directory()

    trajectory = simulate(
        params,
        mesh,
        grid,
        K,
        initial.state,
        config.newton(),
        n_threads=config.n_threads(),
    )

    cert = certificate(
        params,
        K,
        config["certificate"]["rho"],
        weight,
        config["certificate"]["W"],
        config["certificate"]["grid_points"],
    )
    lyapunov = lyapunov_series(trajectory, cert)

    write_series(
        bundle.states,
        STATE_COLUMNS,
        state_rows(trajectory.times, mesh.nodes, trajectory.nodal_states()),
    )
    write_series(
        bundle.energy,
        ENERGY_COLUMNS,
        np.column_stack(
            [
                trajectory.times,
                trajectory.energies,
                lyapunov,
                np.concatenate([[0], trajectory.iterations]),
                np.concatenate([[0.0], trajectory.residuals]),
            ]
        ),
    )

    energies = trajectory.energies
    metadata = _metadata(config, initial)
    metadata["simulation"] = {
        "n_dofs": mesh.n_dofs,
        "newton_iterations": int(np.sum(trajectory.iterations)),
        "max_residual": float(np.max(trajectory.residuals, initial=0.0)),
        "initial_energy": float(energies[0]),
        "final_energy": float(energies[-1]),
    }
    if np.all(lyapunov > 0):
        beta, r2 = fit_decay(lyapunov, trajectory.times)
        metadata["simulation"]["decay"] = {"beta": beta, "r2": r2}
    metadata["certificate"] = cert.as_dict()
    write_metadata(bundle.metadata, metadata)

    log.info("cli", f"simulation results written to '{bundle.directory}'")
    return bundle


def cmd_reconstruct(config: RunConfig, out=None) -> OutputBundle:
    """Recover the centerline and frames from the states of a simulation"""
    bundle = _bundle(config, out)
    if not bundle.exists():
        raise IgebError(
            f"no simulation results in '{bundle.directory}'", IGEB_CONFIG_ERROR
        )

    metadata = read_metadata(bundle.metadata)
    params = config.beam()
    K = config.feedback(params)
    mesh = config.mesh(params)
    grid = config.grid()
    initial = config.initial(params, mesh, K)

    _, rows = read_series(bundle.states)
    times, nodes, nodal = nodal_from_rows(rows)
    if len(times) != grid.n_points or len(nodes) != mesh.n_nodes:
        raise BadConfiguration(
            "the simulation results do not match the discretization in the "
            "configuration"
        )

    system = assemble(params, mesh, K, n_threads=config.n_threads())
    trajectory = Trajectory(
        system=system, grid=grid, states=system.reduced_state(nodal)
    )

    method = config["output"]["reconstruct"]
    report = {"methods": method}
    frames_time = None
    frames_space = None
    if method in ["time", "both"]:
        frames_time = reconstruct_time(trajectory, initial.positions, initial.rotations)
        write_series(bundle.frames_time, FRAME_COLUMNS, frames_time.rows())

    if method in ["space", "both"]:
        frames_space = reconstruct_space_series(
            trajectory, initial.clamped_position, initial.clamped_rotation
        )
        write_series(bundle.frames_space, FRAME_COLUMNS, frames_space.rows())

    for name, frames in [("time", frames_time), ("space", frames_space)]:
        if frames is not None:
            norms = np.linalg.norm(frames.quaternions, axis=-1)
            report[f"{name}_max_quaternion_norm_error"] = float(
                np.max(np.abs(norms - 1.0))
            )

    if frames_time is not None and frames_space is not None:
        difference = np.abs(frames_time.positions - frames_space.positions)
        report["max_position_difference"] = float(np.max(difference))

    metadata["reconstruction"] = report
    write_metadata(bundle.metadata, metadata)
    return bundle


def _write_report(out, name, document):
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    write_metadata(os.path.join(out, name), document)


def cmd_certify(config: RunConfig, out=None):
    """Check the Lyapunov stability conditions for a single beam"""
    params = config.beam()
    K = config.feedback(params)
    weight = config.weight(params, K)
    section = config["certificate"]

    result = certificate(
        params, K, section["rho"], weight, section["W"], section["grid_points"]
    )
    print(result.report())
    _write_report(out, "certificate.json", result.as_dict())
    return result


def cmd_certify_network(config: RunConfig, out=None):
    """Check the nodal and interior stability conditions for a network"""
    network = config.network()
    result = certify_network(network, config["network"]["grid_points"])
    print(result.report())
    _write_report(out, "network-certificate.json", result.as_dict())
    return result


def cmd_info(config: RunConfig, out=None):
    """Summary of the coefficients of the beam model"""
    params = config.beam()
    diagonalization = diagonalize(params, 0.0)
    _, B = build_A_Bbar(params, 0.0)

    summary = {
        "length": params.length,
        "diagonal": params.is_diagonal,
        "speeds": diagonalization.speeds.tolist(),
        "norm_B": float(np.linalg.norm(B, 2)),
        "transparent_K": transparent_K(params, params.length).tolist(),
    }
    if params.is_diagonal:
        summary["mu"] = list(near_transparent_mu(params, params.length))

    print(f"{'length':<16} {params.length:.6g}")
    print(f"{'diagonal':<16} {params.is_diagonal}")
    speeds = " ".join(f"{s:.6g}" for s in summary["speeds"])
    print(f"{'speeds':<16} {speeds}")
    print(f"{'|B|':<16} {summary['norm_B']:.6g}")
    if "mu" in summary:
        print(f"{'mu_1, mu_2':<16} {summary['mu'][0]:.6g} {summary['mu'][1]:.6g}")
    print("transparent K")
    for row in summary["transparent_K"]:
        print("    " + " ".join(f"{value:12.6g}" for value in row))

    _write_report(out, "info.json", summary)
    return summary


def _run(args) -> int:
    config = load_config(args.config, args.override)

    if args.command == "simulate":
        cmd_simulate(config, args.out)
    elif args.command == "reconstruct":
        if args.config is None:
            # use the configuration stored alongside the results
            bundle = OutputBundle(args.out or config["output"]["directory"])
            metadata = read_metadata(bundle.metadata)
            config = RunConfig(metadata["config"], args.override)
        cmd_reconstruct(config, args.out)
    elif args.command == "certify":
        if not cmd_certify(config, args.out).verdict:
            return 4
    elif args.command == "certify-network":
        if not cmd_certify_network(config, args.out).verdict:
            return 4
    else:
        cmd_info(config, args.out)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )

    try:
        if args.profile:
            with Profiler() as profiler:
                status = _run(args)
            print(profiler.as_short_table(), file=sys.stderr)
        else:
            status = _run(args)
    except IgebError as e:
        log.error("cli", e.message)
        return exit_code(e)

    return status


if __name__ == "__main__":
    sys.exit(main())

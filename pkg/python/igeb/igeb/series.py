"""
Reading and writing of the files produced by simulations: comma-separated
series with a single header row, and a JSON metadata file. Floats are written
with the shortest representation that reads back to the same value.
"""

import csv
import json
import os

import numpy as np

from .status import IGEB_CONFIG_ERROR, IGEB_INVALID_PARAMETER, IgebError


STATE_COLUMNS = (
    ["t", "x"] + [f"v{i}" for i in range(1, 7)] + [f"z{i}" for i in range(1, 7)]
)
ENERGY_COLUMNS = ["t", "energy", "lyapunov", "newton_iterations", "residual"]
FRAME_COLUMNS = ["t", "x", "p1", "p2", "p3", "q0", "q1", "q2", "q3"]


def _format(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_series(path, columns, rows):
    """
    Write ``rows`` (a 2-dimensional array) to ``path`` as comma-separated
    values, with ``columns`` as header row.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != len(columns):
        raise IgebError(
            f"expected rows with {len(columns)} columns, got shape {rows.shape}",
            IGEB_INVALID_PARAMETER,
        )

    with open(path, "w", newline="") as fd:
        writer = csv.writer(fd, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(value) for value in row])


def read_series(path):
    """
    Read a file written by :py:func:`write_series`.

    :returns: the tuple ``(columns, rows)``
    """
    if not os.path.exists(path):
        raise IgebError(f"missing series file '{path}'", IGEB_CONFIG_ERROR)

    with open(path, newline="") as fd:
        reader = csv.reader(fd)
        try:
            columns = next(reader)
        except StopIteration:
            raise IgebError(f"empty series file '{path}'", IGEB_CONFIG_ERROR)
        rows = [[float(value) for value in row] for row in reader if row]

    if len(rows) == 0:
        return columns, np.zeros((0, len(columns)))
    return columns, np.array(rows, dtype=np.float64)


def state_rows(times, nodes, nodal_states) -> np.ndarray:
    """
    Long format of nodal states with shape ``(n_times, n_nodes, 12)``: one row
    ``(t, x, v1..v6, z1..z6)`` per instant and node, ordered by time then node.
    """
    times = np.asarray(times, dtype=np.float64)
    nodes = np.asarray(nodes, dtype=np.float64)
    n_times, n_nodes = len(times), len(nodes)
    return np.hstack(
        [
            np.repeat(times, n_nodes)[:, None],
            np.tile(nodes, n_times)[:, None],
            np.asarray(nodal_states).reshape(n_times * n_nodes, 12),
        ]
    )


def nodal_from_rows(rows):
    """
    Inverse of :py:func:`state_rows`.

    :returns: the tuple ``(times, nodes, nodal_states)``
    """
    rows = np.asarray(rows, dtype=np.float64)
    times = np.unique(rows[:, 0])
    n_times = len(times)
    if n_times == 0 or len(rows) % n_times != 0:
        raise IgebError("inconsistent state series", IGEB_CONFIG_ERROR)

    n_nodes = len(rows) // n_times
    nodes = rows[:n_nodes, 1].copy()
    nodal = rows[:, 2:].reshape(n_times, n_nodes, 12)
    return times, nodes, nodal


def write_metadata(path, metadata):
    with open(path, "w") as fd:
        json.dump(metadata, fd, indent=2, sort_keys=True)
        fd.write("\n")


def read_metadata(path):
    if not os.path.exists(path):
        raise IgebError(f"missing metadata file '{path}'", IGEB_CONFIG_ERROR)

    with open(path) as fd:
        return json.load(fd)


class OutputBundle:
    """Set of files written by a simulation, all stored in ``directory``"""

    def __init__(self, directory):
        self.directory = str(directory)

    def ensure_directory(self):
        os.makedirs(self.directory, exist_ok=True)

    @property
    def states(self) -> str:
        return os.path.join(self.directory, "states.csv")

    @property
    def energy(self) -> str:
        return os.path.join(self.directory, "energy.csv")

    @property
    def frames_time(self) -> str:
        return os.path.join(self.directory, "frames_time.csv")

    @property
    def frames_space(self) -> str:
        return os.path.join(self.directory, "frames_space.csv")

    @property
    def metadata(self) -> str:
        return os.path.join(self.directory, "metadata.json")

    def exists(self) -> bool:
        return os.path.exists(self.states) and os.path.exists(self.metadata)

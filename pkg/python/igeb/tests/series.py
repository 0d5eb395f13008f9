import numpy as np
import pytest

from igeb import IgebError
from igeb.series import (
    STATE_COLUMNS,
    OutputBundle,
    nodal_from_rows,
    read_metadata,
    read_series,
    state_rows,
    write_metadata,
    write_series,
)
from igeb.status import IGEB_CONFIG_ERROR


def test_floats_are_preserved(tmp_path):
    rng = np.random.default_rng(7)
    rows = rng.normal(size=(10, 3)) * 10.0 ** rng.integers(-12, 12, size=(10, 3))
    rows[0] = [0.1, 1 / 3, np.pi]

    path = str(tmp_path / "series.csv")
    write_series(path, ["a", "b", "c"], rows)

    columns, values = read_series(path)
    assert columns == ["a", "b", "c"]
    np.testing.assert_array_equal(values, rows)

    with open(path) as fd:
        assert fd.readline() == "a,b,c\n"

    with pytest.raises(IgebError, match="expected rows with 2 columns"):
        write_series(path, ["a", "b"], rows)


def test_state_rows():
    times = np.array([0.0, 0.5])
    nodes = np.array([0.0, 0.25, 0.5])
    nodal = np.arange(2 * 3 * 12, dtype=np.float64).reshape(2, 3, 12)

    rows = state_rows(times, nodes, nodal)
    assert rows.shape == (6, len(STATE_COLUMNS))
    np.testing.assert_equal(rows[:, 0], [0.0, 0.0, 0.0, 0.5, 0.5, 0.5])
    np.testing.assert_equal(rows[:, 1], [0.0, 0.25, 0.5] * 2)
    np.testing.assert_equal(rows[4, 2:], nodal[1, 1])

    new_times, new_nodes, new_nodal = nodal_from_rows(rows)
    np.testing.assert_equal(new_times, times)
    np.testing.assert_equal(new_nodes, nodes)
    np.testing.assert_equal(new_nodal, nodal)

    with pytest.raises(IgebError, match="inconsistent state series"):
        nodal_from_rows(rows[:-1])


def test_metadata(tmp_path):
    bundle = OutputBundle(tmp_path / "out")
    assert not bundle.exists()
    bundle.ensure_directory()

    metadata = {"version": "0.1.0", "values": [1.5, 2.5], "nested": {"b": 1, "a": 2}}
    write_metadata(bundle.metadata, metadata)
    assert read_metadata(bundle.metadata) == metadata

    with open(bundle.metadata) as fd:
        text = fd.read()
    assert text.index('"a"') < text.index('"b"')


def test_missing_files(tmp_path):
    with pytest.raises(IgebError, match="missing series file") as error:
        read_series(str(tmp_path / "states.csv"))
    assert error.value.status == IGEB_CONFIG_ERROR

    with pytest.raises(IgebError, match="missing metadata file"):
        read_metadata(str(tmp_path / "metadata.json"))

import json
import os

import numpy as np
import pytest

from igeb.cli import main
from igeb.series import ENERGY_COLUMNS, FRAME_COLUMNS, STATE_COLUMNS, read_series


SMALL_RUN = [
    "--override",
    "discretization.n_elements=2",
    "--override",
    "discretization.n_times=5",
    "--override",
    "discretization.horizon=0.01",
    "--override",
    "certificate.grid_points=50",
]


def test_info(tmp_path, capsys):
    assert main(["info", "--out", str(tmp_path)]) == 0

    output = capsys.readouterr().out
    assert "speeds" in output
    assert "100" in output

    with open(tmp_path / "info.json") as fd:
        summary = json.load(fd)
    np.testing.assert_allclose(
        summary["speeds"], [100, 100, 100, 5, np.sqrt(50), np.sqrt(50)]
    )
    assert summary["mu"][0] == pytest.approx(100.0)


def test_certify(tmp_path, capsys):
    status = main(["certify", "--out", str(tmp_path), *SMALL_RUN[-2:]])
    assert status == 0
    assert capsys.readouterr().out.startswith("verdict: pass")

    with open(tmp_path / "certificate.json") as fd:
        assert json.load(fd)["verdict"] is True

    status = main(["certify", *SMALL_RUN[-2:], "--override", "feedback.mode=free"])
    assert status == 4
    assert "(iv) mu negative semi-definite: FAIL" in capsys.readouterr().out


def test_certify_network(tmp_path, capsys):
    status = main(
        [
            "certify-network",
            "--out",
            str(tmp_path),
            "--override",
            "network.grid_points=50",
        ]
    )
    assert status == 0
    assert capsys.readouterr().out.startswith("verdict: pass")
    assert os.path.exists(tmp_path / "network-certificate.json")

    status = main(
        [
            "certify-network",
            "--override",
            "network.grid_points=50",
            "--override",
            'network.nodes=["clamped", "controlled", "controlled"]',
        ]
    )
    assert status == 4


def test_simulate_and_reconstruct(tmp_path):
    out = str(tmp_path / "run")
    assert main(["simulate", "--out", out, *SMALL_RUN]) == 0

    columns, states = read_series(os.path.join(out, "states.csv"))
    assert columns == STATE_COLUMNS
    assert states.shape == (5 * 5, 14)

    columns, energy = read_series(os.path.join(out, "energy.csv"))
    assert columns == ENERGY_COLUMNS
    assert energy.shape == (5, 5)
    assert np.all(np.diff(energy[:, 1]) <= 1e-8 * energy[0, 1])

    with open(os.path.join(out, "metadata.json")) as fd:
        metadata = json.load(fd)
    assert metadata["initial"]["name"] == "helix_zero_velocity"
    assert metadata["config"]["discretization"]["n_times"] == 5
    assert metadata["certificate"]["verdict"] is True
    assert "decay" in metadata["simulation"]

    # the configuration is read back from the metadata
    assert main(["reconstruct", "--out", out]) == 0

    columns, frames = read_series(os.path.join(out, "frames_time.csv"))
    assert columns == FRAME_COLUMNS
    assert frames.shape == (5 * 5, 9)
    assert os.path.exists(os.path.join(out, "frames_space.csv"))

    with open(os.path.join(out, "metadata.json")) as fd:
        reconstruction = json.load(fd)["reconstruction"]
    assert reconstruction["methods"] == "both"
    assert reconstruction["time_max_quaternion_norm_error"] < 1e-10
    assert "max_position_difference" in reconstruction


def test_errors(tmp_path, capsys):
    assert main(["certify", "--config", str(tmp_path / "missing.json")]) == 2

    path = tmp_path / "config.json"
    path.write_text(json.dumps({"discretization": {"n_elements": -1}}))
    assert main(["simulate", "--config", str(path)]) == 2

    assert main(["reconstruct", "--out", str(tmp_path / "nothing")]) == 2


def test_profile(capsys):
    assert main(["certify", "--profile", *SMALL_RUN[-2:]]) == 0
    assert "certificate" in capsys.readouterr().err

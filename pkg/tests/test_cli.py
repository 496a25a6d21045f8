import json

import pytest

from talbot import __version__
from talbot.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main
from talbot.services.scaling import init_packet
from talbot.services.snapshots import write_snapshot


@pytest.fixture
def scenario_file(tmp_path, mini_scenario_text):
    path = tmp_path / "mini.toml"
    path.write_text(mini_scenario_text)
    return path


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_validate_prints_resolved_setup(scenario_file, capsys):
    assert main(["validate", str(scenario_file)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["name"] == "mini"
    assert summary["lattice"] == "165 x 305"
    assert summary["runnable"] is True


def test_validate_rejects_broken_scenario(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text('name = "broken"\n')
    assert main(["validate", str(path)]) == EXIT_INVALID


def test_run_refuses_unwritable_output(scenario_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", str(scenario_file), "--output", str(blocker / "run"), "--no-ledger"]) == EXIT_INVALID


def test_inspect_snapshot(tmp_path, square_grid, slow_packet, frame, capsys):
    path = tmp_path / "p.qsnap"
    write_snapshot(path, init_packet(slow_packet, square_grid, 0.01), frame)
    assert main(["inspect", str(path)]) == EXIT_OK
    header = json.loads(capsys.readouterr().out)
    assert (header["nx"], header["ny"]) == square_grid.shape
    garbage = tmp_path / "garbage.qsnap"
    garbage.write_bytes(b"not a snapshot")
    assert main(["inspect", str(garbage)]) == EXIT_INVALID


def test_diff_exit_codes(tmp_path):
    first = {"config_hash": "h", "artifacts": [{"path": "a.csv", "sha256": "1"}]}
    second = {"config_hash": "h", "artifacts": [{"path": "a.csv", "sha256": "2"}]}
    paths = []
    for i, payload in enumerate((first, first, second)):
        path = tmp_path / f"m{i}.json"
        path.write_text(json.dumps(payload))
        paths.append(str(path))
    assert main(["diff", paths[0], paths[1]]) == EXIT_OK
    assert main(["diff", paths[0], paths[2]]) == EXIT_FAILED

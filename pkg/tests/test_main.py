import csv
import io
import json

import pytest

from src.constants.scenarios import REFERENCE_SCENARIOS
from src.main import (
    EXIT_BAD_INPUT,
    EXIT_OK,
    EXIT_STRICT_FAILURE,
    build_parser,
    main,
)
from src.services.experiments import MODE_TABLE_COLUMNS


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    return mocker.patch("src.main.setup_logging")


def write_config(tmp_path, data, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


@pytest.fixture
def near_path(tmp_path):
    return write_config(tmp_path, REFERENCE_SCENARIOS["relay_near_primary"])


def test_parser_requires_config():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["stats"])


def test_parser_rejects_non_positive_slots():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "--config", "x.json", "--slots", "0"])


def test_stats(near_path, capsys, quiet_logging):
    assert main(["stats", "--config", near_path]) == EXIT_OK
    output = capsys.readouterr().out
    assert "pip = true" in output
    assert "alpha_lattice = {0, 1/2, 1}" in output
    quiet_logging.assert_called_once()


def test_modes_csv(near_path, capsys):
    assert main(["modes", "--config", near_path, "--scheme", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ",".join(MODE_TABLE_COLUMNS)
    assert len(lines) == 4
    assert lines[2].startswith("1,1,1/2,")


def test_modes_to_file(near_path, tmp_path, capsys):
    out = tmp_path / "reports" / "modes.csv"
    assert main(["modes", "--config", near_path, "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert len(out.read_text(encoding="utf-8").splitlines()) == 7


def test_missing_field_is_bad_input(tmp_path):
    data = {key: value for key, value in REFERENCE_SCENARIOS["relay_near_primary"].items() if key != "geometry"}
    assert main(["stats", "--config", write_config(tmp_path, data)]) == EXIT_BAD_INPUT


def test_missing_file_is_bad_input(tmp_path):
    assert main(["stats", "--config", str(tmp_path / "absent.json")]) == EXIT_BAD_INPUT


def test_unknown_sweep_parameter_is_bad_input(tmp_path):
    data = dict(REFERENCE_SCENARIOS["relay_near_primary"], sweep={"parameter": "bandwidth", "values": [1]})
    assert main(["throughput-sweep", "--config", write_config(tmp_path, data)]) == EXIT_BAD_INPUT


def test_all_zero_rates_are_bad_input(tmp_path):
    data = dict(REFERENCE_SCENARIOS["relay_near_primary"], rates={"r1": [0], "r2": [0]})
    assert main(["modes", "--config", write_config(tmp_path, data)]) == EXIT_BAD_INPUT


def test_unequal_ladders_with_combining_are_bad_input(tmp_path):
    data = dict(REFERENCE_SCENARIOS["relay_near_primary"], rates={"r1": [0, 1], "r2": [0, 2]})
    assert main(["modes", "--config", write_config(tmp_path, data), "--scheme", "2"]) == EXIT_BAD_INPUT


def test_throughput_sweep(tmp_path, capsys):
    data = dict(REFERENCE_SCENARIOS["relay_near_primary"], sweep={"parameter": "d2p", "values": [1.5, 3.0]})
    assert main(["throughput-sweep", "--config", write_config(tmp_path, data), "--scheme", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("d2p,1.5,1,case1,")
    assert lines[2].startswith("d2p,3,1,case3b,")


def test_simulate_is_reproducible(near_path, tmp_path, capsys):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    for out in (first, second):
        args = ["simulate", "--config", near_path, "--slots", "20000", "--seed", "11", "--out", str(out)]
        assert main(args) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    summary = capsys.readouterr().out
    assert "scheme 1 replication 0" in summary
    assert "scheme 2 replication 0" in summary


def test_negative_control_fails_strict(near_path, capsys):
    args = ["simulate", "--config", near_path, "--scheme", "1", "--slots", "50000", "--negative-control"]
    assert main(args) == EXIT_OK
    (row,) = csv.DictReader(io.StringIO(capsys.readouterr().out))
    assert row["negative_control"] == "true"
    assert row["stable"] == "false"
    assert float(row["tau2_hat"]) == 0.0
    assert main([*args, "--strict"]) == EXIT_STRICT_FAILURE


def test_validate_reports_checks(near_path, capsys):
    assert main(["validate", "--config", near_path, "--scheme", "2", "--slots", "20000"]) == EXIT_OK
    output = capsys.readouterr().out
    assert "conformance_exact_pip" in output
    assert "normalization" in output

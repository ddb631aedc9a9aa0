"""Command-line entry point: exit codes and the files each command writes."""
import json

import pytest

from config import CONFIG_DIR, config_hash, load_run_config, parse_run_config
from data.exports import load_taps
from run import EXIT_CALIBRATION, EXIT_CONFIG, EXIT_OK, EXIT_SIMULATION, main


def _write_config(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_missing_config_file(tmp_path, capsys):
    code = main(["--config", str(tmp_path / "nope.conf"), "write-config"])
    assert code == EXIT_CONFIG == 2
    assert "Configuration error" in capsys.readouterr().err


def test_write_config_round_trips(capsys):
    assert main(["--seed", "9", "write-config"]) == EXIT_OK
    cfg = parse_run_config(capsys.readouterr().out)
    assert cfg["run"]["seed"] == 9


def test_unknown_key_in_file(tmp_path):
    path = _write_config(tmp_path, "[modulator]\nb3 = 0.5\n")
    assert main(["--config", path, "write-config"]) == EXIT_CONFIG


def test_adc_amplitude_zero_is_config_error(tmp_path):
    assert main(["--quiet", "--out", str(tmp_path), "adc-test", "--amplitude", "0"]) == EXIT_CONFIG


def test_cutoff_above_nyquist_is_config_error(tmp_path):
    path = _write_config(tmp_path, "[decimation]\ncutoff = 1500\n")
    assert main(["--quiet", "--config", path, "--out", str(tmp_path), "filter-design"]) == EXIT_CONFIG


def test_filter_design_writes_artifacts(tmp_path):
    assert main(["--quiet", "--out", str(tmp_path), "filter-design"]) == EXIT_OK
    taps = load_taps(tmp_path / "fir_taps.txt")
    assert len(taps) == 32 and sum(taps) == 32768
    assert (tmp_path / "filter_metrics.txt").is_file()
    assert (tmp_path / "filter_metrics.json").is_file()
    lines = (tmp_path / "filter_response.csv").read_text().splitlines()
    assert lines[0].startswith("# config=")
    assert lines[1] == "freq_hz,cic_db,fir_db,composite_db"
    dc_row = lines[2].split(",")
    assert float(dc_row[0]) == 0.0
    assert abs(float(dc_row[3])) <= 0.01


def test_flat_scene_exits_with_calibration_code(tmp_path):
    path = _write_config(tmp_path, (
        "[scene]\nsystolic = 80.01\ndiastolic = 80.0\nduration = 4.0\n"
        "[pipeline]\nmin_valid_seconds = 0.5\n"
    ))
    assert main(["--quiet", "--config", path, "--out", str(tmp_path), "measure"]) == EXIT_CALIBRATION


def test_membrane_contact_exits_with_simulation_code(tmp_path, capsys):
    path = _write_config(tmp_path, "[scene]\nduration = 4.0\ncontact_bias = 1e6\n")
    assert main(["--quiet", "--config", path, "--out", str(tmp_path), "scan"]) == EXIT_SIMULATION
    assert "element" in capsys.readouterr().err


@pytest.mark.slow
def test_measure_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["--quiet", "--seed", "3", "--out", str(first), "measure"]) == EXIT_OK
    assert main(["--quiet", "--seed", "3", "--out", str(second), "measure"]) == EXIT_OK
    assert (first / "waveform.csv").read_bytes() == (second / "waveform.csv").read_bytes()
    assert (first / "measurement.json").read_bytes() == (second / "measurement.json").read_bytes()


@pytest.mark.slow
def test_bundled_config_recovers_cuff_values(tmp_path):
    config = str(CONFIG_DIR / "wrist_120_80.conf")
    assert main(["--quiet", "--config", config, "--out", str(tmp_path), "measure"]) == EXIT_OK
    metrics = json.loads((tmp_path / "measurement.json").read_text())
    assert metrics["selected_element"] == 1
    assert abs(metrics["mean_systolic_mmhg"] - 120.0) <= 2.0
    assert abs(metrics["mean_diastolic_mmhg"] - 80.0) <= 2.0
    assert metrics["config_hash"] == config_hash(load_run_config(config))

import pytest

from config import (
    CONFIG_DIR, DEFAULTS, config_hash, default_run_config, emit_run_config, load_run_config,
    parse_run_config,
)
from errors import ConfigError
from pipeline.builders import chain_from, modulator_from, schedule_from


def test_emit_then_parse_is_identity():
    cfg = default_run_config()
    cfg["scene"]["heart_rate"] = 72.5
    cfg["mux"]["element_order"] = [3, 1]
    cfg["pipeline"]["reacquire"] = False
    assert parse_run_config(emit_run_config(cfg)) == cfg


def test_defaults_are_not_shared():
    cfg = default_run_config()
    cfg["scene"]["systolic"] = 200.0
    assert DEFAULTS["scene"]["systolic"] == 120.0


def test_overrides_and_comments():
    cfg = parse_run_config(
        "# bench setup\n"
        "[modulator]\n"
        "b1 = 0.25   # halved input gain\n"
        "input_mode = voltage\n"
        "[mux]\n"
        "element_order = 2, 0\n"
    )
    assert cfg["modulator"]["b1"] == 0.25
    assert cfg["modulator"]["input_mode"] == "voltage"
    assert cfg["mux"]["element_order"] == [2, 0]
    assert cfg["scene"] == DEFAULTS["scene"]


@pytest.mark.parametrize("text, key_path", [
    ("[nonsense]\nx = 1\n", "nonsense"),
    ("[scene]\nheartrate = 60\n", "scene.heartrate"),
    ("[scene]\nheart_rate = fast\n", "scene.heart_rate"),
    ("[mux]\ndwell = 1.5\n", "mux.dwell"),
    ("[pipeline]\nreacquire = maybe\n", "pipeline.reacquire"),
])
def test_bad_entries_name_their_key(text, key_path):
    with pytest.raises(ConfigError) as info:
        parse_run_config(text)
    assert info.value.key_path == key_path
    assert key_path in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.conf")


def test_hash_tracks_content():
    a = default_run_config()
    b = default_run_config()
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 16
    b["run"]["seed"] = a["run"]["seed"] + 1
    assert config_hash(a) != config_hash(b)


def test_bundled_config_loads():
    cfg = load_run_config(CONFIG_DIR / "wrist_120_80.conf")
    assert cfg["scene"]["vessel_position"] == [75e-6, -75e-6]
    assert cfg["pipeline"]["cuff_systolic"] == 120.0
    assert cfg["run"]["output_dir"] == "output/wrist_120_80"


def test_invalid_values_surface_as_config_errors():
    cfg = default_run_config()
    cfg["modulator"]["vref"] = -1.0
    with pytest.raises(ConfigError) as info:
        modulator_from(cfg)
    assert info.value.key_path == "modulator"

    cfg = default_run_config()
    cfg["mux"]["blanking"] = cfg["mux"]["dwell"]
    with pytest.raises(ConfigError):
        schedule_from(cfg)


def test_rates_must_divide_modulator_clock():
    cfg = default_run_config()
    cfg["modulator"]["sample_rate"] = 100001
    with pytest.raises(ConfigError) as info:
        chain_from(cfg)
    assert info.value.key_path == "modulator.sample_rate"


def test_hash_ignores_output_directory():
    a = default_run_config()
    b = default_run_config()
    b["run"]["output_dir"] = "somewhere/else"
    assert config_hash(a) == config_hash(b)

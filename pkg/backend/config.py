"""
Tactile Blood-Pressure Simulator - Configuration Settings

Defaults for every stage of the chain, grouped by section. A run is
described by a RunConfig (section -> key -> value) that starts from these
dictionaries and can be overridden from a sectioned key=value text file:

    # comment
    [modulator]
    b1 = 0.5
    element_order = 0, 1, 2, 3
"""
import configparser
import copy
import hashlib
import os
from pathlib import Path
from typing import Any, Dict

from errors import ConfigError

# Base paths
BASE_DIR = Path(__file__).parent
CONFIG_DIR = BASE_DIR / "configs"
OUTPUT_DIR = Path(os.getenv("BPSIM_OUTPUT_DIR", "output"))

# Physical constants
EPSILON_0 = 8.8541878128e-12   # F/m
MMHG_TO_PA = 133.322

# Membrane element (100 um x 3 um CMOS stack). gap0 and the elastic
# constants are not published; uncalibrated placeholders.
MEMBRANE = {
    "side_length": 100e-6,
    "thickness": 3e-6,
    "gap0": 600e-9,
    "electrode_coverage": 1.0,
    "youngs_modulus": 70e9,
    "poisson_ratio": 0.25,
    "contact_fraction": 0.9,
    "quadrature_points": 64,
}

# Synthetic wrist scene on the 2x2 array. Default vessel sits on element 1.
SCENE = {
    "heart_rate": 60.0,
    "systolic": 120.0,
    "diastolic": 80.0,
    "duration": 10.0,
    "sample_rate": 1000.0,
    "morphology_seed": 0,
    "vessel_position": [75e-6, -75e-6],
    "coupling_width": 150e-6,
    "contact_bias": 1333.22,
    "backpressure": 8000.0,
    "rows": 2,
    "cols": 2,
    "pitch": 150e-6,
}

# Second-order CIFB modulator. cref = 0 means "use the reference membrane C0".
# c_full_scale is the capacitance difference mapped to |x| = 1.
MODULATOR = {
    "sample_rate": 128000,
    "b1": 0.5,
    "a1": 0.5,
    "b2": 0.5,
    "a2": 0.5,
    "vref": 2.5,
    "cref": 0.0,
    "c_full_scale": 0.8e-15,
    "input_mode": "capacitive",
    "noise_rms": 0.0,
    "saturation": 4.0,
}

# Analog multiplexer round robin
MUX = {
    "element_order": [0, 1, 2, 3],
    "dwell": 8192,
    "blanking": 256,
}

# Two-stage decimation: SINC3 by 64, 32-tap FIR by 2
DECIMATION = {
    "cic_order": 3,
    "cic_rate": 64,
    "differential_delay": 1,
    "fir_taps": 32,  # fixed by the hardware; design_fir rejects other counts
    "fir_rate": 2,
    "cutoff": 500.0,
    "passband_edge": 400.0,
    "passband_ripple_db": 0.5,
    "image_rejection_db": 60.0,
    "image_halfwidth": 100.0,
    "output_bits": 12,
    "accumulator_bits": 40,
}

# Converter characterization (operating point of the published spectrum)
ANALYSIS = {
    "fft_length": 8192,
    "window": "rectangular",
    "harmonic_count": 5,
    "skirt_bins": 1,
    "amplitude_fraction": 0.91,
    "test_frequency": 15.625,
    "settle_samples": 64,
}

# Measurement / calibration
PIPELINE = {
    "cuff_systolic": 120.0,
    "cuff_diastolic": 80.0,
    "refractory": 0.2,
    "prominence_fraction": 0.25,
    "percentile_low": 5.0,
    "percentile_high": 95.0,
    "min_valid_seconds": 1.0,
    "min_pulse_codes": 8.0,
    "peak_fit_halfwidth": 0.02,
    "reacquire": True,
    "calibration_seconds": 0.0,  # 0 = anchors from the whole run
}

RUN = {
    "seed": int(os.getenv("BPSIM_SEED", "1")),
    "output_dir": str(OUTPUT_DIR),
}

DEFAULTS = {
    "membrane": MEMBRANE,
    "scene": SCENE,
    "modulator": MODULATOR,
    "mux": MUX,
    "decimation": DECIMATION,
    "analysis": ANALYSIS,
    "pipeline": PIPELINE,
    "run": RUN,
}

# API Settings
API_HOST = os.getenv("API_HOST", "0.0.0.0")
API_PORT = int(os.getenv("API_PORT", "5000"))
API_DEBUG = os.getenv("API_DEBUG", "False").lower() == "true"

RunConfig = Dict[str, Dict[str, Any]]


def default_run_config() -> RunConfig:
    """Fresh copy of all defaults."""
    return copy.deepcopy(DEFAULTS)


def _coerce(raw: str, default: Any, key_path: str) -> Any:
    """Convert raw text to the type of the documented default."""
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            items = [item.strip() for item in raw.split(",") if item.strip()]
            item_type = type(default[0]) if default else float
            return [item_type(item) for item in items]
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {type(default).__name__}", key_path)


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(item) for item in value)
    return str(value)


def parse_run_config(text: str, base: RunConfig = None) -> RunConfig:
    """
    Parse sectioned key=value text on top of the defaults.

    Unknown sections and keys are rejected with their key path.
    """
    cfg = copy.deepcopy(base) if base is not None else default_run_config()

    parser = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, delimiters=("=",),
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config text: {e}")

    for section in parser.sections():
        if section not in cfg:
            raise ConfigError("unknown section", section)
        for key, raw in parser.items(section):
            key_path = f"{section}.{key}"
            if key not in cfg[section]:
                raise ConfigError("unknown key", key_path)
            cfg[section][key] = _coerce(raw, DEFAULTS[section][key], key_path)

    return cfg


def load_run_config(path) -> RunConfig:
    """Read a config file; missing files are a ConfigError."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_run_config(path.read_text(encoding="utf-8"))


def emit_run_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_run_config(emit_run_config(c)) == c."""
    lines = []
    for section, defaults in DEFAULTS.items():
        lines.append(f"[{section}]")
        for key in defaults:
            lines.append(f"{key} = {_format(cfg[section][key])}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: RunConfig) -> str:
    """Short SHA-256 of the canonical text, stamped on every output file.

    The output directory is not part of the run, so it is left out.
    """
    stamped = copy.deepcopy(cfg)
    stamped["run"]["output_dir"] = ""
    return hashlib.sha256(emit_run_config(stamped).encode("utf-8")).hexdigest()[:16]

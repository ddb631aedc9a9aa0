"""
Sigma-Delta Modulator Module
Behavioral model of the single-bit, second-order switched-capacitor
modulator (cascade of two delaying integrators with distributed feedback).

Difference equations, per modulator clock:
    y     = sign(int2)                      (tie at 0 -> +1)
    int1' = int1 + b1 * x - a1 * y
    int2' = int2 + b2 * int1 - a2 * y

Inputs are normalized so |x| = 1 is modulator full scale:
- capacitive: x = (cs - cref) / c_full_scale
- voltage:    x = v_diff / vref
"""
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import MODULATOR, RUN
from errors import InvalidSpec, ModeMismatch

INPUT_MODES = ("capacitive", "voltage")

# Input-referred noise (V rms) that brings the default chain's SNDR down
# from its quantization-limited value towards the measured 72-75 dB range
FIG7_NOISE_RMS = 1.0e-3


@dataclass(frozen=True)
class ModulatorConfig:
    sample_rate: int = MODULATOR["sample_rate"]
    b1: float = MODULATOR["b1"]
    a1: float = MODULATOR["a1"]
    b2: float = MODULATOR["b2"]
    a2: float = MODULATOR["a2"]
    vref: float = MODULATOR["vref"]
    cref: float = MODULATOR["cref"]
    c_full_scale: float = MODULATOR["c_full_scale"]
    input_mode: str = MODULATOR["input_mode"]
    noise_rms: float = MODULATOR["noise_rms"]
    saturation: float = MODULATOR["saturation"]
    seed: int = RUN["seed"]

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidSpec("sample_rate must be positive")
        if min(self.b1, self.a1, self.b2, self.a2) <= 0:
            raise InvalidSpec("loop coefficients must be positive")
        # Second-order loop: the feedback into int2 must dominate the
        # first-stage path or the quantizer never regains control
        if self.a2 * 2 < self.a1 * self.b2:
            raise InvalidSpec("unstable coefficient set: need 2*a2 >= a1*b2")
        if self.vref <= 0:
            raise InvalidSpec("vref must be positive")
        if self.cref < 0 or self.c_full_scale <= 0:
            raise InvalidSpec("cref must be >= 0 and c_full_scale > 0")
        if self.input_mode not in INPUT_MODES:
            raise InvalidSpec(f"input_mode must be one of {INPUT_MODES}")
        if self.noise_rms < 0:
            raise InvalidSpec("noise_rms must be non-negative")
        if self.saturation <= 0:
            raise InvalidSpec("saturation must be positive")


@dataclass(frozen=True)
class ModulatorState:
    int1: float = 0.0
    int2: float = 0.0
    last_bit: int = 1


@dataclass(frozen=True, eq=False)
class BitStream:
    """Modulator output: int8 array of +1/-1 at sample_rate."""
    bits: np.ndarray
    sample_rate: int
    start_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.int8))

    def __len__(self):
        return int(self.bits.size)

    @property
    def duration(self) -> float:
        return self.bits.size / self.sample_rate

    def mean(self) -> float:
        return float(self.bits.mean()) if self.bits.size else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": np.arange(self.bits.size), "bit": self.bits.astype(int)})


def charge_input(cs, config: ModulatorConfig, cref: float = None):
    """
    Normalized first-stage input for a sensor capacitance (F).

    Formula: x = (cs - cref) / c_full_scale
    cref falls back to config.cref; a config.cref of 0 means the caller
    must supply the reference structure's C0.
    """
    if config.input_mode != "capacitive":
        raise ModeMismatch(f"charge_input needs capacitive mode, modulator is in {config.input_mode} mode")
    if cref is None:
        cref = config.cref
    # vref * (cs - cref) / (vref * c_full_scale): vref cancels once normalized
    return (np.asarray(cs, dtype=float) - cref) / config.c_full_scale


def voltage_input(v_diff, config: ModulatorConfig):
    """Normalized input of the differential voltage test interface."""
    if config.input_mode != "voltage":
        raise ModeMismatch(f"voltage_input needs voltage mode, modulator is in {config.input_mode} mode")
    return np.asarray(v_diff, dtype=float) / config.vref


def input_noise(n: int, config: ModulatorConfig) -> np.ndarray:
    """White input-referred noise in normalized units, seeded from config.seed."""
    if config.noise_rms == 0 or n == 0:
        return np.zeros(n)
    rng = np.random.default_rng(config.seed)
    return rng.normal(0.0, config.noise_rms / config.vref, n)


def step(state: ModulatorState, x: float, config: ModulatorConfig) -> Tuple[ModulatorState, int]:
    """One modulator clock. Integrators clamp at +/- saturation."""
    y = 1 if state.int2 >= 0 else -1
    limit = config.saturation
    int1 = state.int1 + config.b1 * x - config.a1 * y
    int1 = min(max(int1, -limit), limit)
    int2 = state.int2 + config.b2 * int1 - config.a2 * y
    int2 = min(max(int2, -limit), limit)
    return ModulatorState(int1=int1, int2=int2, last_bit=y), y


def run_loop(xs: np.ndarray, config: ModulatorConfig, state: ModulatorState = None):
    """
    Noise-free modulator loop over a normalized input series.

    Same arithmetic as step(), with the state held in locals.
    Returns (bits int8 array, final state).
    """
    state = state or ModulatorState()
    b1, a1, b2, a2 = config.b1, config.a1, config.b2, config.a2
    hi = config.saturation
    lo = -hi
    int1, int2, y = state.int1, state.int2, state.last_bit

    out = np.empty(len(xs), dtype=np.int8)
    for i, x in enumerate(np.asarray(xs, dtype=float).tolist()):
        y = 1 if int2 >= 0 else -1
        int1 = int1 + b1 * x - a1 * y
        int1 = lo if int1 < lo else (hi if int1 > hi else int1)
        int2 = int2 + b2 * int1 - a2 * y
        int2 = lo if int2 < lo else (hi if int2 > hi else int2)
        out[i] = y

    return out, ModulatorState(int1=int1, int2=int2, last_bit=y)


def run_modulator(x_series, config: ModulatorConfig, initial_state: ModulatorState = None,
                  start_time: float = 0.0) -> BitStream:
    """
    Modulate a normalized input series into a bitstream.

    Noise (if configured) is drawn once for the whole series from the
    configured seed, so equal inputs and seeds give identical bits.
    """
    xs = np.asarray(x_series, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise InvalidSpec("modulator input must be finite")
    xs = xs + input_noise(xs.size, config)
    bits, _ = run_loop(xs, config, initial_state)
    return BitStream(bits=bits, sample_rate=config.sample_rate, start_time=start_time)


def sine_input(amplitude_fraction: float, freq_hz: float, n: int, config: ModulatorConfig):
    """Voltage-mode test tone at a fraction of full scale, as normalized input."""
    t = np.arange(n) / config.sample_rate
    v = amplitude_fraction * config.vref * np.sin(2 * np.pi * freq_hz * t)
    return voltage_input(v, config)


if __name__ == "__main__":
    cfg = ModulatorConfig(input_mode="voltage")
    for level in (-0.5, 0.0, 0.5):
        stream = run_modulator(np.full(1 << 16, level), cfg)
        print(f"x = {level:+.2f} -> mean(bits) = {stream.mean():+.5f}")

import numpy as np
import pytest

from config import MMHG_TO_PA
from errors import InvalidSpec, ModeMismatch
from readout.modulator import (
    BitStream, ModulatorConfig, ModulatorState, charge_input, input_noise, run_loop,
    run_modulator, sine_input, step, voltage_input,
)
from sensor.membrane import capacitance, deflect, reference_capacitance


def test_matched_capacitance_is_zero_input(capacitive_modulator):
    assert charge_input(1e-13, capacitive_modulator, cref=1e-13) == 0.0


def test_capacitance_difference_sign_flip(capacitive_modulator):
    up = charge_input(1e-13 + 2e-16, capacitive_modulator, cref=1e-13)
    down = charge_input(1e-13 - 2e-16, capacitive_modulator, cref=1e-13)
    assert up == pytest.approx(-down)
    assert up == pytest.approx(2e-16 / capacitive_modulator.c_full_scale)


def test_membrane_at_100_mmhg_stays_in_full_scale(geometry, material, capacitive_modulator):
    cs = capacitance(geometry, deflect(geometry, material, 100 * MMHG_TO_PA))
    x = charge_input(cs, capacitive_modulator, cref=reference_capacitance(geometry))
    assert 0 < x < 1


def test_mode_mismatch(capacitive_modulator, voltage_modulator):
    with pytest.raises(ModeMismatch):
        charge_input(1e-13, voltage_modulator)
    with pytest.raises(ModeMismatch):
        voltage_input(0.1, capacitive_modulator)
    assert voltage_input(1.25, voltage_modulator) == pytest.approx(0.5)


def test_quantizer_tie_resolves_positive(voltage_modulator):
    state, bit = step(ModulatorState(), 0.0, voltage_modulator)
    assert bit == 1
    assert state.int1 == pytest.approx(-0.5)
    # second integrator sees the updated first one
    assert state.int2 == pytest.approx(-0.75)


def test_step_and_loop_agree(voltage_modulator):
    xs = 0.3 * np.sin(np.arange(500) / 7.0)
    state = ModulatorState()
    bits = []
    for x in xs:
        state, bit = step(state, x, voltage_modulator)
        bits.append(bit)
    loop_bits, final = run_loop(xs, voltage_modulator)
    assert np.array_equal(loop_bits, bits)
    assert final == state


def test_zero_input_has_zero_mean(voltage_modulator):
    stream = run_modulator(np.zeros(10_000), voltage_modulator)
    assert abs(stream.mean()) < 1e-3


@pytest.mark.parametrize("level", [-0.8, -0.5, -0.25, 0.0, 0.25, 0.5, 0.8])
def test_dc_tracking(voltage_modulator, level):
    n = 1 << 16
    stream = run_modulator(np.full(n, level), voltage_modulator)
    assert abs(stream.mean() - level) < 2 / np.sqrt(n)


def test_half_scale_mean_within_1e3(voltage_modulator):
    stream = run_modulator(np.full(1 << 16, 0.5), voltage_modulator)
    assert stream.mean() == pytest.approx(0.5, abs=1e-3)


def test_overload_clamps_integrators(voltage_modulator):
    state = ModulatorState()
    for _ in range(5000):
        state, _ = step(state, 1.2, voltage_modulator)
        assert abs(state.int1) <= voltage_modulator.saturation
        assert abs(state.int2) <= voltage_modulator.saturation
    assert np.isfinite(state.int1) and np.isfinite(state.int2)


def test_empty_input():
    stream = run_modulator([], ModulatorConfig(input_mode="voltage"))
    assert len(stream) == 0
    assert stream.bits.dtype == np.int8


def test_noise_is_seeded():
    cfg = ModulatorConfig(input_mode="voltage", noise_rms=0.05, seed=3)
    xs = sine_input(0.5, 100.0, 20_000, cfg)
    a = run_modulator(xs, cfg)
    b = run_modulator(xs, cfg)
    c = run_modulator(xs, ModulatorConfig(input_mode="voltage", noise_rms=0.05, seed=4))
    assert np.array_equal(a.bits, b.bits)
    assert not np.array_equal(a.bits, c.bits)


def test_input_noise_level():
    cfg = ModulatorConfig(noise_rms=0.25, vref=2.5, seed=1)
    noise = input_noise(100_000, cfg)
    assert noise.std() == pytest.approx(0.1, rel=0.02)
    assert not input_noise(10, ModulatorConfig()).any()


def test_bitstream_values_and_frame(voltage_modulator):
    stream = run_modulator(np.full(64, 0.1), voltage_modulator)
    assert set(np.unique(stream.bits)) <= {-1, 1}
    frame = stream.to_frame()
    assert list(frame.columns) == ["n", "bit"]
    assert stream.duration == pytest.approx(64 / 128000)
    assert isinstance(stream, BitStream)


@pytest.mark.parametrize("kwargs", [
    {"vref": 0.0},
    {"input_mode": "current"},
    {"a1": 0.0},
    {"sample_rate": 0},
    {"noise_rms": -1.0},
])
def test_invalid_modulator_config(kwargs):
    with pytest.raises(InvalidSpec):
        ModulatorConfig(**kwargs)


def test_non_finite_input_rejected(voltage_modulator):
    with pytest.raises(InvalidSpec):
        run_modulator([0.0, np.nan], voltage_modulator)


@pytest.mark.slow
@pytest.mark.parametrize("shape", ["dc", "sine"])
@pytest.mark.parametrize("level", [0.9, -0.9])
def test_integrators_stay_inside_saturation(voltage_modulator, shape, level):
    n = 1_000_000
    if shape == "dc":
        xs = np.full(n, level)
    else:
        xs = sine_input(level, 15.625, n, voltage_modulator)
    state = ModulatorState()
    peak = 0.0
    for x in xs.tolist():
        state, _ = step(state, x, voltage_modulator)
        peak = max(peak, abs(state.int1), abs(state.int2))
    assert peak < voltage_modulator.saturation

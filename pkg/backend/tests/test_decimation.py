import numpy as np
import pytest

from analysis.decimation import (
    CicConfig, CicDecimator, Decimator, FirConfig, FirDecimator, cic_decimate, fir_decimate,
    decimate_chain, decimate_scan, group_delay, transient_cut, window_length,
)
from readout.modulator import BitStream, ModulatorConfig, charge_input, run_modulator
from readout.mux import ScanResult, MuxSchedule


def _boxcar_oracle(x, rate=64, order=3):
    y = np.asarray(x, dtype=np.int64)
    for _ in range(order):
        y = np.convolve(y, np.ones(rate, dtype=np.int64))
    return y[rate - 1::rate]


def _random_bits(n, seed=0):
    rng = np.random.default_rng(seed)
    return np.where(rng.random(n) < 0.5, -1, 1).astype(np.int8)


def test_cic_matches_boxcar_oracle_exactly():
    bits = _random_bits(1_000_000, seed=11)
    out = cic_decimate(bits)
    oracle = _boxcar_oracle(bits)[: out.size]
    assert out.size == 1_000_000 // 64
    assert np.array_equal(out, oracle)


def test_cic_streaming_equals_one_shot():
    bits = _random_bits(50_000, seed=2)
    decimator = CicDecimator()
    rng = np.random.default_rng(3)
    cuts = np.sort(rng.choice(np.arange(1, bits.size), size=40, replace=False))
    pieces = [decimator.process(chunk) for chunk in np.split(bits, cuts)]
    assert np.array_equal(np.concatenate(pieces), cic_decimate(bits))


def test_cic_dc_gain():
    out = cic_decimate(np.ones(64 * 10, dtype=np.int8))
    assert out[-1] == 64 ** 3 == 262144
    assert np.all(out[3:] == 262144)


def test_cic_impulse_response():
    baseline = -np.ones(64 * 8, dtype=np.int8)
    impulse = baseline.copy()
    impulse[0] = 1
    poly = np.ones(64, dtype=np.int64)
    poly = np.convolve(np.convolve(poly, poly), poly)
    expected = 2 * np.concatenate([poly, np.zeros(64 * 8)])[63::64][:8]
    assert np.array_equal(cic_decimate(impulse) - cic_decimate(baseline), expected)


def test_cic_alternating_input_cancels():
    x = np.tile(np.array([1, -1], dtype=np.int8), 64 * 10)
    out = cic_decimate(x)
    assert np.all(out[3:] == 0)
    assert np.all(np.abs(out) <= 64 ** 3)


def test_cic_bit_growth():
    assert CicConfig().bit_growth == pytest.approx(18.0)
    assert CicConfig().impulse_length == 190


def test_fir_zero_input(fir):
    decimator = FirDecimator(fir, input_scale=CicConfig().dc_gain)
    assert not decimator.process(np.zeros(200, dtype=np.int64)).any()


def test_fir_full_scale_saturates(fir):
    decimator = FirDecimator(fir, input_scale=262144)
    codes = decimator.process(np.full(200, 262144, dtype=np.int64))
    assert codes[-1] == 2047
    assert decimator.saturations > 0

    decimator = FirDecimator(fir, input_scale=262144)
    codes = decimator.process(np.full(200, -262144, dtype=np.int64))
    assert codes[-1] == -2048


def test_fir_matches_float_reference(fir):
    rng = np.random.default_rng(4)
    x = rng.integers(-100_000, 100_000, size=4001)
    decimator = FirDecimator(fir, input_scale=262144)
    codes = decimator.process(x)

    full = np.convolve(x.astype(float), np.asarray(fir.taps, dtype=float))[: x.size]
    reference = full[1::2] * 2048 / (262144 * 32768)
    assert codes.size == reference.size
    assert np.max(np.abs(codes - reference)) <= 1


def test_fir_rounds_half_away_from_zero():
    fir = FirConfig(taps=(32768,), rate_change=1)
    decimator = FirDecimator(fir, input_scale=4096)
    # code = x * 2048 / 4096 = x / 2
    codes = decimator.process(np.array([1, -1, 3, -3, 2], dtype=np.int64))
    assert codes.tolist() == [1, -1, 2, -2, 1]


def test_transient_and_delay_constants(cic, fir):
    assert transient_cut(cic, fir) == 17
    assert group_delay(cic, fir) == (1086.5, 1086.5 / 128)
    assert window_length(cic, fir) == 2174


def test_chain_rate_contract(cic, fir):
    n = 1 << 20
    stream = decimate_chain(BitStream(_random_bits(n, seed=5), 128000), cic, fir)
    assert len(stream) == n // 128 - transient_cut(cic, fir)
    assert stream.rate == 1000.0
    assert np.allclose(np.diff(stream.times), 1e-3)


def test_chain_streaming_equals_one_shot(cic, fir):
    bits = _random_bits(128 * 300, seed=6)
    decimator = Decimator(cic, fir)
    pieces = [decimator.process(chunk) for chunk in np.array_split(bits, 7)]
    whole = Decimator(cic, fir).process(bits)
    assert np.array_equal(np.concatenate(pieces), whole)
    assert decimator.emitted == whole.size == 300


@pytest.mark.parametrize("level", [-0.5, -0.25, 0.0, 0.25, 0.5])
def test_dc_tracking_through_capacitive_input(cic, fir, level):
    cfg = ModulatorConfig(input_mode="capacitive")
    cref = 1.5e-13
    cs = np.full(1 << 17, cref + level * cfg.c_full_scale)
    bits = run_modulator(charge_input(cs, cfg, cref=cref), cfg)
    stream = decimate_chain(bits, cic, fir)
    assert abs(stream.samples.mean() - level * 2048) <= 1


def test_scan_validity_window(cic, fir):
    n = 128 * 64
    bits = BitStream(_random_bits(n, seed=8), 128000)
    element, segment, blanked = MuxSchedule(element_order=(0,), dwell=n, blanking=0).assignment(n)
    result = ScanResult(bits=bits, element=element, segment=segment, blanked=blanked,
                        schedule=MuxSchedule(element_order=(0,), dwell=n, blanking=0))
    stream = decimate_scan(result, cic, fir)[0]
    assert len(stream) == 64
    assert not stream.valid[:16].any()
    assert stream.valid[16:].all()

    chain = decimate_chain(bits, cic, fir)
    assert np.array_equal(stream.samples[17:], chain.samples)
    assert np.allclose(stream.times[17:], chain.times)


def test_one_shot_stages_compose(cic, fir):
    bits = _random_bits(128 * 100, seed=9)
    stream = fir_decimate(cic_decimate(bits, cic), fir, cic, sample_rate=2000.0)
    assert np.array_equal(stream.samples, Decimator(cic, fir).process(bits))
    assert stream.rate == 1000.0
    assert stream.group_delay == pytest.approx(15.5 / 2)


def test_stream_frame_and_start_time(cic, fir):
    stream = decimate_chain(BitStream(_random_bits(128 * 40, seed=10), 128000, start_time=2.0),
                            cic, fir, element_tag=3)
    assert stream.start_time == pytest.approx(2.0 + (128 * 17 + 127 - 1086.5) / 128000)
    frame = stream.to_frame()
    assert list(frame.columns) == ["t_s", "code", "element", "valid"]
    assert set(frame["element"]) == {3}
    assert frame["valid"].all()

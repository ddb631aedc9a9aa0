import numpy as np
import pytest

from errors import InsufficientSamples, InvalidSpec
from analysis.decimation import DecimatedStream
from analysis.spectrum import (
    SpectrumMetrics, coherent_frequency, enob, metrics_json, metrics_text, signal_bin_of,
    snr_sndr, spectrum,
)

N = 8192


def _tone(amplitude, bin_index, n=N, phase=0.3):
    k = np.arange(n)
    return amplitude * np.sin(2 * np.pi * bin_index * k / n + phase)


def test_full_scale_coherent_sine_reads_zero_dbfs():
    spec = spectrum(_tone(2048.0, 128), N, sample_rate=1000.0)
    mag = spec["mag_dbfs"].to_numpy()
    assert mag[128] == pytest.approx(0.0, abs=1e-9)
    others = np.delete(mag, 128)
    assert np.all(others < -250)


def test_coherent_frequency_and_bin():
    f = coherent_frequency(1000.0, N, 128)
    assert f == 15.625
    assert signal_bin_of(f, 1000.0, N) == 128


def test_power_sums_to_mean_square():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 300, N)
    for window in ("rectangular", "hann"):
        spec = spectrum(x, N, window=window)
        if window == "rectangular":
            expected = np.mean(x ** 2) / (2048.0 ** 2 / 2)
            assert spec["power"].sum() == pytest.approx(expected, rel=1e-9)
        else:
            assert spec["power"].sum() == pytest.approx(np.mean(x ** 2) / (2048.0 ** 2 / 2), rel=0.05)


def test_pure_tone_has_huge_sndr():
    metrics = snr_sndr(spectrum(_tone(1000.0, 128), N), signal_bin=128)
    assert metrics.sndr_db > 250
    assert metrics.signal_bin == 128


def test_tone_plus_noise_matches_expected_sndr():
    rng = np.random.default_rng(1)
    amplitude, sigma = 1500.0, 1.0
    x = _tone(amplitude, 128) + rng.normal(0, sigma, N)
    metrics = snr_sndr(spectrum(x, N), signal_bin=128)
    # Signal and noise both lose a few bins (DC, bin 1, skirt, harmonics)
    expected = 10 * np.log10((amplitude ** 2 / 2) / sigma ** 2)
    assert metrics.sndr_db == pytest.approx(expected, abs=0.5)
    assert metrics.snr_db >= metrics.sndr_db


def test_enob_formula():
    assert enob(72.0) == pytest.approx(11.667, abs=1e-3)
    assert enob(1.76) == 0.0


def test_sndr_independent_of_scale():
    rng = np.random.default_rng(2)
    x = _tone(500.0, 200) + rng.normal(0, 2.0, N)
    a = snr_sndr(spectrum(x, N), signal_bin=200)
    b = snr_sndr(spectrum(4 * x, N), signal_bin=200)
    assert a.sndr_db == pytest.approx(b.sndr_db, abs=1e-9)
    assert b.signal_dbfs == pytest.approx(a.signal_dbfs + 20 * np.log10(4), abs=1e-9)


def test_hann_window_agrees_with_rectangular_on_coherent_tone():
    rng = np.random.default_rng(3)
    x = _tone(1800.0, 128) + rng.normal(0, 1.0, N)
    rect = snr_sndr(spectrum(x, N, window="rectangular"), signal_bin=128)
    hann = snr_sndr(spectrum(x, N, window="hann"), signal_bin=128, skirt_bins=2)
    assert hann.sndr_db == pytest.approx(rect.sndr_db, abs=0.2)


def test_third_harmonic_shows_up_as_thd():
    x = _tone(1000.0, 100) + _tone(10.0, 300, phase=0.0)
    metrics = snr_sndr(spectrum(x, N), signal_bin=100)
    assert metrics.thd_db == pytest.approx(-40.0, abs=1e-6)
    assert metrics.snr_db > 200
    assert metrics.sndr_db == pytest.approx(40.0, abs=1e-6)


def test_signal_bin_found_when_not_given():
    metrics = snr_sndr(spectrum(_tone(700.0, 333), N))
    assert metrics.signal_bin == 333


def test_uses_last_valid_samples_of_a_stream():
    codes = np.concatenate([np.full(100, 2047), _tone(1000.0, 64, n=1024)])
    valid = np.concatenate([np.zeros(100, dtype=bool), np.ones(1024, dtype=bool)])
    stream = DecimatedStream(samples=np.round(codes), times=np.arange(codes.size) / 1000.0,
                             rate=1000.0, valid=valid)
    spec = spectrum(stream, 1024)
    assert int(np.argmax(spec["power"].to_numpy())) == 64
    assert spec.attrs["sample_rate"] == 1000.0


def test_short_record_and_bad_length():
    with pytest.raises(InsufficientSamples):
        spectrum(np.zeros(100), 128)
    with pytest.raises(InvalidSpec):
        spectrum(np.zeros(1000), 1000)
    with pytest.raises(InvalidSpec):
        spectrum(np.zeros(1024), 1024, window="blackman")


def test_metrics_validation():
    with pytest.raises(InvalidSpec):
        SpectrumMetrics(fft_length=1000, signal_bin=10, signal_dbfs=0, snr_db=0,
                        sndr_db=0, thd_db=0, enob=0)
    with pytest.raises(InvalidSpec):
        SpectrumMetrics(fft_length=1024, signal_bin=512, signal_dbfs=0, snr_db=0,
                        sndr_db=0, thd_db=0, enob=0)


def test_metrics_text_and_json():
    data = {"sndr_db": 73.25, "fft_length": 8192, "window": "rectangular"}
    assert metrics_text(data) == "fft_length=8192\nsndr_db=73.250000\nwindow=rectangular\n"
    assert metrics_json(data).startswith('{\n  "fft_length": 8192')

"""
Spectrum Analysis Module
FFT-based converter characterization: dBFS spectrum, SNR / SNDR / THD / ENOB,
and the noise-shaping slope of the raw bitstream.

Normalization:
- power: one-sided, divided by the window energy sum(w^2) and by the power
  of a full-scale sine (FS^2 / 2). Summing it gives the mean square of the
  record in full-scale-sine units, for any window.
- mag_dbfs: amplitude corrected by the coherent gain sum(w), so a
  full-scale sine at a bin center reads 0 dBFS.
"""
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd
from scipy import signal

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import ANALYSIS, DECIMATION
from errors import InsufficientSamples, InvalidSpec

WINDOWS = ("rectangular", "hann")
FULL_SCALE = 1 << (DECIMATION["output_bits"] - 1)
_FLOOR_DB = -400.0


@dataclass(frozen=True)
class SpectrumMetrics:
    fft_length: int
    signal_bin: int
    signal_dbfs: float
    snr_db: float
    sndr_db: float
    thd_db: float
    enob: float
    window: str = "rectangular"
    sample_rate: float = 1000.0

    def __post_init__(self):
        n = self.fft_length
        if n < 2 or n & (n - 1):
            raise InvalidSpec("fft_length must be a power of two")
        if not 0 < self.signal_bin < n // 2:
            raise InvalidSpec("signal_bin must lie in (0, fft_length/2)")

    @property
    def signal_freq(self) -> float:
        return self.signal_bin * self.sample_rate / self.fft_length

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["signal_freq_hz"] = self.signal_freq
        return data


def enob(sndr_db: float) -> float:
    """
    Effective number of bits.

    Formula: ENOB = (SNDR - 1.76) / 6.02
    """
    return (sndr_db - 1.76) / 6.02


def coherent_frequency(sample_rate: float, fft_length: int, bin_index: int) -> float:
    """Tone frequency landing exactly on bin_index."""
    return sample_rate * bin_index / fft_length


def signal_bin_of(freq_hz: float, sample_rate: float, fft_length: int) -> int:
    return int(round(freq_hz * fft_length / sample_rate))


def _window(name: str, n: int) -> np.ndarray:
    if name not in WINDOWS:
        raise InvalidSpec(f"window must be one of {WINDOWS}")
    if name == "rectangular":
        return np.ones(n)
    return signal.get_window("hann", n)


def _record(samples, fft_length: int) -> np.ndarray:
    """Last fft_length valid samples of a stream or array."""
    data = getattr(samples, "valid_samples", samples)
    data = np.asarray(data, dtype=float)
    if data.size < fft_length:
        raise InsufficientSamples(f"need {fft_length} valid samples, have {data.size}")
    return data[data.size - fft_length:]


def spectrum(samples, fft_length: int = ANALYSIS["fft_length"],
             window: str = ANALYSIS["window"], sample_rate: float = None,
             full_scale: float = FULL_SCALE) -> pd.DataFrame:
    """
    One-sided spectrum of the last fft_length valid samples.

    Returns a DataFrame (freq_hz, mag_dbfs, power) with the record settings
    in .attrs.
    """
    if fft_length < 2 or fft_length & (fft_length - 1):
        raise InvalidSpec("fft_length must be a power of two")
    if sample_rate is None:
        sample_rate = getattr(samples, "rate", 1000.0)

    x = _record(samples, fft_length)
    w = _window(window, fft_length)
    spec = np.fft.rfft(x * w)

    one_sided = np.full(spec.size, 2.0)
    one_sided[0] = 1.0
    one_sided[-1] = 1.0

    power = one_sided * np.abs(spec) ** 2 / (fft_length * np.sum(w ** 2))
    power /= full_scale ** 2 / 2

    amplitude = one_sided * np.abs(spec) / np.sum(w)
    mag_dbfs = 20 * np.log10(np.maximum(amplitude / full_scale, 10 ** (_FLOOR_DB / 20)))

    frame = pd.DataFrame({
        "freq_hz": np.fft.rfftfreq(fft_length, d=1.0 / sample_rate),
        "mag_dbfs": mag_dbfs,
        "power": power,
    })
    frame.attrs.update({"fft_length": fft_length, "window": window, "sample_rate": sample_rate})
    return frame


def _bins_around(center: int, skirt: int, last: int) -> np.ndarray:
    return np.arange(max(center - skirt, 0), min(center + skirt, last) + 1)


def snr_sndr(spec: pd.DataFrame, signal_bin: int = None,
             harmonic_count: int = ANALYSIS["harmonic_count"],
             skirt_bins: int = ANALYSIS["skirt_bins"]) -> SpectrumMetrics:
    """
    Signal, noise and distortion split of a spectrum.

    DC and bin 1 are excluded from every component. The signal owns its bin
    +/- skirt_bins; harmonics 2..harmonic_count+1 (folded about Nyquist)
    own theirs. SNDR counts everything else, SNR leaves the harmonics out.
    """
    power = spec["power"].to_numpy()
    fft_length = int(spec.attrs.get("fft_length", 2 * (power.size - 1)))
    last = power.size - 1

    if signal_bin is None:
        signal_bin = int(np.argmax(power[2:])) + 2

    used = np.zeros(power.size, dtype=bool)
    used[:2] = True
    signal_bins = _bins_around(signal_bin, skirt_bins, last)
    used[signal_bins] = True
    signal_power = power[signal_bins].sum()

    harmonic = np.zeros(power.size, dtype=bool)
    for order in range(2, harmonic_count + 2):
        b = (order * signal_bin) % fft_length
        if b > fft_length // 2:
            b = fft_length - b
        harmonic[_bins_around(b, skirt_bins, last)] = True
    harmonic &= ~used

    rest = ~used
    tiny = np.finfo(float).tiny
    noise_and_distortion = max(power[rest].sum(), tiny)
    distortion = max(power[harmonic].sum(), tiny)
    noise = max(power[rest & ~harmonic].sum(), tiny)

    sndr = 10 * np.log10(signal_power / noise_and_distortion)
    return SpectrumMetrics(
        fft_length=fft_length,
        signal_bin=int(signal_bin),
        signal_dbfs=float(10 * np.log10(max(signal_power, tiny))),
        snr_db=float(10 * np.log10(signal_power / noise)),
        sndr_db=float(sndr),
        thd_db=float(10 * np.log10(distortion / signal_power)),
        enob=float(enob(sndr)),
        window=spec.attrs.get("window", "rectangular"),
        sample_rate=float(spec.attrs.get("sample_rate", 1000.0)),
    )


def noise_shaping_slope(bits, sample_rate: float, f_lo: float = 1000.0, f_hi: float = 20000.0,
                        bands: int = 20, nperseg: int = 1 << 14) -> float:
    """
    Slope (dB/decade) of the raw bitstream's Welch PSD between f_lo and f_hi.

    The PSD is averaged over log-spaced bands before the straight-line fit;
    bins within 5 bins of the strongest in-band component below f_lo are
    left out of the estimate.
    """
    x = np.asarray(getattr(bits, "bits", bits), dtype=float)
    freqs, psd = signal.welch(x, fs=sample_rate, window="hann", nperseg=min(nperseg, x.size))

    low = freqs < f_lo
    if low.any():
        tone = np.argmax(np.where(low & (freqs > 0), psd, 0.0))
        psd = psd.copy()
        psd[max(tone - 5, 0):tone + 6] = np.nan

    edges = np.logspace(np.log10(f_lo), np.log10(f_hi), bands + 1)
    centers, levels = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (freqs >= lo) & (freqs < hi) & np.isfinite(psd)
        if sel.any():
            centers.append(np.sqrt(lo * hi))
            levels.append(10 * np.log10(np.mean(psd[sel])))
    if len(centers) < 2:
        raise InsufficientSamples("too few PSD bands for a slope fit")
    slope, _ = np.polyfit(np.log10(centers), levels, 1)
    return float(slope)


def metrics_text(metrics: Dict) -> str:
    """Flat key=value block, one entry per line, keys sorted."""
    lines = []
    for key in sorted(metrics):
        value = metrics[key]
        if isinstance(value, float):
            value = f"{value:.6f}"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def metrics_json(metrics: Dict) -> str:
    return json.dumps(metrics, sort_keys=True, indent=2, default=float) + "\n"

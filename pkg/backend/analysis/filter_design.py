"""
FIR Design Module
Designs the 32-tap second-stage FIR with SINC^N droop compensation.

Procedure:
1. Desired gain = 1 / |CIC(f)| over 0..cutoff, 0 from cutoff to the
   intermediate Nyquist (a step at the cutoff).
2. Frequency-sampling design with a Hamming window (scipy.signal.firwin2).
3. Quantize to Q1.15 and trim the two center taps so the taps sum to
   exactly 2^15 (0 dB composite DC gain, symmetry kept).
4. Check passband ripple, the -6 dB cutoff point and CIC image rejection
   on the quantized taps.
"""
import sys
from pathlib import Path
from typing import Dict

import numpy as np
import pandas as pd
from scipy import signal

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import DECIMATION, MODULATOR
from errors import ConfigError, DesignInfeasible
from analysis.decimation import Q15_SCALE, CicConfig, FirConfig

FIR_TAPS = 32
# Points of the desired-response grid over the passband
_DESIGN_POINTS = 65
_CUTOFF_TARGET_DB = -6.0
_CUTOFF_TOLERANCE_DB = 1.0
_MIN_DB = -400.0


def _db(magnitude) -> np.ndarray:
    return 20 * np.log10(np.maximum(np.abs(magnitude), 10 ** (_MIN_DB / 20)))


def cic_response(freqs, cic: CicConfig, sample_rate: float = MODULATOR["sample_rate"]) -> np.ndarray:
    """
    Normalized SINC^N magnitude (1 at DC).

    Formula: |sin(pi*f*R*M/fs) / (R*M*sin(pi*f/fs))|^N
    """
    f = np.asarray(freqs, dtype=float) / sample_rate
    rm = cic.rate_change * cic.differential_delay
    return np.abs(np.sinc(f * rm) / np.sinc(f)) ** cic.order


def fir_response(freqs, fir: FirConfig, sample_rate: float) -> np.ndarray:
    """|H(f)| of the quantized taps at their own (intermediate) rate."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    _, h = signal.freqz(fir.coefficients, worN=freqs, fs=sample_rate)
    return np.abs(h)


def composite_response(freqs, cic: CicConfig, fir: FirConfig,
                       sample_rate: float = MODULATOR["sample_rate"]) -> np.ndarray:
    """CIC at the modulator rate times FIR at the intermediate rate."""
    intermediate = sample_rate / cic.rate_change
    return cic_response(freqs, cic, sample_rate) * fir_response(freqs, fir, intermediate)


def image_rejection(fir: FirConfig, cic: CicConfig, f_image, sample_rate: float = MODULATOR["sample_rate"]):
    """
    Attenuation (dB) of a tone at f_image relative to the baseband tone
    it folds onto at the intermediate rate.
    """
    intermediate = sample_rate / cic.rate_change
    f_image = np.asarray(f_image, dtype=float)
    f0 = np.abs(f_image - np.round(f_image / intermediate) * intermediate)
    wanted = composite_response(f0, cic, fir, sample_rate)
    image = composite_response(f_image, cic, fir, sample_rate)
    return _db(wanted) - _db(image)


def design_report(fir: FirConfig, cic: CicConfig, sample_rate: float = MODULATOR["sample_rate"],
                  passband_edge: float = DECIMATION["passband_edge"],
                  image_halfwidth: float = DECIMATION["image_halfwidth"]) -> Dict[str, float]:
    """Figures the design is judged on."""
    intermediate = sample_rate / cic.rate_change
    passband = _db(composite_response(np.linspace(0, passband_edge, 401), cic, fir, sample_rate))
    offsets = np.linspace(1.0, image_halfwidth, 100)
    images = np.concatenate([intermediate - offsets, intermediate + offsets])

    return {
        "dc_gain_db": float(_db(composite_response([0.0], cic, fir, sample_rate))[0]),
        "ripple_db": float(passband.max() - passband.min()),
        "cutoff_gain_db": float(_db(composite_response([fir.cutoff], cic, fir, sample_rate))[0]),
        "image_rejection_db": float(image_rejection(fir, cic, images, sample_rate).min()),
        "symmetric": fir.is_symmetric(),
        "tap_sum": int(sum(fir.taps)),
    }


def quantize_taps(h) -> np.ndarray:
    """Round to Q1.15 and force sum(taps) == 2^15 via the center taps."""
    q = np.round(np.asarray(h) * Q15_SCALE).astype(np.int64)
    diff = Q15_SCALE - int(q.sum())
    mid = q.size // 2
    if q.size % 2:
        q[mid] += diff
    else:
        # Symmetric even-length taps always sum to an even number
        q[mid - 1] += diff // 2
        q[mid] += diff - diff // 2
    return q


def design_fir(cic: CicConfig = None, n_taps: int = DECIMATION["fir_taps"],
               rate_change: int = DECIMATION["fir_rate"], cutoff: float = DECIMATION["cutoff"],
               sample_rate: float = MODULATOR["sample_rate"],
               passband_edge: float = DECIMATION["passband_edge"],
               ripple_db: float = DECIMATION["passband_ripple_db"],
               image_rejection_db: float = DECIMATION["image_rejection_db"],
               image_halfwidth: float = DECIMATION["image_halfwidth"],
               output_bits: int = DECIMATION["output_bits"],
               accumulator_bits: int = DECIMATION["accumulator_bits"],
               check: bool = True) -> FirConfig:
    """
    Droop-compensating lowpass for the second decimation stage.

    Raises ConfigError for a cutoff outside (0, intermediate Nyquist) and
    DesignInfeasible when the quantized taps miss a target.
    """
    cic = cic or CicConfig()
    intermediate = sample_rate / cic.rate_change
    nyquist = intermediate / 2
    if not 0 < cutoff < nyquist:
        raise ConfigError(f"cutoff {cutoff} Hz must lie in (0, {nyquist:g}) Hz", "decimation.cutoff")
    if not 0 < passband_edge < cutoff:
        raise ConfigError("passband_edge must lie below the cutoff", "decimation.passband_edge")
    if n_taps != FIR_TAPS:
        raise ConfigError(f"the second stage has {FIR_TAPS} taps, got {n_taps}", "decimation.fir_taps")

    band = np.linspace(0, cutoff, _DESIGN_POINTS)
    freq = np.concatenate([band, [cutoff, nyquist]])
    gain = np.concatenate([1.0 / cic_response(band, cic, sample_rate), [0.0, 0.0]])
    h = signal.firwin2(n_taps, freq, gain, nfreqs=8193, window="hamming", fs=intermediate)

    fir = FirConfig(
        taps=tuple(int(t) for t in quantize_taps(h)),
        rate_change=rate_change, cutoff=cutoff,
        output_bits=output_bits, accumulator_bits=accumulator_bits,
    )
    if check:
        check_design(fir, cic, sample_rate, passband_edge, ripple_db,
                     image_rejection_db, image_halfwidth)
    return fir


def check_design(fir: FirConfig, cic: CicConfig, sample_rate: float, passband_edge: float,
                 ripple_db: float, image_rejection_db: float, image_halfwidth: float):
    report = design_report(fir, cic, sample_rate, passband_edge, image_halfwidth)
    if report["ripple_db"] > ripple_db:
        raise DesignInfeasible("ripple_db", report["ripple_db"], f"<= {ripple_db} dB")
    if abs(report["cutoff_gain_db"] - _CUTOFF_TARGET_DB) > _CUTOFF_TOLERANCE_DB:
        raise DesignInfeasible(
            "cutoff_gain_db", report["cutoff_gain_db"],
            f"{_CUTOFF_TARGET_DB} +/- {_CUTOFF_TOLERANCE_DB} dB",
        )
    if report["image_rejection_db"] < image_rejection_db:
        raise DesignInfeasible("image_rejection_db", report["image_rejection_db"],
                               f">= {image_rejection_db} dB")
    return report


def response_frame(fir: FirConfig, cic: CicConfig, sample_rate: float = MODULATOR["sample_rate"],
                   f_max: float = 4000.0, step: float = 5.0) -> pd.DataFrame:
    """CIC, FIR and composite magnitudes (dB) on a uniform grid from DC."""
    freqs = np.arange(0.0, f_max + step / 2, step)
    intermediate = sample_rate / cic.rate_change
    return pd.DataFrame({
        "freq_hz": freqs,
        "cic_db": _db(cic_response(freqs, cic, sample_rate)),
        "fir_db": _db(fir_response(freqs, fir, intermediate)),
        "composite_db": _db(composite_response(freqs, cic, fir, sample_rate)),
    })


if __name__ == "__main__":
    cic = CicConfig()
    fir = design_fir(cic)
    report = design_report(fir, cic)

    print("FIR design")
    print("=" * 50)
    print(f"  taps: {list(fir.taps)}")
    for key, value in report.items():
        print(f"  {key:20s} {value}")

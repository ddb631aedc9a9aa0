"""
Decimation Module
Fixed-point two-stage decimation of the 1-bit modulator stream:
3rd-order CIC (SINC^3) by 64, then a 32-tap Q1.15 FIR by 2.

Arithmetic contract:
- CIC runs in int64 integrator-comb form. Integrators may wrap (two's
  complement); the comb differences are still exact because the true
  outputs fit in 1 + N*log2(R*M) bits.
- FIR accumulates in int64 against a provisioned accumulator width
  (default 40 bits). Output code = round-half-away-from-zero of
  acc * 2^(bits-1) / (R^N * M^N * 2^15), saturated to the signed
  output range. A constant input x maps to code x * 2^(bits-1).

Timing: FIR output k depends on modulator bits up to index
(k+1)*R1*R2 - 1 and is timestamped at its group-delay-compensated center.
"""
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import DECIMATION
from errors import InvalidSpec

Q15_SCALE = 1 << 15


@dataclass(frozen=True)
class CicConfig:
    order: int = DECIMATION["cic_order"]
    rate_change: int = DECIMATION["cic_rate"]
    differential_delay: int = DECIMATION["differential_delay"]

    def __post_init__(self):
        if self.order < 1:
            raise InvalidSpec("CIC order must be >= 1")
        if self.rate_change < 2:
            raise InvalidSpec("CIC rate_change must be >= 2")
        if self.differential_delay < 1:
            raise InvalidSpec("differential_delay must be >= 1")

    @property
    def dc_gain(self) -> int:
        return (self.rate_change * self.differential_delay) ** self.order

    @property
    def bit_growth(self) -> float:
        """N * log2(R * M): 18 bits for the default SINC3 by 64."""
        return self.order * math.log2(self.rate_change * self.differential_delay)

    @property
    def impulse_length(self) -> int:
        return self.order * (self.rate_change * self.differential_delay - 1) + 1


@dataclass(frozen=True)
class FirConfig:
    """Q1.15 taps of the second stage."""
    taps: Tuple[int, ...]
    rate_change: int = DECIMATION["fir_rate"]
    cutoff: float = DECIMATION["cutoff"]
    output_bits: int = DECIMATION["output_bits"]
    accumulator_bits: int = DECIMATION["accumulator_bits"]

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(int(t) for t in self.taps))
        if not self.taps:
            raise InvalidSpec("FIR needs at least one tap")
        if any(abs(t) >= 1 << 16 for t in self.taps):
            raise InvalidSpec("taps must be Q1.15 integers")
        if self.rate_change < 1:
            raise InvalidSpec("FIR rate_change must be >= 1")
        if not 2 <= self.output_bits <= 24:
            raise InvalidSpec("output_bits must be in [2, 24]")

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    @property
    def coefficients(self) -> np.ndarray:
        """Taps as floats (tap / 2^15)."""
        return np.asarray(self.taps, dtype=float) / Q15_SCALE

    def is_symmetric(self) -> bool:
        return self.taps == self.taps[::-1]


def group_delay(cic: CicConfig, fir: FirConfig) -> Tuple[float, float]:
    """
    Total linear-phase delay of CIC + FIR.

    Formula: N*(R1*M - 1)/2 + (L - 1)/2 * R1 modulator samples
    Returns (modulator samples, output samples).
    """
    mod = cic.order * (cic.rate_change * cic.differential_delay - 1) / 2
    mod += (fir.n_taps - 1) / 2 * cic.rate_change
    return mod, mod / (cic.rate_change * fir.rate_change)


def transient_cut(cic: CicConfig, fir: FirConfig) -> int:
    """Startup outputs discarded by decimate_chain: ceil((N + L - 1) / R2)."""
    return math.ceil((cic.order + fir.n_taps - 1) / fir.rate_change)


def window_length(cic: CicConfig, fir: FirConfig) -> int:
    """Modulator bits spanned by one output's impulse response."""
    return cic.impulse_length + (fir.n_taps - 1) * cic.rate_change


class CicDecimator:
    """Streaming integrator-comb SINC^N decimator (int64)."""

    def __init__(self, config: CicConfig = None):
        self.config = config or CicConfig()
        self.reset()

    def reset(self):
        n = self.config.order
        self._integrators = np.zeros(n, dtype=np.int64)
        self._combs = np.zeros((n, self.config.differential_delay), dtype=np.int64)
        self._phase = 0

    def process(self, samples) -> np.ndarray:
        """Feed input samples; returns the decimated outputs they complete."""
        y = np.asarray(samples, dtype=np.int64)
        if y.size == 0:
            return np.zeros(0, dtype=np.int64)

        with np.errstate(over="ignore"):
            for stage in range(self.config.order):
                y = np.cumsum(y, dtype=np.int64) + self._integrators[stage]
                self._integrators[stage] = y[-1]

            r = self.config.rate_change
            first = (r - 1 - self._phase) % r
            self._phase = (self._phase + y.size) % r
            y = y[first::r]

            m = self.config.differential_delay
            for stage in range(self.config.order):
                history = np.concatenate([self._combs[stage], y])
                out = history[m:] - history[:-m]
                self._combs[stage] = history[-m:]
                y = out
        return y


class FirDecimator:
    """Streaming fixed-point FIR decimator producing saturated output codes."""

    def __init__(self, config: FirConfig, input_scale: int):
        self.config = config
        self.input_scale = int(input_scale)
        self._taps = np.asarray(config.taps, dtype=np.int64)
        self._check_accumulator()
        self.reset()

    def _check_accumulator(self):
        worst = int(np.abs(self._taps).sum()) * self.input_scale
        if worst.bit_length() + 1 > self.config.accumulator_bits:
            raise InvalidSpec(
                f"accumulator of {self.config.accumulator_bits} bits cannot hold "
                f"{worst.bit_length() + 1}-bit FIR sums"
            )

    def reset(self):
        self._history = np.zeros(self.config.n_taps - 1, dtype=np.int64)
        self._phase = 0
        self.saturations = 0

    def accumulate(self, samples) -> np.ndarray:
        """Raw accumulator values at the decimated output instants."""
        x = np.asarray(samples, dtype=np.int64)
        if x.size == 0:
            return np.zeros(0, dtype=np.int64)
        buffer = np.concatenate([self._history, x])
        full = np.convolve(buffer, self._taps, mode="valid")
        self._history = buffer[buffer.size - (self.config.n_taps - 1):]

        r = self.config.rate_change
        first = (r - 1 - self._phase) % r
        self._phase = (self._phase + x.size) % r
        return full[first::r]

    def quantize(self, acc: np.ndarray) -> np.ndarray:
        """
        Rescale accumulator values to output codes.

        Formula: code = sign(acc) * floor(|acc| * 2^(b-1) / D + 1/2),
        D = input_scale * 2^15, then saturate to [-2^(b-1), 2^(b-1) - 1]
        """
        half = 1 << (self.config.output_bits - 1)
        denom = self.input_scale * Q15_SCALE
        magnitude = (2 * np.abs(acc) * half + denom) // (2 * denom)
        codes = np.sign(acc) * magnitude
        clipped = np.clip(codes, -half, half - 1)
        self.saturations += int(np.count_nonzero(clipped != codes))
        return clipped

    def process(self, samples) -> np.ndarray:
        return self.quantize(self.accumulate(samples))


class Decimator:
    """CIC followed by FIR; every output is returned, transient included."""

    def __init__(self, cic: CicConfig, fir: FirConfig):
        self.cic = CicDecimator(cic)
        self.fir = FirDecimator(fir, input_scale=cic.dc_gain)
        self.emitted = 0

    @property
    def saturations(self) -> int:
        return self.fir.saturations

    def reset(self):
        self.cic.reset()
        self.fir.reset()
        self.emitted = 0

    def process(self, bits) -> np.ndarray:
        codes = self.fir.process(self.cic.process(bits))
        self.emitted += codes.size
        return codes


@dataclass(frozen=True, eq=False)
class DecimatedStream:
    """12-bit codes at the output rate with timestamps and validity."""
    samples: np.ndarray
    times: np.ndarray
    rate: float
    valid: Optional[np.ndarray] = None
    element_tag: Optional[int] = None
    saturations: int = 0
    group_delay: float = 0.0
    transient_cut: int = 0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.int64))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        valid = np.ones(self.samples.size, dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "valid", valid)

    def __len__(self):
        return int(self.samples.size)

    @property
    def start_time(self) -> float:
        return float(self.times[0]) if self.times.size else 0.0

    @property
    def valid_samples(self) -> np.ndarray:
        return self.samples[self.valid]

    @property
    def valid_times(self) -> np.ndarray:
        return self.times[self.valid]

    def to_frame(self) -> pd.DataFrame:
        element = -1 if self.element_tag is None else self.element_tag
        return pd.DataFrame({
            "t_s": self.times,
            "code": self.samples,
            "element": np.full(self.samples.size, element, dtype=int),
            "valid": self.valid.astype(int),
        })


def cic_decimate(bits, config: CicConfig = None) -> np.ndarray:
    """One-shot CIC on a +/-1 sequence (or BitStream), zero initial state."""
    samples = getattr(bits, "bits", bits)
    return CicDecimator(config).process(samples)


def fir_decimate(x, fir: FirConfig, cic: CicConfig = None, start_time: float = 0.0,
                 sample_rate: float = None) -> DecimatedStream:
    """
    One-shot FIR decimation of CIC outputs (intermediate rate).

    sample_rate is the intermediate rate; output timestamps sit at the
    FIR's own group delay.
    """
    cic = cic or CicConfig()
    decimator = FirDecimator(fir, input_scale=cic.dc_gain)
    codes = decimator.process(x)
    rate_in = sample_rate or 1.0
    k = np.arange(codes.size)
    times = start_time + ((k + 1) * fir.rate_change - 1 - (fir.n_taps - 1) / 2) / rate_in
    return DecimatedStream(
        samples=codes, times=times, rate=rate_in / fir.rate_change,
        saturations=decimator.saturations, group_delay=(fir.n_taps - 1) / 2 / fir.rate_change,
    )


def _output_times(n_out: int, sample_rate: float, start_time: float,
                  cic: CicConfig, fir: FirConfig) -> np.ndarray:
    total = cic.rate_change * fir.rate_change
    delay, _ = group_delay(cic, fir)
    k = np.arange(n_out)
    return start_time + (total * k + total - 1 - delay) / sample_rate


def decimate_chain(bits, cic: CicConfig, fir: FirConfig, element_tag: int = None) -> DecimatedStream:
    """
    Full CIC + FIR chain on one BitStream, startup transient removed.

    N bits give floor(N / (R1*R2)) - transient_cut samples.
    """
    decimator = Decimator(cic, fir)
    codes = decimator.process(bits.bits)
    cut = transient_cut(cic, fir)
    times = _output_times(codes.size, bits.sample_rate, bits.start_time, cic, fir)
    _, delay_out = group_delay(cic, fir)
    return DecimatedStream(
        samples=codes[cut:],
        times=times[cut:],
        rate=bits.sample_rate / (cic.rate_change * fir.rate_change),
        element_tag=element_tag,
        saturations=decimator.saturations,
        group_delay=delay_out,
        transient_cut=cut,
    )


def decimate_scan(scan_result, cic: CicConfig, fir: FirConfig) -> Dict[int, DecimatedStream]:
    """
    Per-element streams from a multiplexed acquisition.

    Each element's segments are concatenated and run through one decimator.
    An output is valid only when its whole impulse-response window lies
    inside one segment's non-blanked bits.
    """
    bits = scan_result.bits
    span = window_length(cic, fir)
    total = cic.rate_change * fir.rate_change
    delay, delay_out = group_delay(cic, fir)
    streams = {}

    for element in scan_result.elements():
        index = np.flatnonzero(scan_result.element == element)
        decimator = Decimator(cic, fir)
        codes = decimator.process(bits.bits[index])

        hi = total * np.arange(codes.size) + total - 1
        lo = hi - span + 1
        segment = scan_result.segment[index]
        blanked = np.concatenate([[0], np.cumsum(scan_result.blanked[index])])
        lo_c = np.clip(lo, 0, None)
        valid = (
            (lo >= 0)
            & (segment[lo_c] == segment[hi])
            & (blanked[hi + 1] - blanked[lo_c] == 0)
        )
        times = bits.start_time + (index[hi] - delay) / bits.sample_rate

        streams[element] = DecimatedStream(
            samples=codes, times=times, valid=valid,
            rate=bits.sample_rate / total, element_tag=element,
            saturations=decimator.saturations, group_delay=delay_out,
        )
    return streams

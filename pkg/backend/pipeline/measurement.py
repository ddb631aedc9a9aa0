"""
Measurement Pipeline
Scan the array, select the strongest element, re-acquire it, detect beats,
calibrate against the cuff reading and return a calibrated pressure wave.
"""
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import PIPELINE
from errors import CalibrationImpossible, InvalidSpec, NoValidData
from analysis.decimation import DecimatedStream, decimate_scan
from pipeline.builders import Chain
from pipeline.calibration import CalibrationMap, calibrate_two_point
from readout.mux import MuxSchedule, scan


@dataclass(frozen=True, eq=False)
class BeatSet:
    """Indices into a code series: systolic peaks and the troughs between them."""
    peaks: np.ndarray
    troughs: np.ndarray
    peak_codes: np.ndarray
    trough_codes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.peaks.size)


@dataclass(frozen=True, eq=False)
class MeasurementReport:
    selected_element: int
    element_p2p: Dict[int, float]
    times: np.ndarray
    codes: np.ndarray
    waveform_mmhg: np.ndarray
    calibration: CalibrationMap
    beats: BeatSet
    peak_times: np.ndarray
    mean_systolic: float
    mean_diastolic: float
    heart_rate_bpm: float
    saturations: int = 0
    extra: Dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t_s": self.times, "pressure_mmHg": self.waveform_mmhg})

    def metrics(self) -> Dict:
        data = {
            "selected_element": self.selected_element,
            "beats": self.beats.count,
            "mean_systolic_mmhg": self.mean_systolic,
            "mean_diastolic_mmhg": self.mean_diastolic,
            "heart_rate_bpm": self.heart_rate_bpm,
            "saturations": self.saturations,
        }
        data.update(self.calibration.to_dict())
        for element, p2p in sorted(self.element_p2p.items()):
            data[f"p2p_element_{element}"] = p2p
        data.update(self.extra)
        return data


def robust_peak_to_peak(codes, lo: float = PIPELINE["percentile_low"],
                        hi: float = PIPELINE["percentile_high"]) -> float:
    """Spread between the hi and lo percentiles of the codes."""
    codes = np.asarray(codes, dtype=float)
    if codes.size == 0:
        return 0.0
    upper, lower = np.percentile(codes, [hi, lo])
    return float(upper - lower)


def element_p2p(streams: Dict[int, DecimatedStream],
                min_valid_seconds: float = PIPELINE["min_valid_seconds"],
                lo: float = PIPELINE["percentile_low"],
                hi: float = PIPELINE["percentile_high"]) -> Dict[int, float]:
    """Robust peak-to-peak of every element with enough valid samples."""
    result = {}
    for element, stream in streams.items():
        valid = stream.valid_samples
        if valid.size >= min_valid_seconds * stream.rate:
            result[element] = robust_peak_to_peak(valid, lo, hi)
    return result


def select_strongest(streams: Dict[int, DecimatedStream],
                     min_valid_seconds: float = PIPELINE["min_valid_seconds"],
                     lo: float = PIPELINE["percentile_low"],
                     hi: float = PIPELINE["percentile_high"]) -> int:
    """Element with the largest robust peak-to-peak; ties go to the lowest index."""
    scores = element_p2p(streams, min_valid_seconds, lo, hi)
    if not scores:
        raise NoValidData(f"no element has {min_valid_seconds} s of valid samples")
    best = None
    for element in sorted(scores):
        if best is None or scores[element] > scores[best]:
            best = element
    return best


def extract_beats(codes, rate: float, p2p: float = None,
                  refractory: float = PIPELINE["refractory"],
                  prominence_fraction: float = PIPELINE["prominence_fraction"]) -> BeatSet:
    """
    Per-beat maxima and the minima between consecutive maxima.

    Maxima need a prominence of prominence_fraction * p2p and are at least
    `refractory` seconds apart.
    """
    codes = np.asarray(codes, dtype=float)
    if p2p is None:
        p2p = robust_peak_to_peak(codes)
    distance = max(1, int(round(refractory * rate)))
    peaks, _ = find_peaks(codes, distance=distance, prominence=prominence_fraction * p2p)

    troughs = np.array(
        [a + int(np.argmin(codes[a:b])) for a, b in zip(peaks[:-1], peaks[1:])], dtype=int
    )
    return BeatSet(
        peaks=peaks.astype(int),
        troughs=troughs,
        peak_codes=codes[peaks],
        trough_codes=codes[troughs],
    )


def refine_peak_times(codes, times, peaks, halfwidth: float = PIPELINE["peak_fit_halfwidth"],
                      rate: float = 1000.0) -> np.ndarray:
    """Vertex of a least-squares parabola fitted around every peak."""
    codes = np.asarray(codes, dtype=float)
    times = np.asarray(times, dtype=float)
    half = max(1, int(round(halfwidth * rate)))
    refined = []
    for p in peaks:
        a, b = max(p - half, 0), min(p + half + 1, codes.size)
        t = times[a:b] - times[p]
        if t.size < 3:
            refined.append(times[p])
            continue
        c2, c1, _ = np.polyfit(t, codes[a:b], 2)
        vertex = -c1 / (2 * c2) if c2 < 0 else 0.0
        refined.append(times[p] + float(np.clip(vertex, t[0], t[-1])))
    return np.asarray(refined)


def scan_and_select(chain: Chain, duration: float = None, params: Dict = None,
                    verbose: bool = True) -> Tuple[int, Dict[int, float], Dict[int, DecimatedStream]]:
    """Round-robin scan of the array and selection of the strongest element."""
    params = {**PIPELINE, **(params or {})}
    duration = duration or chain.scene.duration

    result = scan(
        chain.scene, chain.layout, chain.schedule, chain.modulator, duration,
        chain.geometry, chain.material, chain.contact_fraction, chain.quadrature_points,
    )
    streams = decimate_scan(result, chain.cic, chain.fir)
    scores = element_p2p(streams, params["min_valid_seconds"],
                         params["percentile_low"], params["percentile_high"])
    selected = select_strongest(streams, params["min_valid_seconds"],
                                params["percentile_low"], params["percentile_high"])
    if verbose:
        for element, p2p in sorted(scores.items()):
            marker = "✓" if element == selected else " "
            print(f"  {marker} element {element}: p2p = {p2p:.1f} codes")
    return selected, scores, streams


def acquire_element(chain: Chain, element: int, duration: float = None) -> DecimatedStream:
    """Continuous single-element acquisition of the whole duration."""
    duration = duration or chain.scene.duration
    schedule = MuxSchedule(
        element_order=(element,), dwell=chain.schedule.dwell, blanking=chain.schedule.blanking,
    )
    result = scan(
        chain.scene, chain.layout, schedule, chain.modulator, duration,
        chain.geometry, chain.material, chain.contact_fraction, chain.quadrature_points,
    )
    return decimate_scan(result, chain.cic, chain.fir)[element]


def measure(chain: Chain, cuff_reference: Tuple[float, float] = None, params: Dict = None,
            verbose: bool = True) -> MeasurementReport:
    """
    Full measurement on a simulated scene.

    Steps: scan -> select -> re-acquire -> beats -> calibration -> waveform.
    Raises CalibrationImpossible when fewer than two beats are found.
    """
    params = {**PIPELINE, **(params or {})}
    if cuff_reference is None:
        cuff_reference = (params["cuff_systolic"], params["cuff_diastolic"])
    cuff_sys, cuff_dia = cuff_reference

    duration = chain.scene.duration
    if duration < 3 * chain.spec.beat_period:
        raise InvalidSpec("scene must span at least three beats")

    if verbose:
        print(f"\n{'='*60}")
        print(f"Measurement - {chain.spec.systolic:.0f}/{chain.spec.diastolic:.0f} mmHg, "
              f"{chain.spec.heart_rate:.0f} bpm, {duration:.1f} s")
        print(f"{'='*60}\n")
        print("Step 1: Scanning array...")

    selected, scores, streams = scan_and_select(chain, duration, params, verbose)

    if params["reacquire"]:
        if verbose:
            print(f"\nStep 2: Re-acquiring element {selected}...")
        stream = acquire_element(chain, selected, duration)
    else:
        if verbose:
            print(f"\nStep 2: Reusing scanned samples of element {selected}")
        stream = streams[selected]

    codes = stream.valid_samples.astype(float)
    times = stream.valid_times
    p2p = robust_peak_to_peak(codes, params["percentile_low"], params["percentile_high"])

    if verbose:
        print("\nStep 3: Detecting beats...")
    if p2p < params["min_pulse_codes"]:
        raise CalibrationImpossible(f"no pulse: peak-to-peak {p2p:.1f} codes")
    beats = extract_beats(codes, stream.rate, p2p, params["refractory"],
                          params["prominence_fraction"])
    if beats.count < 2:
        raise CalibrationImpossible(f"{beats.count} beat(s) detected, need at least 2")
    if verbose:
        print(f"  ✓ {beats.count} beats")

    if verbose:
        print("\nStep 4: Calibrating...")
    anchors, evaluated = split_beats(beats, times, params["calibration_seconds"])
    calibration = calibrate_two_point(
        float(anchors.peak_codes.mean()), float(anchors.trough_codes.mean()), cuff_sys, cuff_dia,
    )
    waveform = calibration.apply(codes)

    peak_times = refine_peak_times(codes, times, beats.peaks, params["peak_fit_halfwidth"],
                                   stream.rate)
    intervals = np.diff(peak_times)
    heart_rate = float(60.0 / intervals.mean()) if intervals.size else 0.0

    report = MeasurementReport(
        selected_element=selected,
        element_p2p=scores,
        times=times,
        codes=codes,
        waveform_mmhg=waveform,
        calibration=calibration,
        beats=beats,
        peak_times=peak_times,
        mean_systolic=float(waveform[evaluated.peaks].mean()),
        mean_diastolic=float(waveform[evaluated.troughs].mean()),
        heart_rate_bpm=heart_rate,
        saturations=stream.saturations,
        extra={"calibration_beats": anchors.count, "evaluated_beats": evaluated.count},
    )
    if verbose:
        print(f"  ✓ gain {calibration.gain:.5f} mmHg/code, offset {calibration.offset:.2f} mmHg")
        print(f"  ✓ {report.mean_systolic:.1f}/{report.mean_diastolic:.1f} mmHg "
              f"at {heart_rate:.1f} bpm")
        if stream.saturations:
            print(f"  ⚠ {stream.saturations} saturated output samples")
    return report


def split_beats(beats: BeatSet, times, window: float) -> Tuple[BeatSet, BeatSet]:
    """
    Split beats into the calibration window and the rest of the run.

    The window starts at the first sample. A window <= 0 covers the whole
    run, and so does one that leaves no beats after it; both halves are
    then the full set.
    """
    if window <= 0:
        return beats, beats
    times = np.asarray(times)
    end = times[0] + window
    peak_in = times[beats.peaks] < end
    trough_in = times[beats.troughs] < end
    inside = BeatSet(beats.peaks[peak_in], beats.troughs[trough_in],
                     beats.peak_codes[peak_in], beats.trough_codes[trough_in])
    if inside.count < 2 or inside.troughs.size == 0:
        raise CalibrationImpossible(
            f"calibration window of {window:g} s holds {inside.count} beat(s), need at least 2"
        )
    outside = BeatSet(beats.peaks[~peak_in], beats.troughs[~trough_in],
                      beats.peak_codes[~peak_in], beats.trough_codes[~trough_in])
    if outside.count == 0 or outside.troughs.size == 0:
        return inside, inside
    return inside, outside


def waveform_correlation(report: MeasurementReport, scene) -> float:
    """Pearson correlation of the calibrated wave with the scene's ground truth."""
    truth = np.interp(report.times, scene.times, scene.waveform)
    return float(np.corrcoef(report.waveform_mmhg, truth)[0, 1])

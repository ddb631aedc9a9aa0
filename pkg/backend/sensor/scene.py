"""
Pressure Scene Module
Synthetic arterial pressure waveform and its mapping onto the sensor array.

Waveform model (per beat, fractions of the beat period T):
- Systolic Gaussian at 0.18 T, width 0.07 T
- Dicrotic Gaussian at 0.42 T, width 0.05 T, amplitude 0.3
- Each beat is rescaled so its minimum is the diastolic and its maximum the
  systolic pressure.

Spatial model: an element at distance d from the vessel sees
    p = contact_bias + waveform(t) * exp(-d^2 / (2 * width^2)) - backpressure
"""
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import MMHG_TO_PA, SCENE, MEMBRANE
from errors import IndexOutOfRange, InvalidSpec

# Beat morphology
SYSTOLIC_CENTER = 0.18
SYSTOLIC_WIDTH = 0.07
DICROTIC_CENTER = 0.42
DICROTIC_WIDTH = 0.05
DICROTIC_RATIO = 0.3
HARMONICS_COVERED = 20

# Dense grid used to find each beat's extrema before rescaling
_TEMPLATE_POINTS = 4096


@dataclass(frozen=True)
class ArterialWaveformSpec:
    heart_rate: float = SCENE["heart_rate"]
    systolic: float = SCENE["systolic"]
    diastolic: float = SCENE["diastolic"]
    duration: float = SCENE["duration"]
    sample_rate: float = SCENE["sample_rate"]
    morphology_seed: int = SCENE["morphology_seed"]

    def __post_init__(self):
        if not self.systolic > self.diastolic > 0:
            raise InvalidSpec("need systolic > diastolic > 0")
        if not 20 <= self.heart_rate <= 300:
            raise InvalidSpec("heart_rate must be within [20, 300] bpm")
        if self.duration <= 0:
            raise InvalidSpec("duration must be positive")
        if self.sample_rate <= 2 * HARMONICS_COVERED * self.heart_rate / 60:
            raise InvalidSpec(
                f"sample_rate must exceed {2 * HARMONICS_COVERED * self.heart_rate / 60:.1f} Hz"
            )

    @property
    def beat_period(self) -> float:
        return 60.0 / self.heart_rate

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


@dataclass(frozen=True)
class ArrayLayout:
    rows: int = SCENE["rows"]
    cols: int = SCENE["cols"]
    pitch: float = SCENE["pitch"]
    membrane_side: float = MEMBRANE["side_length"]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidSpec("array needs at least one row and one column")
        if self.pitch <= self.membrane_side:
            raise InvalidSpec("pitch must exceed the membrane side length")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True, eq=False)
class PressureScene:
    waveform: np.ndarray
    sample_rate: float = SCENE["sample_rate"]
    vessel_position: Tuple[float, float] = tuple(SCENE["vessel_position"])
    coupling_width: float = SCENE["coupling_width"]
    contact_bias: float = SCENE["contact_bias"]
    backpressure: float = SCENE["backpressure"]
    start_time: float = 0.0
    times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.coupling_width <= 0:
            raise InvalidSpec("coupling_width must be positive")
        if self.contact_bias < 0:
            raise InvalidSpec("contact_bias must be non-negative")
        waveform = np.asarray(self.waveform, dtype=float)
        object.__setattr__(self, "waveform", waveform)
        object.__setattr__(
            self, "times", self.start_time + np.arange(waveform.size) / self.sample_rate
        )

    @property
    def duration(self) -> float:
        return self.waveform.size / self.sample_rate


def _beat_parameters(spec: ArterialWaveformSpec, n_beats: int) -> dict:
    """Per-beat morphology; jittered only when morphology_seed is non-zero."""
    params = {
        "mu1": np.full(n_beats, SYSTOLIC_CENTER),
        "s1": np.full(n_beats, SYSTOLIC_WIDTH),
        "mu2": np.full(n_beats, DICROTIC_CENTER),
        "s2": np.full(n_beats, DICROTIC_WIDTH),
        "ratio": np.full(n_beats, DICROTIC_RATIO),
    }
    if spec.morphology_seed:
        rng = np.random.default_rng(spec.morphology_seed)
        params["mu1"] += rng.normal(0, 0.005, n_beats)
        params["s1"] *= 1 + rng.normal(0, 0.03, n_beats)
        params["mu2"] += rng.normal(0, 0.01, n_beats)
        params["ratio"] *= 1 + rng.normal(0, 0.05, n_beats)
    return params


def _template(phase, mu1, s1, mu2, s2, ratio):
    """Wrapped two-Gaussian beat on phase in [0, 1)."""
    total = 0.0
    for shift in (-1.0, 0.0, 1.0):
        p = phase + shift
        total = total + np.exp(-0.5 * ((p - mu1) / s1) ** 2)
        total = total + ratio * np.exp(-0.5 * ((p - mu2) / s2) ** 2)
    return total


def _beat_extrema(params: dict):
    """Min/max and peak phase of every beat template on a dense grid."""
    grid = (np.arange(_TEMPLATE_POINTS) / _TEMPLATE_POINTS)[None, :]
    values = _template(
        grid,
        params["mu1"][:, None], params["s1"][:, None],
        params["mu2"][:, None], params["s2"][:, None],
        params["ratio"][:, None],
    )
    peak_phase = grid[0, np.argmax(values, axis=1)]
    return values.min(axis=1), values.max(axis=1), peak_phase


def waveform_times(spec: ArterialWaveformSpec) -> np.ndarray:
    return np.arange(spec.n_samples) / spec.sample_rate


def synth_abp(spec: ArterialWaveformSpec) -> np.ndarray:
    """
    Sampled arterial pressure (mmHg) at spec.sample_rate.

    Every beat spans exactly [diastolic, systolic] on its dense template,
    so sampled extrema are within a small fraction of a mmHg of the targets.
    """
    t = waveform_times(spec)
    period = spec.beat_period
    n_beats = int(np.ceil(spec.duration / period)) + 1
    params = _beat_parameters(spec, n_beats)
    low, high, _ = _beat_extrema(params)

    beat = np.floor(t / period).astype(int)
    phase = t / period - beat
    raw = _template(
        phase, params["mu1"][beat], params["s1"][beat],
        params["mu2"][beat], params["s2"][beat], params["ratio"][beat],
    )
    normalized = (raw - low[beat]) / (high[beat] - low[beat])
    return spec.diastolic + (spec.systolic - spec.diastolic) * normalized


def beat_onsets(spec: ArterialWaveformSpec) -> np.ndarray:
    """Ground-truth systolic peak times within the waveform duration."""
    period = spec.beat_period
    n_beats = int(np.ceil(spec.duration / period)) + 1
    params = _beat_parameters(spec, n_beats)
    _, _, peak_phase = _beat_extrema(params)
    peaks = (np.arange(n_beats) + peak_phase) * period
    return peaks[peaks < spec.duration]


def build_scene(spec: ArterialWaveformSpec, **kwargs) -> PressureScene:
    """Synthesize the waveform and wrap it in a scene."""
    return PressureScene(waveform=synth_abp(spec), sample_rate=spec.sample_rate, **kwargs)


def element_centers(layout: ArrayLayout) -> np.ndarray:
    """
    Element center coordinates (m), array centered on the origin.

    Element index = row * cols + col; x follows columns, y follows rows.
    """
    rows, cols = np.divmod(np.arange(layout.n_elements), layout.cols)
    x = (cols - (layout.cols - 1) / 2) * layout.pitch
    y = (rows - (layout.rows - 1) / 2) * layout.pitch
    return np.column_stack([x, y])


def _check_element(layout: ArrayLayout, element: int):
    if not 0 <= element < layout.n_elements:
        raise IndexOutOfRange(f"element {element} outside 0..{layout.n_elements - 1}")


def coupling_factor(scene: PressureScene, layout: ArrayLayout, element: int) -> float:
    """Gaussian coupling exp(-d^2 / (2 * width^2)) of vessel to element."""
    _check_element(layout, element)
    center = element_centers(layout)[element]
    d2 = float(np.sum((center - np.asarray(scene.vessel_position)) ** 2))
    return float(np.exp(-d2 / (2 * scene.coupling_width ** 2)))


def element_pressure_series(scene: PressureScene, layout: ArrayLayout, element: int,
                            times) -> np.ndarray:
    """Net pressure (Pa) on one element at arbitrary times."""
    coupling = coupling_factor(scene, layout, element)
    mmhg = np.interp(times, scene.times, scene.waveform)
    return scene.contact_bias + mmhg * MMHG_TO_PA * coupling - scene.backpressure


def element_pressure(scene: PressureScene, layout: ArrayLayout, element: int, t: float) -> float:
    """Net pressure (Pa) on one element at time t."""
    return float(element_pressure_series(scene, layout, element, np.asarray([t]))[0])


if __name__ == "__main__":
    spec = ArterialWaveformSpec()
    wave = synth_abp(spec)
    scene = build_scene(spec)
    layout = ArrayLayout()

    print(f"Synthetic wave: {spec.systolic:.0f}/{spec.diastolic:.0f} mmHg at {spec.heart_rate:.0f} bpm")
    print(f"  samples: {wave.size}, min {wave.min():.2f}, max {wave.max():.2f}")
    for element in range(layout.n_elements):
        print(f"  element {element}: coupling {coupling_factor(scene, layout, element):.4f}")

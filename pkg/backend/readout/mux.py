"""
Multiplexed Acquisition Module
Round-robin time-division scan of the sensor array through one modulator.

Each modulator sample is assigned to an element by the schedule. On every
element switch (and at the start) both integrators are reset to zero and
the first `blanking` bits are tagged invalid.
"""
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np
import pandas as pd

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from config import MUX
from errors import InvalidSpec, MembraneContact
from readout.modulator import (
    BitStream, ModulatorConfig, charge_input, input_noise, run_loop,
)
from sensor.membrane import (
    MaterialParams, MembraneGeometry, capacitance_series, reference_capacitance,
)
from sensor.scene import ArrayLayout, PressureScene, element_pressure_series


@dataclass(frozen=True)
class MuxSchedule:
    element_order: Tuple[int, ...] = tuple(MUX["element_order"])
    dwell: int = MUX["dwell"]
    blanking: int = MUX["blanking"]

    def __post_init__(self):
        object.__setattr__(self, "element_order", tuple(int(e) for e in self.element_order))
        if not self.element_order:
            raise InvalidSpec("element_order must not be empty")
        if not self.dwell > self.blanking >= 0:
            raise InvalidSpec("need dwell > blanking >= 0")

    @property
    def revolution(self) -> int:
        """Modulator samples for one pass over every scheduled element."""
        return self.dwell * len(self.element_order)

    def assignment(self, n: int):
        """
        Per-sample element, segment id and blanking flag for n samples.

        A segment is a run of consecutive samples on the same element, so a
        schedule visiting one element never switches after the start.
        """
        idx = np.arange(n)
        slot = idx // self.dwell
        order = np.asarray(self.element_order, dtype=np.int16)
        element = order[slot % order.size]

        switch = np.ones(n, dtype=bool)
        switch[1:] = element[1:] != element[:-1]
        segment = np.cumsum(switch) - 1
        starts = np.flatnonzero(switch)
        offset = idx - starts[segment] if n else idx
        return element, segment.astype(np.int32), offset < self.blanking


@dataclass(frozen=True, eq=False)
class ScanResult:
    """Multiplexed bitstream with its per-bit element tags."""
    bits: BitStream
    element: np.ndarray
    segment: np.ndarray
    blanked: np.ndarray
    schedule: MuxSchedule

    @property
    def valid(self) -> np.ndarray:
        return ~self.blanked

    def segments(self) -> Iterator[Tuple[int, int, int]]:
        """(element, start, stop) for every contiguous segment."""
        if not self.segment.size:
            return
        starts = np.flatnonzero(np.diff(self.segment, prepend=-1))
        stops = np.append(starts[1:], self.segment.size)
        for start, stop in zip(starts, stops):
            yield int(self.element[start]), int(start), int(stop)

    def elements(self) -> List[int]:
        return sorted(set(int(e) for e in np.unique(self.element)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "n": np.arange(len(self.bits)),
            "bit": self.bits.bits.astype(int),
            "element": self.element.astype(int),
            "valid": self.valid,
        })


def element_input_series(scene: PressureScene, layout: ArrayLayout, element: int, times,
                         config: ModulatorConfig, geometry: MembraneGeometry = None,
                         material: MaterialParams = None, contact_fraction: float = None,
                         quadrature_points: int = None):
    """
    Normalized modulator input of one element at the given times.

    Capacitance is evaluated at the scene rate and linearly interpolated
    onto the modulator clock.
    """
    geometry = geometry or MembraneGeometry()
    material = material or MaterialParams()
    pressures = element_pressure_series(scene, layout, element, scene.times)

    kwargs = {}
    if contact_fraction is not None:
        kwargs["contact_fraction"] = contact_fraction
    if quadrature_points is not None:
        kwargs["n"] = quadrature_points
    try:
        c_scene = capacitance_series(geometry, material, pressures, **kwargs)
    except MembraneContact as e:
        index = getattr(e, "sample_index", 0)
        raise MembraneContact(str(e), element=element, time=float(scene.times[index])) from e

    cs = np.interp(times, scene.times, c_scene)
    cref = config.cref or reference_capacitance(geometry)
    return charge_input(cs, config, cref=cref)


def scan(scene: PressureScene, layout: ArrayLayout, schedule: MuxSchedule,
         config: ModulatorConfig, duration: float, geometry: MembraneGeometry = None,
         material: MaterialParams = None, contact_fraction: float = None,
         quadrature_points: int = None) -> ScanResult:
    """
    Time-division acquisition of the scheduled elements.

    Modulator state is reset at the start of every segment. Input noise is
    drawn once for the whole acquisition.
    """
    for element in schedule.element_order:
        if not 0 <= element < layout.n_elements:
            raise InvalidSpec(f"scheduled element {element} outside the array")

    n = int(round(duration * config.sample_rate))
    times = scene.start_time + np.arange(n) / config.sample_rate
    element, segment, blanked = schedule.assignment(n)

    xs = np.zeros(n)
    for e in sorted(set(schedule.element_order)):
        mask = element == e
        if not mask.any():
            continue
        xs[mask] = element_input_series(
            scene, layout, e, times[mask], config, geometry, material, contact_fraction,
            quadrature_points,
        )
    xs = xs + input_noise(n, config)

    bits = np.empty(n, dtype=np.int8)
    starts = np.flatnonzero(np.diff(segment, prepend=-1)) if n else np.array([], dtype=int)
    stops = np.append(starts[1:], n)
    for start, stop in zip(starts, stops):
        bits[start:stop], _ = run_loop(xs[start:stop], config)

    return ScanResult(
        bits=BitStream(bits=bits, sample_rate=config.sample_rate, start_time=scene.start_time),
        element=element,
        segment=segment,
        blanked=blanked,
        schedule=schedule,
    )

"""
Two-Point Calibration
Affine map from raw output codes to mmHg, anchored on the cuff's
systolic and diastolic readings.

Formula:
    gain   = (sys - dia) / (raw_sys - raw_dia)
    offset = sys - gain * raw_sys
"""
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
from errors import DegenerateAnchors, InvalidSpec


@dataclass(frozen=True)
class CalibrationMap:
    gain: float
    offset: float
    anchors: Tuple[float, float, float, float]   # raw_sys, raw_dia, sys_mmHg, dia_mmHg

    def apply(self, codes):
        """Codes to mmHg; anchors map back onto the cuff values exactly."""
        raw_sys, raw_dia, sys_mmhg, dia_mmhg = self.anchors
        codes = np.asarray(codes, dtype=float)
        # Interpolate from the nearer anchor so both anchors are exact
        from_sys = sys_mmhg + self.gain * (codes - raw_sys)
        from_dia = dia_mmhg + self.gain * (codes - raw_dia)
        nearer_sys = np.abs(codes - raw_sys) <= np.abs(codes - raw_dia)
        out = np.where(nearer_sys, from_sys, from_dia)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        raw_sys, raw_dia, sys_mmhg, dia_mmhg = self.anchors
        return {
            "gain_mmhg_per_code": self.gain,
            "offset_mmhg": self.offset,
            "raw_systolic": raw_sys,
            "raw_diastolic": raw_dia,
            "cuff_systolic": sys_mmhg,
            "cuff_diastolic": dia_mmhg,
        }


def calibrate_two_point(raw_sys: float, raw_dia: float, sys_mmhg: float,
                        dia_mmhg: float) -> CalibrationMap:
    """Two-point affine calibration from cuff readings."""
    if raw_sys == raw_dia:
        raise DegenerateAnchors(f"systolic and diastolic codes coincide ({raw_sys})")
    if not sys_mmhg > dia_mmhg:
        raise InvalidSpec("cuff systolic must exceed diastolic")

    gain = (sys_mmhg - dia_mmhg) / (raw_sys - raw_dia)
    if not np.isfinite(gain) or gain == 0:
        raise DegenerateAnchors(f"calibration gain {gain} is unusable")
    offset = sys_mmhg - gain * raw_sys
    return CalibrationMap(
        gain=float(gain), offset=float(offset),
        anchors=(float(raw_sys), float(raw_dia), float(sys_mmhg), float(dia_mmhg)),
    )

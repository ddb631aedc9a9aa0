"""
File Formats Module
Reads and writes every artifact the simulator produces.

- CSV files start with a `# config=<hash>` comment line, then a header row.
- Bitstreams: 16-byte header (b'SDM1', sample_rate u64 LE, bit count u32 LE)
  followed by the bits packed LSB-first, +1 stored as 1.
- Tap listings: `# format=q1.15 ...`, `# scale=32768`, one integer per line.
"""
import struct
from pathlib import Path
import sys

import numpy as np
import pandas as pd

# Add parent to path for config import
sys.path.insert(0, str(Path(__file__).parent.parent))
from errors import InvalidSpec
from analysis.decimation import Q15_SCALE, DecimatedStream
from analysis.spectrum import metrics_json, metrics_text
from readout.modulator import BitStream

BITSTREAM_MAGIC = b"SDM1"
_HEADER = struct.Struct("<4sQI")
FLOAT_FORMAT = "%.9g"


def _open_for_write(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(frame: pd.DataFrame, path, config_hash: str = None) -> Path:
    """Write a frame with the config-hash comment line; output is byte-stable."""
    path = _open_for_write(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# config={config_hash or 'none'}\n")
        frame.to_csv(f, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
    return path


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def save_waveform_csv(path, times, pressures, config_hash: str = None) -> Path:
    frame = pd.DataFrame({"t_s": np.asarray(times), "pressure_mmHg": np.asarray(pressures)})
    return write_csv(frame, path, config_hash)


def load_waveform_csv(path):
    """Returns (times, pressures) arrays."""
    frame = read_csv(path)
    return frame["t_s"].to_numpy(), frame["pressure_mmHg"].to_numpy()


def save_decimated_csv(path, stream: DecimatedStream, config_hash: str = None) -> Path:
    return write_csv(stream.to_frame(), path, config_hash)


def save_spectrum_csv(path, spectrum: pd.DataFrame, config_hash: str = None) -> Path:
    return write_csv(spectrum[["freq_hz", "mag_dbfs"]], path, config_hash)


def save_bitstream(path, stream: BitStream) -> Path:
    """Packed SDM1 file."""
    path = _open_for_write(path)
    header = _HEADER.pack(BITSTREAM_MAGIC, int(stream.sample_rate), len(stream))
    payload = np.packbits(stream.bits > 0, bitorder="little").tobytes()
    path.write_bytes(header + payload)
    return path


def load_bitstream(path) -> BitStream:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidSpec(f"{path}: truncated bitstream header")
    magic, sample_rate, count = _HEADER.unpack_from(raw)
    if magic != BITSTREAM_MAGIC:
        raise InvalidSpec(f"{path}: not an SDM1 bitstream")
    packed = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
    if packed.size * 8 < count:
        raise InvalidSpec(f"{path}: expected {count} bits, file holds {packed.size * 8}")
    ones = np.unpackbits(packed, count=count, bitorder="little")
    return BitStream(bits=2 * ones.astype(np.int8) - 1, sample_rate=int(sample_rate))


def save_bitstream_csv(path, stream: BitStream, config_hash: str = None) -> Path:
    """`n,bit` debug dump."""
    return write_csv(stream.to_frame(), path, config_hash)


def save_taps(path, taps, config_hash: str = None) -> Path:
    path = _open_for_write(path)
    lines = [f"# format=q1.15 config={config_hash or 'none'}", f"# scale={Q15_SCALE}"]
    lines += [str(int(t)) for t in taps]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_taps(path) -> tuple:
    taps = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line.startswith("# scale=") and int(line.split("=", 1)[1]) != Q15_SCALE:
            raise InvalidSpec(f"{path}: unsupported tap scale {line}")
        if line and not line.startswith("#"):
            taps.append(int(line))
    return tuple(taps)


def save_metrics(path_stem, metrics: dict, config_hash: str = None):
    """Writes <stem>.txt (key=value) and <stem>.json; returns both paths."""
    stamped = {**metrics, "config_hash": config_hash or "none"}
    stem = _open_for_write(path_stem)
    txt = stem.with_suffix(".txt")
    js = stem.with_suffix(".json")
    txt.write_text(metrics_text(stamped), encoding="utf-8")
    js.write_text(metrics_json(stamped), encoding="utf-8")
    return txt, js

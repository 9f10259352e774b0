"""Binary backward-flow rasters.

Layout: magic ``MFL1``, width and height as little-endian uint32, then
H x W row-major pairs of little-endian float32 (du, dv).
"""

import logging
import struct
from pathlib import Path

import numpy as np

from trackmine.errors import FormatError
from trackmine.io.atomic import atomic_write_bytes
from trackmine.masks.models import FlowField

logger = logging.getLogger(__name__)

FLOW_MAGIC = b"MFL1"
_HEADER = struct.Struct("<4sII")
_PAYLOAD_DTYPE = np.dtype("<f4")


def encode_flow(flow: FlowField) -> bytes:
    header = _HEADER.pack(FLOW_MAGIC, flow.width, flow.height)
    return header + flow.vectors.astype(_PAYLOAD_DTYPE).tobytes(order="C")


def decode_flow(data: bytes, path: Path | str | None = None) -> FlowField:
    if len(data) < _HEADER.size:
        raise FormatError(f"Flow file truncated: {len(data)} bytes, header needs {_HEADER.size}", path)
    magic, width, height = _HEADER.unpack_from(data)
    if magic != FLOW_MAGIC:
        raise FormatError(f"Bad flow magic {magic!r}, expected {FLOW_MAGIC!r}", path)
    expected = height * width * 2 * _PAYLOAD_DTYPE.itemsize
    payload = data[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"Flow payload has {len(payload)} bytes, expected {expected} for {width}x{height}", path
        )
    vectors = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE).reshape(height, width, 2)
    if not np.all(np.isfinite(vectors)):
        raise FormatError("Flow payload contains non-finite values", path)
    return FlowField(vectors=vectors.astype(np.float64))


def load_flow(path: Path) -> FlowField:
    """Read one flow raster."""
    path = Path(path)
    return decode_flow(path.read_bytes(), path)


def write_flow(flow: FlowField, path: Path) -> None:
    """Write one flow raster (values are stored as float32)."""
    atomic_write_bytes(Path(path), encode_flow(flow))
    logger.debug(f"Wrote {flow.width}x{flow.height} flow to {path}")

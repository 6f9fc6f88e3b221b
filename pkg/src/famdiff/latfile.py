"""Serialization for latent grids and 8-bit heatmap renders.

Latents travel in a tiny binary container: the 8-byte magic ``FAMLAT1\\0``,
three little-endian u32 fields (channels, height, width), then float32
little-endian samples, row-major per channel. Renders use binary PGM (P5),
chosen over PNG so golden files stay byte-exact with zero dependencies.
"""

import struct

import numpy as np

from .errors import FormatError
from .grid import LatentGrid

MAGIC = b"FAMLAT1\x00"
_HEADER = struct.Struct("<III")


def latent_to_bytes(grid: LatentGrid) -> bytes:
    """Encode a grid as FAMLAT1 bytes (float32 payload)."""
    payload = grid.data.astype("<f4").tobytes(order="C")
    return MAGIC + _HEADER.pack(grid.channels, grid.height, grid.width) + payload


def latent_from_bytes(blob: bytes) -> LatentGrid:
    """Decode FAMLAT1 bytes into a grid.

    Raises:
        FormatError: on bad magic, truncated payload, or trailing bytes.
    """
    if len(blob) < len(MAGIC) + _HEADER.size:
        raise FormatError("latent file shorter than its header")
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic, not a FAMLAT1 file")
    c, h, w = _HEADER.unpack_from(blob, len(MAGIC))
    if c < 1 or h < 1 or w < 1:
        raise FormatError(f"invalid dimensions {c}x{h}x{w} in header")
    expected = len(MAGIC) + _HEADER.size + 4 * c * h * w
    if len(blob) < expected:
        raise FormatError(f"payload truncated: expected {expected} bytes, got {len(blob)}")
    if len(blob) > expected:
        raise FormatError(f"trailing bytes: expected {expected} bytes, got {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=len(MAGIC) + _HEADER.size)
    return LatentGrid(flat.astype(np.float64).reshape(c, h, w))


def write_latent(path, grid: LatentGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(latent_to_bytes(grid))


def read_latent(path) -> LatentGrid:
    with open(path, "rb") as fh:
        return latent_from_bytes(fh.read())


def _pgm_bytes(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    return b"P5\n%d %d\n255\n" % (w, h) + pixels.astype(np.uint8).tobytes(order="C")


def render_plane(plane: np.ndarray) -> bytes:
    """Render one (h, w) plane as min-max normalized 8-bit PGM bytes.

    A constant plane renders as mid-gray (128).
    """
    plane = np.asarray(plane, dtype=np.float64)
    lo = float(plane.min())
    hi = float(plane.max())
    if hi > lo:
        scaled = np.rint((plane - lo) * (255.0 / (hi - lo)))
    else:
        scaled = np.full_like(plane, 128.0)
    return _pgm_bytes(scaled)


def render_mosaic(grid: LatentGrid) -> bytes:
    """Render all channels as one PGM, stacked vertically.

    Each channel is min-max normalized independently, so per-channel
    structure stays visible regardless of scale differences.
    """
    tiles = []
    for plane in grid.data:
        lo = float(plane.min())
        hi = float(plane.max())
        if hi > lo:
            tiles.append(np.rint((plane - lo) * (255.0 / (hi - lo))))
        else:
            tiles.append(np.full_like(plane, 128.0))
    return _pgm_bytes(np.vstack(tiles))


def render_unit_plane(plane: np.ndarray) -> bytes:
    """Render one (h, w) plane of values in [0, 1] on an absolute 0..255 scale.

    Used for filter masks, where 0 and 1 must map to black and white
    regardless of the values actually present.
    """
    plane = np.asarray(plane, dtype=np.float64)
    scaled = np.rint(np.clip(plane, 0.0, 1.0) * 255.0)
    return _pgm_bytes(scaled)


def write_pgm(path, blob: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(blob)

import struct

import numpy as np
import pytest

from famdiff.errors import FormatError
from famdiff.grid import LatentGrid
from famdiff.latfile import (
    MAGIC,
    latent_from_bytes,
    latent_to_bytes,
    read_latent,
    render_mosaic,
    render_plane,
    render_unit_plane,
    write_latent,
    write_pgm,
)


def sample_grid():
    rng = np.random.default_rng(0)
    return LatentGrid(rng.normal(size=(3, 4, 5)))


def test_header_layout():
    g = sample_grid()
    blob = latent_to_bytes(g)
    assert blob[:8] == MAGIC == b"FAMLAT1\x00"
    c, h, w = struct.unpack("<III", blob[8:20])
    assert (c, h, w) == (3, 4, 5)
    assert len(blob) == 20 + 4 * 3 * 4 * 5
    payload = np.frombuffer(blob[20:], dtype="<f4").reshape(3, 4, 5)
    assert np.array_equal(payload, g.data.astype(np.float32))


def test_roundtrip_bytes_and_file(tmp_path):
    g = sample_grid()
    back = latent_from_bytes(latent_to_bytes(g))
    assert np.array_equal(back.data, g.data.astype(np.float32).astype(np.float64))
    path = tmp_path / "z.lat"
    write_latent(path, g)
    again = read_latent(path)
    assert np.array_equal(again.data, back.data)


def test_rejects_malformed_blobs():
    g = sample_grid()
    blob = latent_to_bytes(g)
    with pytest.raises(FormatError):
        latent_from_bytes(blob[:10])  # short header
    with pytest.raises(FormatError):
        latent_from_bytes(b"NOTMAGIC" + blob[8:])
    with pytest.raises(FormatError):
        latent_from_bytes(blob[:-4])  # truncated payload
    with pytest.raises(FormatError):
        latent_from_bytes(blob + b"\x00")  # trailing bytes
    zero_dim = MAGIC + struct.pack("<III", 0, 4, 5)
    with pytest.raises(FormatError):
        latent_from_bytes(zero_dim)


def test_render_plane_scales_min_max():
    plane = np.array([[0.0, 1.0], [2.0, 4.0]])
    blob = render_plane(plane)
    assert blob.startswith(b"P5\n2 2\n255\n")
    pixels = blob[len(b"P5\n2 2\n255\n"):]
    assert pixels[0] == 0 and pixels[3] == 255
    flat = render_plane(np.full((2, 2), 3.5))
    assert set(flat[len(b"P5\n2 2\n255\n"):]) == {128}


def test_render_unit_plane_clips():
    plane = np.array([[-0.5, 0.0], [0.5, 2.0]])
    blob = render_unit_plane(plane)
    pixels = blob[len(b"P5\n2 2\n255\n"):]
    assert pixels[0] == 0 and pixels[1] == 0
    assert pixels[2] == 128 and pixels[3] == 255  # rint(127.5) ties to even


def test_render_mosaic_stacks_channels(tmp_path):
    g = sample_grid()
    blob = render_mosaic(g)
    assert blob.startswith(b"P5\n5 12\n255\n")  # 3 channels of 4 rows stacked
    write_pgm(tmp_path / "m.pgm", blob)
    assert (tmp_path / "m.pgm").read_bytes() == blob

"""Pixmap I/O: binary/ASCII parsing, validation, tensor conversion, tiling."""

import numpy as np
import pytest

from octgan.errors import DatasetError
from octgan.ppm import (read_image, read_pgm, read_ppm, save_image_dir,
                        save_image_grid, tensor_to_uint8, uint8_to_tensor,
                        write_pgm, write_ppm)


def random_rgb(rng, h, w):
    return (rng.uniform((h, w, 3)) * 255.999).astype(np.uint8)


def test_p6_roundtrip(tmp_path, rng):
    img = random_rgb(rng, 5, 7)
    path = str(tmp_path / "x.ppm")
    write_ppm(path, img)
    assert np.array_equal(read_ppm(path), img)
    assert np.array_equal(read_image(path), img)


def test_p5_roundtrip(tmp_path, rng):
    img = (rng.uniform((6, 3)) * 255.999).astype(np.uint8)
    path = str(tmp_path / "x.pgm")
    write_pgm(path, img)
    assert np.array_equal(read_pgm(path), img)
    assert np.array_equal(read_image(path), img)


def test_p3_ascii(tmp_path):
    path = tmp_path / "a.ppm"
    path.write_bytes(b"P3\n2 1\n255\n255 0 0   0 128 255\n")
    img = read_ppm(str(path))
    assert np.array_equal(img, [[[255, 0, 0], [0, 128, 255]]])


def test_p2_ascii(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P2\n3 2\n255\n0 1 2\n250 251 252\n")
    img = read_pgm(str(path))
    assert np.array_equal(img, [[0, 1, 2], [250, 251, 252]])


def test_header_comments_are_skipped(tmp_path):
    path = tmp_path / "c.ppm"
    path.write_bytes(b"P6\n# made by hand\n2 1\n# maxval next\n255\n" + bytes([1, 2, 3, 4, 5, 6]))
    img = read_ppm(str(path))
    assert np.array_equal(img, [[[1, 2, 3], [4, 5, 6]]])


@pytest.mark.parametrize("payload,pattern", [
    (b"P6\n2 2\n65535\n" + bytes(24), "maxval"),
    (b"P6\n0 2\n255\n", "dimensions"),
    (b"P6\n2 2\n255\n" + bytes(5), "truncated pixel"),
    (b"P6\n2 2\n", "truncated pixmap header"),
    (b"P3\n2 1\n255\n255 0 0 0 300 0\n", "malformed ASCII"),
    (b"P3\n2 1\n255\n255 0 0\n", "malformed ASCII"),
])
def test_ppm_rejects(tmp_path, payload, pattern):
    path = tmp_path / "bad.ppm"
    path.write_bytes(payload)
    with pytest.raises(DatasetError, match=pattern):
        read_ppm(str(path))


def test_wrong_family_rejected(tmp_path, rng):
    color = str(tmp_path / "c.ppm")
    gray = str(tmp_path / "g.pgm")
    write_ppm(color, random_rgb(rng, 2, 2))
    write_pgm(gray, np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(DatasetError, match="color pixmap"):
        read_ppm(gray)
    with pytest.raises(DatasetError, match="graymap"):
        read_pgm(color)
    other = tmp_path / "x.bin"
    other.write_bytes(b"GIF89a")
    with pytest.raises(DatasetError, match="unrecognized"):
        read_image(str(other))


def test_write_validation(tmp_path):
    with pytest.raises(ValueError):
        write_ppm(str(tmp_path / "x.ppm"), np.zeros((4, 4, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        write_pgm(str(tmp_path / "x.pgm"), np.zeros((4, 4, 1), dtype=np.uint8))


def test_tensor_to_uint8_mapping():
    x = np.array([[[-1.0]], [[0.0]], [[1.0]]])  # (3, 1, 1) CHW
    u = tensor_to_uint8(x)
    assert u.shape == (1, 1, 3)
    assert list(u[0, 0]) == [0, 128, 255]
    # Values beyond the nominal range clip instead of wrapping.
    assert tensor_to_uint8(np.full((3, 1, 1), 9.0))[0, 0, 0] == 255
    assert tensor_to_uint8(np.full((3, 1, 1), -9.0))[0, 0, 0] == 0


def test_uint8_to_tensor_mapping_and_gray():
    u = np.array([[[0, 128, 255]]], dtype=np.uint8)  # (1, 1, 3) HWC
    x = uint8_to_tensor(u)
    assert x.shape == (3, 1, 1)
    assert x[0, 0, 0] == pytest.approx(-1.0)
    assert x[2, 0, 0] == pytest.approx(1.0)
    gray = np.full((2, 2), 10, dtype=np.uint8)
    g = uint8_to_tensor(gray)
    assert g.shape == (3, 2, 2)
    assert np.array_equal(g[0], g[1]) and np.array_equal(g[0], g[2])


def test_conversion_roundtrip_error_bound(rng):
    x = (rng.uniform((2, 3, 4, 4)) * 2.0 - 1.0)
    back = np.stack([uint8_to_tensor(t) for t in tensor_to_uint8(x)])
    assert np.max(np.abs(back - x)) <= 0.5 / 127.5 + 1e-12


def test_save_image_grid_layout(tmp_path, rng):
    imgs = (rng.uniform((5, 3, 4, 4)) * 2.0 - 1.0).astype(np.float32)
    path = str(tmp_path / "grid.ppm")
    save_image_grid(path, imgs, cols=3, pad=2)
    canvas = read_ppm(path)
    # 2 rows x 3 cols of 4px tiles with 2px padding on all sides.
    assert canvas.shape == (2 * 6 + 2, 3 * 6 + 2, 3)
    tiles = tensor_to_uint8(imgs)
    assert np.array_equal(canvas[2:6, 2:6], tiles[0])      # row 0, col 0
    assert np.array_equal(canvas[8:12, 2:6], tiles[3])     # row 1, col 0
    assert np.array_equal(canvas[8:12, 8:12], tiles[4])    # row 1, col 1
    assert np.all(canvas[8:12, 14:18] == 0)                # empty cell stays black


def test_save_image_dir_naming(tmp_path, rng):
    imgs = (rng.uniform((3, 3, 4, 4)) * 2.0 - 1.0).astype(np.float32)
    paths = save_image_dir(str(tmp_path / "out"), imgs, prefix="sample")
    names = [p.split("/")[-1] for p in paths]
    assert names == ["sample_0000.ppm", "sample_0001.ppm", "sample_0002.ppm"]
    for p, img in zip(paths, imgs):
        assert np.array_equal(read_ppm(p), tensor_to_uint8(img))

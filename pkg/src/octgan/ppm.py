"""Dependency-free portable pixmap (PPM) and graymap (PGM) image I/O.

Binary P6/P5 are written; P6/P5 and their ASCII forms P3/P2 are read.
Only maxval 255 is supported.  Arrays are uint8, (H, W, 3) for color and
(H, W) for gray.  Helpers convert between uint8 images and the [-1, 1]
float tensors the models consume.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DatasetError


def _read_tokens(data: bytes, count: int, pos: int) -> tuple[list[bytes], int]:
    """Read whitespace-separated header tokens, skipping # comments."""
    tokens: list[bytes] = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if pos == start:
            raise DatasetError("truncated pixmap header")
        tokens.append(data[start:pos])
    return tokens, pos


def _parse_header(data: bytes, path: str) -> tuple[bytes, int, int, int, int]:
    if len(data) < 2 or data[0:1] != b"P" or data[1:2] not in b"2356":
        raise DatasetError(f"{path}: not a PPM/PGM file")
    magic = data[0:2]
    tokens, pos = _read_tokens(data, 3, 2)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise DatasetError(f"{path}: malformed pixmap header") from None
    if w < 1 or h < 1:
        raise DatasetError(f"{path}: invalid dimensions {w}x{h}")
    if maxval != 255:
        raise DatasetError(f"{path}: unsupported maxval {maxval} (only 255)")
    return magic, w, h, maxval, pos


def read_ppm(path: str) -> np.ndarray:
    """Read a color pixmap as (H, W, 3) uint8."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, _, pos = _parse_header(data, path)
    if magic == b"P6":
        pos += 1  # single whitespace byte after maxval
        raster = data[pos:pos + w * h * 3]
        if len(raster) != w * h * 3:
            raise DatasetError(f"{path}: truncated pixel data")
        return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3).copy()
    if magic == b"P3":
        vals = np.array(data[pos:].split(), dtype=np.int64)
        if vals.size != w * h * 3 or vals.min() < 0 or vals.max() > 255:
            raise DatasetError(f"{path}: malformed ASCII pixel data")
        return vals.astype(np.uint8).reshape(h, w, 3)
    raise DatasetError(f"{path}: expected a color pixmap, got {magic.decode()}")


def read_pgm(path: str) -> np.ndarray:
    """Read a graymap as (H, W) uint8."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, _, pos = _parse_header(data, path)
    if magic == b"P5":
        pos += 1
        raster = data[pos:pos + w * h]
        if len(raster) != w * h:
            raise DatasetError(f"{path}: truncated pixel data")
        return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()
    if magic == b"P2":
        vals = np.array(data[pos:].split(), dtype=np.int64)
        if vals.size != w * h or vals.min() < 0 or vals.max() > 255:
            raise DatasetError(f"{path}: malformed ASCII pixel data")
        return vals.astype(np.uint8).reshape(h, w)
    raise DatasetError(f"{path}: expected a graymap, got {magic.decode()}")


def read_image(path: str) -> np.ndarray:
    """Read PPM or PGM by magic number; gray images come back (H, W)."""
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in (b"P6", b"P3"):
        return read_ppm(path)
    if head in (b"P5", b"P2"):
        return read_pgm(path)
    raise DatasetError(f"{path}: unrecognized image format")


def write_ppm(path: str, img: np.ndarray) -> None:
    """Write (H, W, 3) uint8 as binary P6."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError(f"write_ppm expects (H, W, 3) uint8, got {img.shape} {img.dtype}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def write_pgm(path: str, img: np.ndarray) -> None:
    """Write (H, W) uint8 as binary P5."""
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"write_pgm expects (H, W) uint8, got {img.shape} {img.dtype}")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def tensor_to_uint8(x: np.ndarray) -> np.ndarray:
    """Map (..., C, H, W) values in [-1, 1] to (..., H, W, C) uint8."""
    x = np.asarray(x, dtype=np.float64)
    u = np.clip((x + 1.0) * 127.5, 0.0, 255.0)
    u = np.floor(u + 0.5).astype(np.uint8)
    return np.moveaxis(u, -3, -1)


def uint8_to_tensor(img: np.ndarray) -> np.ndarray:
    """Map (H, W, C) or (H, W) uint8 to (C, H, W) float in [-1, 1]."""
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, None].repeat(3, axis=2)
    x = img.astype(np.float64) / 127.5 - 1.0
    return np.moveaxis(x, -1, 0)


def save_image_grid(path: str, images: np.ndarray, cols: int = 8, pad: int = 2) -> None:
    """Tile (N, 3, S, S) images in [-1, 1] into one PPM grid, row-major."""
    n, c, s, _ = images.shape
    rows = (n + cols - 1) // cols
    canvas = np.zeros((rows * (s + pad) + pad, cols * (s + pad) + pad, 3), dtype=np.uint8)
    tiles = tensor_to_uint8(images)
    for i in range(n):
        r, q = divmod(i, cols)
        y = pad + r * (s + pad)
        x = pad + q * (s + pad)
        canvas[y:y + s, x:x + s] = tiles[i]
    write_ppm(path, canvas)


def save_image_dir(out_dir: str, images: np.ndarray, prefix: str = "img") -> list[str]:
    """Write each (3, S, S) image in [-1, 1] as its own PPM; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    tiles = tensor_to_uint8(images)
    width = max(4, len(str(len(tiles) - 1)))
    for i, tile in enumerate(tiles):
        p = os.path.join(out_dir, f"{prefix}_{i:0{width}d}.ppm")
        write_ppm(p, tile)
        paths.append(p)
    return paths

"""Synthetic corpus, directory ingestion, and epoch batching."""

import numpy as np
import pytest

from octgan.data import (ImageDataset, SyntheticSpec, bilinear_resize,
                         center_crop_square, gaussian_blur,
                         load_image_directory, load_synthetic,
                         make_shapes_images)
from octgan.errors import ConfigError, DatasetError
from octgan.ppm import write_pgm, write_ppm
from octgan.spectrum import band_power, power_spectrum_1d


# ---------------------------------------------------------------------------
# synthetic corpus


def test_shapes_deterministic_per_seed():
    a = make_shapes_images(4, seed=11, size=16)
    b = make_shapes_images(4, seed=11, size=16)
    c = make_shapes_images(4, seed=12, size=16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_shapes_shape_dtype_range():
    imgs = make_shapes_images(3, seed=0, size=32, texture_amplitude=0.1)
    assert imgs.shape == (3, 3, 32, 32)
    assert imgs.dtype == np.float32
    assert imgs.min() >= -1.0 and imgs.max() <= 1.0
    assert imgs.std() > 0.05  # not degenerate


def test_shapes_without_texture_are_band_limited():
    """The blurred corpus at texture amplitude 0 concentrates its power at
    low frequencies: the high band sits at least 40 dB below bin 0."""
    imgs = make_shapes_images(32, seed=3, size=32, texture_amplitude=0.0)
    prof = power_spectrum_1d(imgs)
    rel_db = 10.0 * np.log10(band_power(prof, "high") / prof.power[0])
    assert rel_db <= -40.0


def test_texture_amplitude_restores_high_band_power():
    flat = make_shapes_images(8, seed=3, size=32, texture_amplitude=0.0)
    textured = make_shapes_images(8, seed=3, size=32, texture_amplitude=0.25)
    hp_flat = band_power(power_spectrum_1d(flat), "high")
    hp_tex = band_power(power_spectrum_1d(textured), "high")
    assert hp_tex > 100.0 * hp_flat


def test_spec_parse_defaults_and_roundtrip():
    spec = SyntheticSpec.parse("shapes:2048:1")
    assert (spec.kind, spec.count, spec.seed) == ("shapes", 2048, 1)
    assert spec.texture_amplitude == 0.1
    again = SyntheticSpec.parse(spec.serialize())
    assert again.serialize() == spec.serialize()
    explicit = SyntheticSpec.parse("shapes:64:3:0")
    assert explicit.texture_amplitude == 0.0


@pytest.mark.parametrize("text", [
    "shapes:64",            # too few fields
    "shapes:64:1:0.1:9",    # too many fields
    "blobs:64:1",           # unknown kind
    "shapes:x:1",           # non-integer count
    "shapes:64:y",          # non-integer seed
    "shapes:0:1",           # empty corpus
    "shapes:64:1:-0.5",     # negative amplitude
])
def test_spec_parse_rejects(text):
    with pytest.raises(ConfigError):
        SyntheticSpec.parse(text)


def test_load_synthetic_uses_spec_seed():
    ds = load_synthetic(SyntheticSpec.parse("shapes:5:9"), size=16)
    assert len(ds) == 5
    assert ds.image_size == 16
    assert ds.seed == 9


# ---------------------------------------------------------------------------
# epoch batching


def tagged_dataset(n, seed=0):
    """Dataset whose image i is constant i, so batches reveal their indices."""
    imgs = np.zeros((n, 3, 4, 4), dtype=np.float32)
    imgs += np.arange(n, dtype=np.float32)[:, None, None, None]
    return ImageDataset(imgs, seed=seed)


def drawn_indices(batches):
    return [int(b[j, 0, 0, 0]) for b in batches for j in range(b.shape[0])]


def test_epoch_batches_cover_permutation_and_drop_tail():
    ds = tagged_dataset(10)
    batches = list(ds.epoch_batches(epoch=0, batch_size=3))
    assert len(batches) == 3 == ds.batches_per_epoch(3)
    idx = drawn_indices(batches)
    assert len(idx) == 9
    assert len(set(idx)) == 9  # no repeats; one image dropped
    assert idx != sorted(idx)  # actually shuffled


def test_epoch_order_reproducible_in_isolation():
    """Any epoch's order depends only on (seed, epoch) — the property that
    lets a resumed run replay epoch k without iterating 0..k-1."""
    warm = tagged_dataset(12, seed=4)
    for e in range(5):
        list(warm.epoch_batches(e, 4))
    cold = tagged_dataset(12, seed=4)
    a = drawn_indices(warm.epoch_batches(5, 4))
    b = drawn_indices(cold.epoch_batches(5, 4))
    assert a == b


def test_epoch_orders_differ_across_epochs_and_seeds():
    ds = tagged_dataset(16, seed=1)
    other = tagged_dataset(16, seed=2)
    assert drawn_indices(ds.epoch_batches(0, 8)) != drawn_indices(ds.epoch_batches(1, 8))
    assert drawn_indices(ds.epoch_batches(0, 8)) != drawn_indices(other.epoch_batches(0, 8))


def test_batching_validation():
    ds = tagged_dataset(4)
    with pytest.raises(DatasetError):
        list(ds.epoch_batches(0, 5))
    with pytest.raises(ValueError):
        list(ds.epoch_batches(0, 0))


def test_dataset_shape_validation():
    with pytest.raises(DatasetError):
        ImageDataset(np.zeros((4, 1, 8, 8), dtype=np.float32), seed=0)
    with pytest.raises(DatasetError):
        ImageDataset(np.zeros((0, 3, 8, 8), dtype=np.float32), seed=0)


# ---------------------------------------------------------------------------
# preprocessing primitives


def test_gaussian_blur_preserves_constant_and_mean(rng):
    const = np.full((16, 16), 0.7)
    assert np.allclose(gaussian_blur(const, 1.75), const, atol=1e-12)
    img = rng.normal((16, 16))
    # Circular convolution with a unit-sum kernel preserves the mean exactly.
    assert gaussian_blur(img, 1.75).mean() == pytest.approx(img.mean(), abs=1e-12)


def test_gaussian_blur_reduces_variance(rng):
    img = rng.normal((32, 32))
    assert gaussian_blur(img, 1.75).var() < 0.2 * img.var()


def test_center_crop_square():
    tall = np.arange(10 * 6).reshape(10, 6)
    assert np.array_equal(center_crop_square(tall), tall[2:8, :])
    wide = np.arange(4 * 7 * 3).reshape(4, 7, 3)
    assert np.array_equal(center_crop_square(wide), wide[:, 1:5, :])


def test_bilinear_resize_identity_and_constant():
    img = np.random.default_rng(0).normal(size=(8, 8))
    same = bilinear_resize(img, 8, 8)
    assert np.array_equal(same, img)
    assert same is not img  # a copy, not an alias
    const = np.full((5, 7, 3), 2.5)
    assert np.allclose(bilinear_resize(const, 9, 4), 2.5)


def test_bilinear_downsample_averages_blocks():
    img = np.array([[1.0, 3.0], [5.0, 7.0]])
    out = bilinear_resize(img, 1, 1)
    assert out.shape == (1, 1)
    assert out[0, 0] == pytest.approx(4.0)


def test_bilinear_upsample_is_monotone_on_ramp():
    ramp = np.arange(4, dtype=np.float64)[None, :].repeat(4, axis=0)
    up = bilinear_resize(ramp, 4, 8)
    assert np.all(np.diff(up, axis=1) >= 0)
    assert up.min() >= 0.0 and up.max() <= 3.0


# ---------------------------------------------------------------------------
# directory ingestion


def write_constant_ppm(path, value, h=8, w=8):
    write_ppm(str(path), np.full((h, w, 3), value, dtype=np.uint8))


def test_load_directory_sorted_and_scaled(tmp_path):
    write_constant_ppm(tmp_path / "c.ppm", 255)
    write_constant_ppm(tmp_path / "a.ppm", 0)
    write_constant_ppm(tmp_path / "b.ppm", 128)
    ds, skipped = load_image_directory(str(tmp_path), size=8)
    assert skipped == 0
    assert len(ds) == 3
    # Sorted by name: a (black), b (mid gray), c (white).
    assert ds.images[0].mean() == pytest.approx(-1.0)
    assert ds.images[1].mean() == pytest.approx(128 / 127.5 - 1.0, abs=1e-6)
    assert ds.images[2].mean() == pytest.approx(1.0)


def test_load_directory_skips_junk_and_counts(tmp_path):
    write_constant_ppm(tmp_path / "ok.ppm", 10)
    (tmp_path / "notes.txt").write_text("not an image")
    (tmp_path / "corrupt.ppm").write_bytes(b"P6\n4 4\n255\nshort")
    (tmp_path / "sub").mkdir()
    ds, skipped = load_image_directory(str(tmp_path), size=8)
    assert len(ds) == 1
    assert skipped == 3


def test_load_directory_grayscale_and_crop_resize(tmp_path):
    gray = np.arange(6 * 10, dtype=np.uint8).reshape(6, 10)
    write_pgm(str(tmp_path / "g.pgm"), gray)
    ds, skipped = load_image_directory(str(tmp_path), size=4)
    assert skipped == 0
    assert ds.images.shape == (1, 3, 4, 4)
    # Gray replicated into three identical channels.
    assert np.array_equal(ds.images[0, 0], ds.images[0, 1])
    assert np.array_equal(ds.images[0, 0], ds.images[0, 2])


def test_load_directory_failures(tmp_path):
    with pytest.raises(DatasetError):
        load_image_directory(str(tmp_path / "missing"), size=8)
    (tmp_path / "junk.bin").write_bytes(b"\x00\x01")
    with pytest.raises(DatasetError, match="no usable images"):
        load_image_directory(str(tmp_path), size=8)

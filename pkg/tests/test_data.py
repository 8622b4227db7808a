"""Corpus I/O, resampling, preprocessing, and the synthetic generator."""

import numpy as np
import pytest

from blurlab import data
from blurlab.data import (
    DEFAULT_MEAN_RGB,
    GRID,
    Sample,
    SplitSpec,
    bilinear_resize,
    corpus_stats,
    ingest,
    make_synthetic,
    nearest_resize,
    preprocess,
    read_image,
    read_map,
    read_mask,
    write_corpus,
    write_image,
    write_map,
    write_mask,
)
from blurlab.errors import ConfigError, DataError
from blurlab.layers import upsample_forward


def grid_blocks(mask):
    """Reshape an (s, s) array into (cells, cells, GRID, GRID) blocks."""
    c = mask.shape[0] // GRID
    return mask.reshape(c, GRID, c, GRID).transpose(0, 2, 1, 3)


class TestImageIO:
    def test_image_roundtrip_is_8bit_quantization(self, tmp_path, rng):
        img = rng.uniform(size=(3, 9, 7))
        write_image(tmp_path / "a.png", img)
        back = read_image(tmp_path / "a.png")
        assert back.shape == img.shape
        assert np.array_equal(back, np.rint(img * 255.0) / 255.0)

    def test_mask_roundtrip_exact(self, tmp_path, rng):
        mask = (rng.uniform(size=(11, 13)) > 0.5).astype(np.uint8)
        write_mask(tmp_path / "m.png", mask)
        assert np.array_equal(read_mask(tmp_path / "m.png"), mask)

    def test_map_roundtrip_is_8bit_quantization(self, tmp_path, rng):
        m = rng.uniform(size=(6, 8))
        write_map(tmp_path / "p.png", m)
        assert np.array_equal(read_map(tmp_path / "p.png"), np.rint(m * 255.0) / 255.0)


class TestResampling:
    def test_bilinear_identity_at_same_size(self, rng):
        arr = rng.uniform(size=(3, 10, 12))
        assert np.array_equal(bilinear_resize(arr, 10, 12), arr)

    def test_bilinear_constant_preserved(self):
        out = bilinear_resize(np.full((2, 5, 5), 0.7), 13, 9)
        assert np.allclose(out, 0.7, atol=1e-12)

    def test_bilinear_matches_learned_upsampler_on_integer_factors(self, rng):
        # the fixed transposed-conv upsampler implements the same clamped
        # half-pixel interpolation, so integer-factor resizes must agree
        x = rng.uniform(size=(1, 2, 6, 5))
        for s in (2, 4):
            resized = bilinear_resize(x[0], 6 * s, 5 * s)
            assert np.allclose(upsample_forward(x, s)[0], resized, atol=1e-12)

    def test_nearest_identity_and_binary_safety(self, rng):
        gt = (rng.uniform(size=(9, 9)) > 0.5).astype(np.uint8)
        assert np.array_equal(nearest_resize(gt, 9, 9), gt)
        up = nearest_resize(gt, 21, 30)
        assert set(np.unique(up)) <= {0, 1}
        assert up.dtype == gt.dtype


class TestMakeSynthetic:
    def test_deterministic(self):
        a = make_synthetic(3, 64, seed=4)
        b = make_synthetic(3, 64, seed=4)
        for sa, sb in zip(a, b):
            assert sa.id == sb.id
            assert np.array_equal(sa.image, sb.image)
            assert np.array_equal(sa.gt, sb.gt)
            assert np.array_equal(sa.flat_mask, sb.flat_mask)

    def test_seed_changes_content(self):
        a = make_synthetic(1, 64, seed=0)[0]
        b = make_synthetic(1, 64, seed=1)[0]
        assert not np.array_equal(a.image, b.image)

    def test_shapes_ranges_and_classes(self):
        for s in make_synthetic(6, 64, seed=2):
            assert s.image.shape == (3, 64, 64)
            assert s.gt.shape == (64, 64)
            assert s.image.min() >= 0.0 and s.image.max() <= 1.0
            assert set(np.unique(s.gt)) == {0, 1}
            frac = s.gt.mean()
            assert 0.2 <= frac <= 0.5

    def test_labels_grid_aligned(self):
        for s in make_synthetic(4, 64, seed=5):
            blocks = grid_blocks(s.gt)
            assert np.all(blocks.min(axis=(2, 3)) == blocks.max(axis=(2, 3)))

    def test_flat_patch_geometry(self):
        for s in make_synthetic(5, 64, seed=6):
            assert s.flat_mask.sum() == (2 * GRID) ** 2
            assert not np.any(s.flat_mask & s.gt)  # flats live in the sharp class
            blocks = grid_blocks(s.flat_mask)
            assert np.all(blocks.min(axis=(2, 3)) == blocks.max(axis=(2, 3)))
            for c in range(3):
                vals = s.image[c][s.flat_mask.astype(bool)]
                assert vals.max() == vals.min()

    def test_no_flats_when_disabled(self):
        for s in make_synthetic(3, 64, seed=3, flat_patches=False):
            assert not s.flat_mask.any()

    def test_blurred_region_has_less_gradient_energy(self):
        from scipy import ndimage

        erode = np.ones((5, 5))
        for s in make_synthetic(6, 64, seed=8, flat_patches=False):
            gray = s.image.mean(axis=0)
            gy, gx = np.gradient(gray)
            mag = np.hypot(gy, gx)
            blur_in = ndimage.binary_erosion(s.gt.astype(bool), erode)
            sharp_in = ndimage.binary_erosion(~s.gt.astype(bool), erode)
            assert mag[blur_in].mean() < 0.5 * mag[sharp_in].mean()

    def test_size_validation(self):
        with pytest.raises(ConfigError):
            make_synthetic(1, 65)
        with pytest.raises(ConfigError):
            make_synthetic(1, 48)


class TestIngest:
    def test_roundtrip_and_split_rules(self, tmp_path):
        samples = make_synthetic(4, 64, seed=3, flat_patches=False)
        write_corpus(samples, tmp_path)

        train, test = ingest(tmp_path, SplitSpec("odd"))
        assert [s.id for s in train] == ["synth_000", "synth_002"]
        assert [s.id for s in test] == ["synth_001", "synth_003"]

        train, test = ingest(tmp_path, SplitSpec("even"))
        assert [s.id for s in train] == ["synth_001", "synth_003"]

        train, test = ingest(tmp_path, SplitSpec("all"))
        assert len(train) == 4 and len(test) == 0

        spec = SplitSpec("stems", frozenset({"synth_002"}))
        train, test = ingest(tmp_path, spec)
        assert [s.id for s in train] == ["synth_002"]
        assert len(test) == 3

    def test_masks_roundtrip_exactly(self, tmp_path):
        samples = make_synthetic(2, 64, seed=9, flat_patches=False)
        write_corpus(samples, tmp_path)
        train, test = ingest(tmp_path, SplitSpec("all"))
        loaded = {s.id: s for s in train}
        for orig in samples:
            assert np.array_equal(loaded[orig.id].gt, orig.gt)
            assert np.allclose(loaded[orig.id].image, orig.image, atol=1 / 510 + 1e-12)

    def test_category_from_stem_prefix(self, tmp_path):
        samples = make_synthetic(1, 64, seed=0, flat_patches=False)
        write_corpus(samples, tmp_path)
        train, _ = ingest(tmp_path, SplitSpec("all"))
        assert train[0].category == "synth"

    def test_missing_mask_names_the_stem(self, tmp_path):
        write_corpus(make_synthetic(2, 64, seed=1, flat_patches=False), tmp_path)
        (tmp_path / "masks" / "synth_001.png").unlink()
        with pytest.raises(DataError, match="synth_001"):
            ingest(tmp_path)

    def test_shape_mismatch_names_the_stem(self, tmp_path):
        write_corpus(make_synthetic(1, 64, seed=1, flat_patches=False), tmp_path)
        write_mask(tmp_path / "masks" / "synth_000.png", np.zeros((32, 32), np.uint8))
        with pytest.raises(DataError, match="synth_000"):
            ingest(tmp_path)

    def test_empty_and_missing_directories(self, tmp_path):
        with pytest.raises(DataError):
            ingest(tmp_path)
        (tmp_path / "images").mkdir()
        (tmp_path / "masks").mkdir()
        with pytest.raises(DataError):
            ingest(tmp_path)

    def test_split_spec_validation(self):
        with pytest.raises(ConfigError):
            SplitSpec("halves")
        with pytest.raises(ConfigError):
            SplitSpec("stems")


class TestCorpusStats:
    def test_hand_counts(self):
        gt0 = np.zeros((4, 4), np.uint8)
        gt1 = np.ones((4, 4), np.uint8)
        img = np.zeros((3, 4, 4))
        stats = corpus_stats(
            [Sample("a1", img, gt0, "a"), Sample("a2", img, gt1, "a"), Sample("b1", img, gt1, "b")]
        )
        assert stats.n_images == 3
        assert stats.n_pixels == 48
        assert stats.positive_fraction == pytest.approx(32 / 48)
        assert stats.categories == {"a": 2, "b": 1}
        assert stats.to_dict()["categories"] == {"a": 2, "b": 1}

    def test_empty(self):
        with pytest.raises(DataError):
            corpus_stats([])


class TestPreprocess:
    def test_resize_to_target(self):
        s = make_synthetic(1, 64, seed=0)[0]
        out = preprocess(s, target_size=128)
        assert out.image.shape == (3, 128, 128)
        assert out.gt.shape == (128, 128)
        assert set(np.unique(out.gt)) <= {0, 1}
        assert out.flat_mask.shape == (128, 128)

    def test_native_size_with_zero_mean_is_identity(self):
        s = make_synthetic(1, 64, seed=0)[0]
        out = preprocess(s, target_size=0, mean_rgb=(0.0, 0.0, 0.0))
        assert np.array_equal(out.image, s.image)
        assert np.array_equal(out.gt, s.gt)
        out.image[:] = -1  # result owns its buffers
        assert s.image.min() >= 0.0

    def test_mean_subtraction(self):
        s = make_synthetic(1, 64, seed=0)[0]
        out = preprocess(s, target_size=0)
        expect = s.image - np.asarray(DEFAULT_MEAN_RGB)[:, None, None]
        assert np.array_equal(out.image, expect)

    def test_target_must_be_grid_divisible(self):
        s = make_synthetic(1, 64, seed=0)[0]
        with pytest.raises(ConfigError):
            preprocess(s, target_size=100)

    def test_mean_shape_checked(self):
        s = make_synthetic(1, 64, seed=0)[0]
        with pytest.raises(ConfigError):
            preprocess(s, target_size=0, mean_rgb=(0.5, 0.5))

    def test_default_mean_matches_pinned_constant(self):
        assert DEFAULT_MEAN_RGB == (0.4815, 0.4578, 0.4082)


class TestWriteCorpus:
    def test_flats_written_only_when_present(self, tmp_path):
        with_flats = make_synthetic(1, 64, seed=0)
        assert write_corpus(with_flats, tmp_path / "a") is True
        assert (tmp_path / "a" / "flats" / "synth_000.png").is_file()

        without = make_synthetic(1, 64, seed=0, flat_patches=False)
        assert write_corpus(without, tmp_path / "b") is False
        assert not (tmp_path / "b" / "flats").exists()

    def test_flat_masks_roundtrip(self, tmp_path):
        samples = make_synthetic(2, 64, seed=4)
        write_corpus(samples, tmp_path)
        for s in samples:
            back = read_mask(tmp_path / "flats" / f"{s.id}.png")
            assert np.array_equal(back, s.flat_mask)

"""Classical patch baselines: gradient statistics and spectral slopes."""

import numpy as np
import pytest
from scipy import ndimage

from blurlab.baselines import (
    GRAD_TAU,
    SLOPE_CENTER,
    SLOPE_SCALE,
    fit_log_slope,
    gradient_stat_map,
    radial_power_spectrum,
    slope_to_confidence,
    spectral_slope_map,
    to_gray,
)
from blurlab.errors import DataError, ShapeError
from oracles import ols_slope, rank_auc


def checkerboard(size, square, amplitude=1.0):
    yy, xx = np.mgrid[0:size, 0:size]
    return (((yy // square) + (xx // square)) % 2).astype(np.float64) * amplitude


def half_blurred_noise(rng, size=64, sigma=3.0):
    """Left half sharp uniform noise, right half Gaussian-blurred."""
    img = rng.uniform(size=(size, size))
    blurred = ndimage.gaussian_filter(img, sigma, mode="nearest")
    out = img.copy()
    out[:, size // 2:] = blurred[:, size // 2:]
    return out


class TestToGray:
    def test_luma_coefficients(self):
        img = np.zeros((3, 1, 1))
        img[0] = 1.0
        assert np.isclose(to_gray(img)[0, 0], 0.299)
        img = np.zeros((3, 1, 1))
        img[1] = 1.0
        assert np.isclose(to_gray(img)[0, 0], 0.587)

    def test_grayscale_passthrough(self):
        g = np.random.default_rng(0).uniform(size=(4, 5))
        assert np.array_equal(to_gray(g), g)

    def test_bad_shape(self):
        with pytest.raises(ShapeError):
            to_gray(np.zeros((2, 3, 3)))


class TestGradientStatMap:
    def test_constant_image_scores_fully_blurry(self):
        conf = gradient_stat_map(np.full((32, 32), 0.4))
        assert conf.shape == (32, 32)
        assert np.all(conf == 1.0)  # exp(0) exactly

    def test_full_contrast_checkerboard_scores_sharp(self):
        # 2 px squares: central differences see the edges every other pixel
        conf = gradient_stat_map(checkerboard(34, 2))
        assert conf.mean() < 0.01

    def test_output_range_and_shape(self, rng):
        img = rng.uniform(size=(40, 30))
        conf = gradient_stat_map(img)
        assert conf.shape == img.shape
        assert np.all((conf > 0) & (conf <= 1))

    def test_additive_constant_invariance(self, rng):
        img = rng.uniform(size=(32, 32))
        assert np.allclose(
            gradient_stat_map(img), gradient_stat_map(img + 123.0), atol=1e-12
        )

    def test_blurred_half_scores_blurrier(self, rng):
        img = half_blurred_noise(rng)
        conf = gradient_stat_map(img)
        sharp = conf[:, :24].mean()    # margin from the seam
        blurred = conf[:, 40:].mean()
        assert blurred > sharp

    def test_stride_subsamples_the_dense_map(self, rng):
        img = rng.uniform(size=(32, 32))
        dense = gradient_stat_map(img)
        strided = gradient_stat_map(img, stride=4)
        assert strided.shape == img.shape
        assert np.array_equal(strided[::4, ::4], dense[::4, ::4])

    def test_patch_larger_than_image(self):
        with pytest.raises(DataError):
            gradient_stat_map(np.zeros((8, 8)), patch_size=17)

    def test_bad_stride(self):
        with pytest.raises(DataError):
            gradient_stat_map(np.zeros((32, 32)), stride=0)


class TestRadialPowerSpectrum:
    def test_pure_cosine_peaks_at_its_ring(self):
        p, f0 = 16, 4
        x = np.arange(p)
        patch = np.cos(2 * np.pi * f0 * x / p)[None, :] * np.ones((p, 1))
        profile = radial_power_spectrum(patch)
        assert int(np.argmax(profile[1:])) + 1 == f0

    def test_constant_patch_is_dc_only(self):
        profile = radial_power_spectrum(np.full((8, 8), 3.0))
        assert profile[0] > 0
        assert np.all(profile[1:] == 0.0)

    def test_requires_square(self):
        with pytest.raises(ShapeError):
            radial_power_spectrum(np.zeros((4, 5)))


class TestFitLogSlope:
    def test_exact_power_law(self):
        r = np.arange(1, 11, dtype=np.float64)
        profile = np.concatenate([[99.0], r ** -2.0])  # index 0 = DC, ignored
        assert abs(fit_log_slope(profile) - (-2.0)) < 1e-12

    def test_matches_ols_oracle(self, rng):
        profile = np.exp(rng.normal(size=12))
        got = fit_log_slope(profile, r_min=1)
        rs = np.arange(1, 12)
        assert abs(got - ols_slope(np.log(rs), np.log(profile[1:]))) < 1e-12

    def test_window_bounds_respected(self, rng):
        profile = np.exp(rng.normal(size=12))
        got = fit_log_slope(profile, r_min=2, r_max=9)
        rs = np.arange(2, 9)
        assert abs(got - ols_slope(np.log(rs), np.log(profile[2:9]))) < 1e-12

    def test_nonpositive_rings_dropped(self):
        profile = np.array([5.0, 1.0, 0.0, 0.25])  # ring 2 unusable
        got = fit_log_slope(profile)
        assert abs(got - ols_slope(np.log([1, 3]), np.log([1.0, 0.25]))) < 1e-12

    def test_too_few_rings(self):
        with pytest.raises(DataError):
            fit_log_slope(np.array([1.0, 1.0]))  # only ring 1 usable
        with pytest.raises(DataError):
            fit_log_slope(np.array([1.0, 1.0, 0.0, -1.0]))


class TestSlopeToConfidence:
    def test_monotone_decreasing_in_slope(self):
        assert slope_to_confidence(-8.0) > slope_to_confidence(-2.0) > slope_to_confidence(0.0)

    def test_center_maps_to_half(self):
        assert np.isclose(slope_to_confidence(SLOPE_CENTER), 0.5)

    def test_range(self, rng):
        # extreme slopes may saturate the logistic to exactly 0 or 1
        c = slope_to_confidence(rng.normal(scale=10, size=100))
        assert np.all((c >= 0) & (c <= 1))
        moderate = slope_to_confidence(np.linspace(-8, 4, 50))
        assert np.all((moderate > 0) & (moderate < 1))


class TestSpectralSlopeMap:
    def test_constant_image_degenerate_convention(self):
        # 0.5 has an exactly representable window mean, so the residual
        # spectrum is exactly zero and every ring is unusable
        for value in (0.5, 0.0):
            conf = spectral_slope_map(np.full((24, 24), value))
            assert np.all(conf == 1.0)

    def test_white_noise_scores_sharp(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(size=(48, 48))
        conf = spectral_slope_map(img)
        assert conf.mean() < 0.1  # slopes near 0 squash to ~0.04
        inner = conf[8:-8, 8:-8]  # replicate padding inflates the border
        assert inner.max() < 0.5

    def test_blurred_noise_slope_strictly_more_negative(self):
        # patch-level comparison over many seeds
        win = np.outer(np.hanning(17), np.hanning(17))
        for seed in range(20):
            rng = np.random.default_rng(seed)
            sharp = rng.uniform(size=(17, 17))
            big = rng.uniform(size=(33, 33))
            blurred = ndimage.gaussian_filter(big, 2.0, mode="nearest")[8:25, 8:25]

            def slope_of(patch):
                w = (patch - patch.mean()) * win
                return fit_log_slope(radial_power_spectrum(w), r_min=2, r_max=9)

            assert slope_of(blurred) < slope_of(sharp)

    def test_map_matches_scalar_composition(self, rng):
        img = rng.uniform(size=(32, 32))
        conf = spectral_slope_map(img)
        p, pad = 17, 8
        padded = np.pad(img, pad, mode="edge")
        win = np.outer(np.hanning(p), np.hanning(p))
        for (i, j) in [(0, 0), (5, 21), (16, 8), (31, 31)]:
            patch = padded[i:i + p, j:j + p]
            w = (patch - patch.mean()) * win
            slope = fit_log_slope(radial_power_spectrum(w), r_min=2, r_max=9)
            expect = slope_to_confidence(slope)
            assert abs(conf[i, j] - expect) < 1e-12

    def test_intensity_scale_invariance_of_slope(self, rng):
        # multiplying a patch by a constant shifts log-power uniformly
        patch = rng.uniform(size=(17, 17))
        win = np.outer(np.hanning(17), np.hanning(17))

        def slope_of(x):
            w = (x - x.mean()) * win
            return fit_log_slope(radial_power_spectrum(w), r_min=2, r_max=9)

        assert abs(slope_of(patch) - slope_of(patch * 37.5)) < 1e-9

    def test_blurred_half_scores_blurrier(self, rng):
        img = half_blurred_noise(rng)
        conf = spectral_slope_map(img)
        assert conf[:, 40:].mean() > conf[:, :24].mean()

    def test_stride_subsamples_the_dense_map(self, rng):
        img = rng.uniform(size=(32, 32))
        dense = spectral_slope_map(img)
        strided = spectral_slope_map(img, stride=4)
        assert strided.shape == img.shape
        assert np.allclose(strided[::4, ::4], dense[::4, ::4], atol=1e-12)

    def test_min_patch_size_enforced(self):
        with pytest.raises(DataError):
            spectral_slope_map(np.zeros((32, 32)), patch_size=9)

    def test_rgb_input_accepted(self, rng):
        img = rng.uniform(size=(3, 24, 24))
        conf = spectral_slope_map(img)
        assert conf.shape == (24, 24)


@pytest.fixture(scope="module")
def scored(baseline_corpus):
    rows = []
    for s in baseline_corpus:
        g = gradient_stat_map(s.image)
        p = spectral_slope_map(s.image)
        rows.append((s, g, p))
    return rows


class TestSeparationInvariant:
    """Both baselines must separate blurred from sharp texture (AUC >= 0.9)
    while scoring inserted flat patches as blurry (the failure mode)."""

    @staticmethod
    def auc_excluding_flats(rows, which):
        pos, neg = [], []
        erode = np.ones((19, 19))  # stay a window-radius away from seams
        for s, g, p in rows:
            conf = g if which == "grad" else p
            blur_in = ndimage.binary_erosion(s.gt.astype(bool), erode)
            sharp_in = ndimage.binary_erosion(
                ~s.gt.astype(bool) & ~s.flat_mask.astype(bool), erode
            )
            pos.extend(conf[blur_in].ravel()[::7])
            neg.extend(conf[sharp_in].ravel()[::7])
        return rank_auc(pos, neg)

    def test_gradstat_auc(self, scored):
        assert self.auc_excluding_flats(scored, "grad") >= 0.9

    def test_spectral_auc(self, scored):
        assert self.auc_excluding_flats(scored, "spec") >= 0.9

    def test_both_mislabel_flat_patches(self, scored):
        erode = np.ones((19, 19))
        for s, g, p in scored:
            interior = ndimage.binary_erosion(s.flat_mask.astype(bool), erode)
            assert interior.any()
            assert g[interior].mean() > 0.5
            assert p[interior].mean() > 0.5

    def test_gradstat_calibration_on_sharp_texture(self, scored):
        # tau was calibrated so sharp-texture confidence sits below 0.2
        erode = np.ones((19, 19))
        vals = []
        for s, g, _ in scored:
            sharp_in = ndimage.binary_erosion(
                ~s.gt.astype(bool) & ~s.flat_mask.astype(bool), erode
            )
            vals.append(g[sharp_in].mean())
        assert np.mean(vals) < 0.2

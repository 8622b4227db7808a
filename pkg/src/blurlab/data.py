"""Dataset ingestion, preprocessing, and synthetic corpus generation.

A corpus on disk is a directory with ``images/`` and ``masks/`` holding
files that pair by stem; masks are binary (gray value > 127 means blurred).
Stems sorted lexicographically define stable 1-based indices, which the
odd/even split rules use: "odd" trains on indices 1, 3, 5, ... and tests on
the rest, "even" the reverse, "all" keeps everything for training.

Preprocessing resizes the image bilinearly (half-pixel sampling, edges
clamped) and the mask by nearest neighbor to a square side divisible by 16,
then subtracts a per-channel mean so inputs are roughly centered.

Synthetic samples compose a colorful smooth field with white noise and a
checkerboard so high frequencies exist everywhere, then Gaussian-blur one
rectangular region (the positive class). Rectangles snap to a 16 px grid so
every label boundary is representable on the coarsest logit grid. Optional
flat patches are constant-color rectangles placed in the sharp region and
labeled non-blurred: locally they are indistinguishable from heavy blur,
which is exactly what defeats patch statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ConfigError, DataError, ShapeError

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")

# Per-channel RGB mean of large natural-image corpora, in [0, 1] scale.
DEFAULT_MEAN_RGB = (0.4815, 0.4578, 0.4082)

DEFAULT_TARGET_SIZE = 384
GRID = 16  # synthetic geometry snaps to the deepest pool stack


@dataclass
class Sample:
    """One image with its binary blur annotation.

    image: (3, h, w) float64; raw samples lie in [0, 1], preprocessed ones
    are mean-shifted. gt: (h, w) uint8 in {0, 1}. flat_mask marks synthetic
    constant patches (None for real data).
    """

    id: str
    image: np.ndarray
    gt: np.ndarray
    category: str = ""
    flat_mask: np.ndarray | None = None


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split rule: "odd", "even", "all", or explicit stems."""

    rule: str = "odd"
    train_stems: frozenset | None = None

    def __post_init__(self):
        if self.rule not in ("odd", "even", "all", "stems"):
            raise ConfigError(f"unknown split rule: {self.rule!r}")
        if self.rule == "stems" and not self.train_stems:
            raise ConfigError("split rule 'stems' needs a non-empty train_stems set")

    def takes_for_training(self, index1, stem):
        if self.rule == "odd":
            return index1 % 2 == 1
        if self.rule == "even":
            return index1 % 2 == 0
        if self.rule == "all":
            return True
        return stem in self.train_stems


def read_image(path):
    """Load an image file as (3, h, w) float64 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def write_image(path, image):
    """Write a (3, h, w) [0, 1] float image as 8-bit RGB."""
    arr = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr.transpose(1, 2, 0), mode="RGB").save(path)


def read_mask(path):
    """Load a binary mask: gray > 127 means positive (blurred)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 127).astype(np.uint8)


def write_mask(path, mask):
    Image.fromarray(np.where(np.asarray(mask) > 0, 255, 0).astype(np.uint8), mode="L").save(path)


def write_gray(path, arr):
    """Write a uint8 array as an 8-bit grayscale image."""
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path)


def read_map(path):
    """Load an 8-bit grayscale blur map as floats in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def write_map(path, map_):
    arr = np.clip(np.rint(np.asarray(map_) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def bilinear_resize(arr, out_h, out_w):
    """Half-pixel-aligned bilinear resampling over the last two axes.

    Sample positions are clamped to the source support, and resizing to the
    same shape is an exact identity.
    """
    h, w = arr.shape[-2:]
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    a = arr[..., y0[:, None], x0[None, :]]
    b = arr[..., y0[:, None], x1[None, :]]
    c = arr[..., y1[:, None], x0[None, :]]
    d = arr[..., y1[:, None], x1[None, :]]
    return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d)


def nearest_resize(arr, out_h, out_w):
    """Nearest-neighbor resampling over the last two axes (label-safe)."""
    h, w = arr.shape[-2:]
    yi = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(int), h - 1)
    xi = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(int), w - 1)
    return arr[..., yi[:, None], xi[None, :]]


def _category_of(stem):
    """Leading alphabetic prefix, e.g. 'motion0416' -> 'motion'."""
    out = []
    for ch in stem:
        if ch.isalpha():
            out.append(ch.lower())
        else:
            break
    return "".join(out)


def ingest(root, split=SplitSpec()):
    """Load a corpus directory and split it. Returns (train, test) lists.

    Every image must have a mask with the same stem; missing or unreadable
    pairs are a data error naming the offending stems.
    """
    root = Path(root)
    images_dir = root / "images"
    masks_dir = root / "masks"
    if not images_dir.is_dir() or not masks_dir.is_dir():
        raise DataError(f"corpus root must contain images/ and masks/: {root}")
    image_files = sorted(
        p for p in images_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not image_files:
        raise DataError(f"no images found under {images_dir}")
    missing = []
    pairs = []
    for img_path in image_files:
        stem = img_path.stem
        mask_path = None
        for ext in IMAGE_EXTENSIONS:
            cand = masks_dir / (stem + ext)
            if cand.is_file():
                mask_path = cand
                break
        if mask_path is None:
            missing.append(stem)
        else:
            pairs.append((stem, img_path, mask_path))
    if missing:
        shown = ", ".join(missing[:5])
        raise DataError(f"{len(missing)} images lack masks (e.g. {shown})")

    train, test = [], []
    for index1, (stem, img_path, mask_path) in enumerate(pairs, start=1):
        image = read_image(img_path)
        gt = read_mask(mask_path)
        if gt.shape != image.shape[1:]:
            raise DataError(f"{stem}: mask {gt.shape} does not match image {image.shape[1:]}")
        sample = Sample(stem, image, gt, _category_of(stem))
        (train if split.takes_for_training(index1, stem) else test).append(sample)
    return train, test


@dataclass
class CorpusStats:
    n_images: int
    n_pixels: int
    positive_fraction: float
    categories: dict

    def to_dict(self):
        return {
            "n_images": self.n_images,
            "n_pixels": self.n_pixels,
            "positive_fraction": self.positive_fraction,
            "categories": dict(self.categories),
        }


def corpus_stats(samples):
    """Image count, pixel count, blurred-pixel fraction, per-category counts."""
    if not samples:
        raise DataError("no samples to summarize")
    n_pixels = sum(s.gt.size for s in samples)
    n_pos = sum(int(s.gt.sum()) for s in samples)
    categories = {}
    for s in samples:
        categories[s.category] = categories.get(s.category, 0) + 1
    return CorpusStats(len(samples), n_pixels, n_pos / n_pixels, categories)


def preprocess(sample, target_size=DEFAULT_TARGET_SIZE, mean_rgb=DEFAULT_MEAN_RGB):
    """Resize to target_size x target_size and subtract the channel means.

    target_size must be divisible by 16 (the deepest pool stack); pass None
    or 0 to keep the native size (it must already be divisible by 16 for
    the deepest variants). The returned image leaves [0, 1] by design.
    """
    if target_size:
        if target_size % GRID:
            raise ConfigError(f"target size must be divisible by {GRID}, got {target_size}")
        image = bilinear_resize(sample.image, target_size, target_size)
        gt = nearest_resize(sample.gt, target_size, target_size)
        flat = (
            nearest_resize(sample.flat_mask, target_size, target_size)
            if sample.flat_mask is not None
            else None
        )
    else:
        image = sample.image.copy()
        gt = sample.gt.copy()
        flat = None if sample.flat_mask is None else sample.flat_mask.copy()
    mean = np.asarray(mean_rgb, dtype=np.float64)
    if mean.shape != (3,):
        raise ConfigError(f"mean_rgb must have 3 entries, got shape {mean.shape}")
    image = image - mean[:, None, None]
    return replace(sample, image=image, gt=gt, flat_mask=flat)


def _place_rect(rng, cells, w_cells, h_cells, forbidden):
    """Random grid-aligned rectangle avoiding forbidden cells; None if no room."""
    options = []
    for y0 in range(cells - h_cells + 1):
        for x0 in range(cells - w_cells + 1):
            region = forbidden[y0:y0 + h_cells, x0:x0 + w_cells]
            if not region.any():
                options.append((y0, x0))
    if not options:
        return None
    return options[rng.integers(len(options))]


FLAT_CELLS = 2  # flat patches span 2x2 grid cells so a 17 px window fits inside


def make_synthetic(n=8, size=64, seed=0, flat_patches=True):
    """Generate a deterministic synthetic corpus of n size x size samples.

    Each sample is sharp texture everywhere except one grid-aligned
    rectangle blurred with a random sigma in [2, 6] (the positive class).
    With flat_patches, one constant 32 x 32 rectangle is placed in the
    sharp region and recorded in Sample.flat_mask; it is wide enough that
    patch-feature windows fit fully inside it. Both classes are always
    present. Identical (n, size, seed, flat_patches) reproduce bit-identical
    samples.
    """
    if size % GRID:
        raise ConfigError(f"size must be divisible by {GRID}, got {size}")
    if size < 4 * GRID:
        raise ConfigError(f"size must be at least {4 * GRID}, got {size}")
    rng = np.random.default_rng(seed)
    cells = size // GRID
    samples = []
    for i in range(n):
        base = bilinear_resize(rng.uniform(0.25, 0.75, size=(3, 4, 4)), size, size)
        noise = rng.normal(0.0, 1.0, size=(3, size, size)) * 0.12
        period = int(rng.choice((2, 4)))
        yy, xx = np.mgrid[0:size, 0:size]
        checker = (((yy // period) + (xx // period)) % 2) * 0.16 - 0.08
        img = np.clip(base + noise + checker[None], 0.0, 1.0)

        # blurred rectangle: 20-50% of the area, re-drawn until a flat
        # patch spot remains free when one is requested
        while True:
            w_cells = int(rng.integers(1, cells))
            h_cells = int(rng.integers(1, cells))
            frac = (w_cells * h_cells) / (cells * cells)
            if not 0.2 <= frac <= 0.5:
                continue
            y0 = int(rng.integers(0, cells - h_cells + 1))
            x0 = int(rng.integers(0, cells - w_cells + 1))
            occupied = np.zeros((cells, cells), dtype=bool)
            occupied[y0:y0 + h_cells, x0:x0 + w_cells] = True
            if not flat_patches:
                break
            flat_spot = _place_rect(rng, cells, FLAT_CELLS, FLAT_CELLS, occupied)
            if flat_spot is not None:
                break
        region = np.kron(occupied, np.ones((GRID, GRID), dtype=bool))

        sigma = rng.uniform(2.0, 6.0)
        blurred = ndimage.gaussian_filter(img, (0, sigma, sigma), mode="nearest")
        img = np.where(region[None], blurred, img)
        gt = region.astype(np.uint8)

        flat_mask = np.zeros((size, size), dtype=np.uint8)
        if flat_patches:
            fy, fx = flat_spot
            color = rng.uniform(0.2, 0.8, size=3)
            sl = (
                slice(fy * GRID, (fy + FLAT_CELLS) * GRID),
                slice(fx * GRID, (fx + FLAT_CELLS) * GRID),
            )
            img[:, sl[0], sl[1]] = color[:, None, None]
            flat_mask[sl] = 1
        samples.append(Sample(f"synth_{i:03d}", img, gt, "synth", flat_mask))
    return samples


def write_corpus(samples, root):
    """Write samples as a corpus directory (images/, masks/, flats/)."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    flats_written = False
    for s in samples:
        write_image(root / "images" / f"{s.id}.png", s.image)
        write_mask(root / "masks" / f"{s.id}.png", s.gt)
        if s.flat_mask is not None and s.flat_mask.any():
            (root / "flats").mkdir(parents=True, exist_ok=True)
            write_mask(root / "flats" / f"{s.id}.png", s.flat_mask)
            flats_written = True
    return flats_written

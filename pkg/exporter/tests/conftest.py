"""Synthetic VGG16-shaped checkpoints for exporter tests."""

import numpy as np
import pytest

from blurlab_exporter import VGG16_CONV_STACK


def checkpoint_arrays(seed=0):
    """Random float32 tensors under torchvision naming, plus FC clutter."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for _name, out_c, in_c, idx in VGG16_CONV_STACK:
        arrays[f"features.{idx}.weight"] = rng.standard_normal(
            (out_c, in_c, 3, 3), dtype=np.float32
        )
        arrays[f"features.{idx}.bias"] = rng.standard_normal(out_c, dtype=np.float32)
    arrays["classifier.0.weight"] = rng.standard_normal((8, 8), dtype=np.float32)
    arrays["classifier.0.bias"] = rng.standard_normal(8, dtype=np.float32)
    return arrays


@pytest.fixture(scope="session")
def vgg_arrays():
    return checkpoint_arrays()


@pytest.fixture(scope="session")
def vgg_checkpoint(tmp_path_factory, vgg_arrays):
    path = tmp_path_factory.mktemp("ckpt") / "vgg16.npz"
    np.savez(path, **vgg_arrays)
    return path

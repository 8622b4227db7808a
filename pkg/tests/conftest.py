"""Shared fixtures: synthetic corpora and the slow desk-scale training run."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from blurlab import data, training
from blurlab.data import make_synthetic, preprocess

# Frozen desk-scale recipe: these values were tuned once (see demos/) and the
# acceptance thresholds below them were met with wide margins.
TOY_SEED = 0
TOY_BASE_LR = 2.0 ** -18
TOY_MAX_ITER = 2000
TOY_WIDTH = 0.125
TOY_CONFIG = "V"

OVERFIT_SEED = 1
OVERFIT_BASE_LR = 2.0 ** -16
OVERFIT_MAX_ITER = 300


def prepared_native(samples):
    """Mean-shift samples while keeping their native size."""
    return [preprocess(s, target_size=0) for s in samples]


@pytest.fixture(scope="session")
def toy_corpus():
    """8 synthetic 64x64 samples with flat patches (the thesis corpus)."""
    return make_synthetic(n=8, size=64, seed=TOY_SEED, flat_patches=True)


@pytest.fixture(scope="session")
def toy_trained(toy_corpus):
    """Config V at width 1/8 trained to overfit the synthetic corpus.

    Takes a couple of minutes; shared by the learnability and flat-patch
    acceptance tests.
    """
    prepared = prepared_native(toy_corpus)
    hp = training.Hyperparams(base_lr=TOY_BASE_LR, max_iter=TOY_MAX_ITER, batch_size=3)
    start = time.monotonic()
    net, log = training.train(
        prepared, TOY_CONFIG, hp, width_multiplier=TOY_WIDTH, seed=TOY_SEED
    )
    elapsed = time.monotonic() - start
    return SimpleNamespace(net=net, log=log, prepared=prepared, elapsed=elapsed)


@pytest.fixture(scope="session")
def baseline_corpus():
    """Raw [0,1] synthetic samples for the classical-baseline tests."""
    return make_synthetic(n=4, size=64, seed=7, flat_patches=True)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def corpus_dir(tmp_path):
    """A tiny synthetic corpus written to disk in the directory layout."""
    samples = make_synthetic(n=4, size=64, seed=3, flat_patches=False)
    root = tmp_path / "corpus"
    data.write_corpus(samples, root)
    return root

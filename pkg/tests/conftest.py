"""Shared fixtures.

Trained-model fixtures are session-scoped because training, while only
seconds long, is the dominant cost of the suite; every test that needs a
trained predictor shares the same deterministic instance.
"""

from __future__ import annotations

import numpy as np
import pytest

from scoreforge import (
    AnalyticMixturePredictor,
    TrainConfig,
    default_schedule,
    train_eps_model,
)
from scoreforge.datasets import (
    bump_images,
    degrade_images,
    single_gaussian_spec,
    toy_image_dataset,
    two_mode_spec,
)

TOY_T = 100
IMG_SIZE = 8


@pytest.fixture(scope="session")
def sched():
    return default_schedule(TOY_T)


@pytest.fixture(scope="session")
def two_mode(sched):
    spec = two_mode_spec(dim=2, sep=2.0, sigma=0.5)
    return spec, AnalyticMixturePredictor(spec, sched)


@pytest.fixture(scope="session")
def single_gauss(sched):
    spec = single_gaussian_spec(dim=2, mean=0.5, sigma=1.0)
    return spec, AnalyticMixturePredictor(spec, sched)


@pytest.fixture(scope="session")
def gauss_model(sched, single_gauss):
    """Tiny denoiser trained on the single-Gaussian data."""
    from scoreforge.datasets import gaussian_dataset

    spec, _ = single_gauss
    dataset = gaussian_dataset(spec, 1024, np.random.default_rng(0))
    return train_eps_model(dataset, sched, TrainConfig(steps=3000, seed=0))


@pytest.fixture(scope="session")
def image_model(sched):
    """Tiny denoiser trained on clean + degraded bump images."""
    dataset = toy_image_dataset(512, IMG_SIZE, np.random.default_rng(3))
    return train_eps_model(dataset, sched, TrainConfig(steps=8000, seed=1))


@pytest.fixture(scope="session")
def image_pair():
    """(clean, degraded) probe images not seen in training."""
    rng = np.random.default_rng(11)
    clean = bump_images(8, IMG_SIZE, rng)
    return clean, degrade_images(clean, IMG_SIZE)

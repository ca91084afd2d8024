"""Synthetic desk-scale datasets and mixture builders.

Two families: low-dimensional Gaussian mixtures (where the analytic
oracle is exact) and tiny grayscale "bump" images with a degraded
counterpart (Gaussian-blurred, contrast-reduced) used to train the toy
conditional denoiser. The degraded condition is the distribution-level
analog of a negative prompt.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .conditions import DEGRADED, class_condition
from .denoiser import ConditionedDataset
from .mixture import MixtureComponent, MixtureSpec


def two_mode_spec(
    dim: int = 2,
    sep: float = 2.0,
    sigma: float = 0.25,
    degraded_sigma: float | None = None,
    weights: tuple[float, float] = (0.5, 0.5),
) -> MixtureSpec:
    """Two well-separated modes at +/- sep along the first axis.

    Condition class(0) selects the positive mode, class(1) the negative
    one; null is their weighted union. The degraded condition is the same
    union with inflated variance (a "blurrier" version of the data),
    defaulting to 4x the standard deviation.
    """
    if degraded_sigma is None:
        degraded_sigma = 4.0 * sigma
    mu_a = np.zeros(dim)
    mu_a[0] = sep
    mu_b = -mu_a
    classes = {
        0: [MixtureComponent(mu_a, sigma**2, 1.0)],
        1: [MixtureComponent(mu_b, sigma**2, 1.0)],
    }
    degraded = [
        MixtureComponent(mu_a, degraded_sigma**2, weights[0]),
        MixtureComponent(mu_b, degraded_sigma**2, weights[1]),
    ]
    return MixtureSpec.from_class_mixtures(
        classes, {0: weights[0], 1: weights[1]}, degraded=degraded
    )


def single_gaussian_spec(
    dim: int = 2, mean: float = 0.5, sigma: float = 1.0
) -> MixtureSpec:
    """One Gaussian; class(0) coincides with the marginal."""
    mu = np.full(dim, mean)
    comp = [MixtureComponent(mu, sigma**2, 1.0)]
    return MixtureSpec.from_class_mixtures({0: comp})


def random_mixture_spec(
    rng: np.random.Generator,
    dim: int,
    n_components: int,
    sigma_range: tuple[float, float] = (0.2, 1.0),
    mean_scale: float = 2.0,
) -> MixtureSpec:
    """A random isotropic mixture, for property tests and oracle checks."""
    comps = []
    raw_w = rng.uniform(0.2, 1.0, size=n_components)
    for k in range(n_components):
        comps.append(
            MixtureComponent(
                mean=rng.normal(0.0, mean_scale, size=dim),
                var=float(rng.uniform(*sigma_range) ** 2),
                weight=float(raw_w[k]),
            )
        )
    return MixtureSpec.from_class_mixtures({0: comps})


def gaussian_dataset(
    spec: MixtureSpec, n_per_condition: int, rng: np.random.Generator
) -> ConditionedDataset:
    """Sample labeled rows from every non-null condition of a spec."""
    xs = []
    ys = []
    for cond in spec.conditions:
        if cond.is_null:
            continue
        xs.append(spec.sample(cond, n_per_condition, rng))
        ys.extend([cond] * n_per_condition)
    return ConditionedDataset(x=np.concatenate(xs, axis=0), y=ys)


def bump_images(
    n: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Random smooth single-bump images in [0, 1], shape (n, size*size)."""
    i = np.arange(size)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    out = np.empty((n, size * size))
    for k in range(n):
        ci, cj = rng.uniform(1.0, size - 2.0, size=2)
        radius = rng.uniform(0.8, 1.8)
        amp = rng.uniform(0.7, 1.0)
        img = amp * np.exp(-(((ii - ci) ** 2 + (jj - cj) ** 2) / (2.0 * radius**2)))
        out[k] = img.ravel()
    return out


def degrade_images(x: np.ndarray, size: int, blur_sigma: float = 1.2, contrast: float = 0.5) -> np.ndarray:
    """Blur and reduce contrast, emulating a 'low quality' rendition."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for k in range(x.shape[0]):
        img = x[k].reshape(size, size)
        blurred = gaussian_filter(img, sigma=blur_sigma, mode="nearest")
        mean = blurred.mean()
        out[k] = (contrast * (blurred - mean) + mean).ravel()
    return out


def toy_image_dataset(
    n: int, size: int, rng: np.random.Generator
) -> ConditionedDataset:
    """Clean bump images labeled class(0) plus their degraded copies
    labeled with the degraded condition."""
    clean = bump_images(n, size, rng)
    degraded = degrade_images(clean, size)
    x = np.concatenate([clean, degraded], axis=0)
    y = [class_condition(0)] * n + [DEGRADED] * n
    return ConditionedDataset(x=x, y=y)

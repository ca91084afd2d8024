"""Noise-schedule table for the served model."""

from __future__ import annotations

import numpy as np


def linear_alpha_bars(
    T: int = 1000, beta_start: float = 0.00085, beta_end: float = 0.012,
    scaled: bool = True,
) -> np.ndarray:
    """Cumulative signal coefficients for a linear-in-sqrt(beta) ramp.

    With scaled=True the interpolation runs in sqrt(beta) space (the
    convention of the latent-diffusion checkpoints this bridge fronts);
    scaled=False interpolates beta directly.
    """
    if scaled:
        betas = (
            np.linspace(beta_start**0.5, beta_end**0.5, T, dtype=np.float64) ** 2
        )
    else:
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    return np.cumprod(1.0 - betas)

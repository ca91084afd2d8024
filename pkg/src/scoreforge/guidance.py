"""Classifier-free guidance combination.

The guided prediction extrapolates the conditional one away from the
unconditional one:

    eps_s = eps_uncond + s * (eps_cond - eps_uncond).

s = 0 returns the unconditional prediction, s = 1 the conditional one,
and the map is affine in s.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError


def cfg_combine(
    eps_uncond: np.ndarray, eps_cond: np.ndarray, s: float
) -> np.ndarray:
    """Combine unconditional and conditional predictions at scale s."""
    eps_uncond = np.asarray(eps_uncond, dtype=np.float64)
    eps_cond = np.asarray(eps_cond, dtype=np.float64)
    if eps_uncond.shape != eps_cond.shape:
        raise DimensionError(
            f"shape mismatch {eps_uncond.shape} vs {eps_cond.shape}"
        )
    if s == 0.0:
        return eps_uncond.copy()
    if s == 1.0:
        return eps_cond.copy()
    return eps_uncond + s * (eps_cond - eps_uncond)

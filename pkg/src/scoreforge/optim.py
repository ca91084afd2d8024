"""Adam with bias correction and optional decoupled weight decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError


@dataclass
class AdamState:
    """First/second moment accumulators and step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @staticmethod
    def zeros(n: int) -> "AdamState":
        return AdamState(m=np.zeros(n), v=np.zeros(n), step=0)


def adam_step(
    state: AdamState,
    theta: np.ndarray,
    grad: np.ndarray,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps_hat: float = 1e-8,
    weight_decay: float = 0.0,
) -> tuple[AdamState, np.ndarray]:
    """One Adam update; returns the new state and parameters.

    Decay, when nonzero, is decoupled (applied to theta directly, not
    through the moments). Inputs are not mutated.
    """
    grad = np.asarray(grad, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient passed to adam_step")
    b1, b2 = betas
    step = state.step + 1
    m = b1 * state.m + (1.0 - b1) * grad
    v = b2 * state.v + (1.0 - b2) * grad * grad
    m_hat = m / (1.0 - b1**step)
    v_hat = v / (1.0 - b2**step)
    new_theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps_hat)
    if weight_decay != 0.0:
        new_theta = new_theta - lr * weight_decay * theta
    return AdamState(m=m, v=v, step=step), new_theta

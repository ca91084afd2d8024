"""Splitting a guided prediction into condition, domain, and denoising parts.

The guided prediction decomposes as

    guided = delta_d + delta_n + s * delta_c,

where delta_c is the difference between conditional and unconditional
predictions, delta_d estimates the correction that pulls an off-manifold
sample toward the data manifold, and delta_n is defined as the remainder
of the unconditional prediction (there is no general way to measure it
independently).

delta_d uses a piecewise rule: below a threshold timestep the remaining
noise is small enough that the whole unconditional prediction is taken as
domain correction; at and above the threshold it is approximated by the
difference between the unconditional prediction and the prediction under
a "degraded" (negative) condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import DEGRADED, NULL, Condition
from .exceptions import DimensionError
from .guidance import cfg_combine
from .schedule import NoiseSchedule, add_noise


def default_tau(T: int) -> int:
    """Threshold timestep below which delta_d is the whole unconditional
    prediction; 20% of the schedule."""
    return max(1, round(0.2 * T))


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation of two flattened vectors; 0.0 when either side
    is constant."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.sum(da * db) / denom, -1.0, 1.0))


@dataclass(frozen=True)
class DecomposedScore:
    """The three components plus the guided prediction they recombine into.

    delta_n is the complement eps_uncond - delta_d by definition, so
    guided == delta_d + delta_n + s * delta_c holds to float rounding.
    """

    delta_c: np.ndarray
    delta_d: np.ndarray
    delta_n: np.ndarray
    guided: np.ndarray
    s: float
    t: int

    def recombined(self) -> np.ndarray:
        return self.delta_d + self.delta_n + self.s * self.delta_c


@dataclass(frozen=True)
class ResidualScanRow:
    """Averaged residual statistics at one timestep."""

    t: int
    residual_norm: float
    correlation: float


def condition_direction(
    pred, z: np.ndarray, y: Condition, t: int
) -> np.ndarray:
    """delta_c = eps(z; y, t) - eps(z; null, t); exactly two predictor calls.

    For a deterministic predictor the null condition yields an exact zero
    vector (both calls coincide).
    """
    eps_cond = pred.predict(z, y, t)
    eps_uncond = pred.predict(z, NULL, t)
    return eps_cond - eps_uncond


def domain_direction(
    pred,
    z: np.ndarray,
    t: int,
    tau: int,
    y_neg: Condition = DEGRADED,
) -> np.ndarray:
    """Piecewise domain-correction estimate.

    t < tau: the unconditional prediction itself (returned as computed,
    bit-for-bit). t >= tau: unconditional minus the degraded-condition
    prediction.
    """
    eps_uncond = pred.predict(z, NULL, t)
    if t < tau:
        return eps_uncond
    eps_neg = pred.predict(z, y_neg, t)
    return eps_uncond - eps_neg


def decompose_score(
    pred,
    z: np.ndarray,
    y: Condition,
    t: int,
    s: float,
    tau: int,
    y_neg: Condition = DEGRADED,
) -> DecomposedScore:
    """Full decomposition at one (z, y, t, s)."""
    eps_uncond = pred.predict(z, NULL, t)
    if y.is_null:
        delta_c = np.zeros_like(eps_uncond)
        eps_cond = eps_uncond
    else:
        eps_cond = pred.predict(z, y, t)
        delta_c = eps_cond - eps_uncond
    if t < tau:
        delta_d = eps_uncond
    else:
        delta_d = eps_uncond - pred.predict(z, y_neg, t)
    delta_n = eps_uncond - delta_d
    guided = cfg_combine(eps_uncond, eps_cond, s)
    return DecomposedScore(
        delta_c=delta_c,
        delta_d=delta_d,
        delta_n=delta_n,
        guided=guided,
        s=float(s),
        t=int(t),
    )


def probe_id_ood(
    pred,
    x_id: np.ndarray,
    x_ood: np.ndarray,
    eps: np.ndarray,
    t: int,
    sched: NoiseSchedule | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Estimate (delta_n, delta_d) from an in-domain / out-of-domain pair.

    Both samples are noised with the SAME eps; the in-domain prediction
    serves as the denoising estimate and the prediction difference as the
    domain estimate. Identical inputs give an exactly zero domain estimate.
    """
    x_id = np.asarray(x_id, dtype=np.float64)
    x_ood = np.asarray(x_ood, dtype=np.float64)
    if x_id.shape != x_ood.shape:
        raise DimensionError(
            f"x_id shape {x_id.shape} != x_ood shape {x_ood.shape}"
        )
    if sched is None:
        sched = pred.sched
    z_id = add_noise(sched, x_id, t, eps).z
    z_ood = add_noise(sched, x_ood, t, eps).z
    delta_n_est = pred.predict(z_id, NULL, t)
    delta_d_est = pred.predict(z_ood, NULL, t) - delta_n_est
    return delta_n_est, delta_d_est


def domain_correction_step(
    x: np.ndarray,
    delta_d: np.ndarray,
    sched: NoiseSchedule,
    t: int,
    scale: float = 1.0,
) -> np.ndarray:
    """Apply a domain-correction estimate to a clean-space sample.

    A perturbation of the noise prediction changes the implied clean
    sample by -sqrt(1-abar)/sqrt(abar) times as much, so the correction
    enters with that (negative) factor; positive scales move an
    off-manifold x toward the data manifold.
    """
    c_sig, c_noise = sched.signal_noise(t)
    return np.asarray(x, dtype=np.float64) - scale * (c_noise / c_sig) * delta_d


def residual_scan(
    pred,
    x: np.ndarray,
    ts: list[int],
    rng: np.random.Generator,
    n_draws: int = 64,
    sched: NoiseSchedule | None = None,
) -> list[ResidualScanRow]:
    """Statistics of the residual eps_uncond(z_t) - eps across timesteps.

    For each t, averages the residual norm and the residual-vs-x Pearson
    correlation over n_draws fresh noise draws.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if sched is None:
        sched = pred.sched
    x = np.asarray(x, dtype=np.float64)
    rows = []
    for t in ts:
        norms = np.empty(n_draws)
        corrs = np.empty(n_draws)
        for k in range(n_draws):
            eps = rng.standard_normal(x.shape)
            z = add_noise(sched, x, t, eps).z
            residual = pred.predict(z, NULL, t) - eps
            norms[k] = np.linalg.norm(residual)
            corrs[k] = pearson(residual, x)
        rows.append(
            ResidualScanRow(
                t=int(t),
                residual_norm=float(norms.mean()),
                correlation=float(corrs.mean()),
            )
        )
    return rows

"""The four distillation gradient estimators.

Each estimator maps a rendered sample x to a direction in x-space that a
generator's pullback turns into a parameter gradient:

    sds:  w(t) * (guided(z_t) - eps)
    nfsd: w(t) * (delta_d + s * delta_c)          (no -eps noise term)
    dds:  sds(x, y) - sds(x_ref, y_ref)           (shared eps)
    vsd:  w(t) * (guided(z_t) - aux(z_t; y, t))

The caller supplies eps: estimators never draw noise themselves, which is
what makes shared-noise comparisons and paired runs possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import DEGRADED, NULL, Condition
from .decompose import default_tau
from .exceptions import ConfigError, DimensionError, NumericError
from .guidance import cfg_combine
from .schedule import NoiseSchedule, add_noise

ESTIMATORS = ("sds", "nfsd", "dds", "vsd")

# Nominal guidance scales: plain score distillation needs the large scale
# to drown its noise term; the noise-free variants work at the common 7.5.
DEFAULT_CFG_SCALE = {"sds": 100.0, "nfsd": 7.5, "dds": 7.5, "vsd": 7.5}


@dataclass(frozen=True)
class WeightFn:
    """Timestep weighting w(t): constant 1 or (1 - abar_t)."""

    kind: str = "constant_one"

    def __post_init__(self):
        if self.kind not in ("constant_one", "one_minus_alpha_bar"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def __call__(self, sched: NoiseSchedule, t: int) -> float:
        if self.kind == "constant_one":
            sched.check_t(t)
            return 1.0
        return 1.0 - sched.alpha_bar(t)


@dataclass(frozen=True)
class GradEstimate:
    """A distillation direction with its provenance."""

    direction: np.ndarray
    weight: float
    t: int
    estimator: str
    eps_used: np.ndarray

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.weight < 0.0:
            raise ValueError("weight must be >= 0")
        if self.direction.shape != self.eps_used.shape:
            raise DimensionError("direction and eps shapes differ")


def sds_grad(
    pred,
    sched: NoiseSchedule,
    x: np.ndarray,
    y: Condition,
    t: int,
    eps: np.ndarray,
    s: float,
    w: WeightFn = WeightFn(),
) -> GradEstimate:
    """Plain score-distillation direction w(t) * (guided - eps)."""
    z = add_noise(sched, x, t, eps).z
    eps_uncond = pred.predict(z, NULL, t)
    eps_cond = eps_uncond if y.is_null else pred.predict(z, y, t)
    guided = cfg_combine(eps_uncond, eps_cond, s)
    wt = w(sched, t)
    return GradEstimate(
        direction=wt * (guided - eps),
        weight=wt,
        t=int(t),
        estimator="sds",
        eps_used=np.asarray(eps, dtype=np.float64),
    )


def nfsd_grad(
    pred,
    sched: NoiseSchedule,
    x: np.ndarray,
    y: Condition,
    t: int,
    eps: np.ndarray,
    s: float,
    w: WeightFn = WeightFn(),
    tau: int | None = None,
    y_neg: Condition = DEGRADED,
) -> GradEstimate:
    """Noise-free direction w(t) * (delta_d + s * delta_c).

    Costs at most three predictor calls for t >= tau (unconditional,
    conditional, degraded) and two below.
    """
    if tau is None:
        tau = default_tau(sched.T)
    z = add_noise(sched, x, t, eps).z
    eps_uncond = pred.predict(z, NULL, t)
    if y.is_null:
        delta_c = np.zeros_like(eps_uncond)
    else:
        delta_c = pred.predict(z, y, t) - eps_uncond
    if t < tau:
        delta_d = eps_uncond
    else:
        delta_d = eps_uncond - pred.predict(z, y_neg, t)
    wt = w(sched, t)
    return GradEstimate(
        direction=wt * (delta_d + s * delta_c),
        weight=wt,
        t=int(t),
        estimator="nfsd",
        eps_used=np.asarray(eps, dtype=np.float64),
    )


def dds_grad(
    pred,
    sched: NoiseSchedule,
    x: np.ndarray,
    y: Condition,
    x_ref: np.ndarray,
    y_ref: Condition,
    t: int,
    eps: np.ndarray,
    s: float,
    w: WeightFn = WeightFn(),
) -> GradEstimate:
    """Delta direction: difference of two shared-noise SDS evaluations.

    Passing eps once enforces the shared-noise contract. The subtraction
    cancels the injected noise exactly; when x == x_ref the unconditional
    terms cancel too and the direction reduces to
    w(t) * s * (delta_c_edit - delta_c_orig).
    """
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    if x.shape != x_ref.shape:
        raise DimensionError(f"x shape {x.shape} != x_ref shape {x_ref.shape}")
    z = add_noise(sched, x, t, eps).z
    z_ref = add_noise(sched, x_ref, t, eps).z
    eps_u = pred.predict(z, NULL, t)
    eps_c = eps_u if y.is_null else pred.predict(z, y, t)
    eps_u_ref = pred.predict(z_ref, NULL, t)
    eps_c_ref = eps_u_ref if y_ref.is_null else pred.predict(z_ref, y_ref, t)

    wt = w(sched, t)
    two_sds = wt * (
        cfg_combine(eps_u, eps_c, s) - cfg_combine(eps_u_ref, eps_c_ref, s)
    )
    # Reduced form: the -eps terms cancel by construction; the remaining
    # unconditional difference vanishes when z == z_ref.
    reduced = wt * (s * ((eps_c - eps_u) - (eps_c_ref - eps_u_ref)) + (eps_u - eps_u_ref))
    scale = max(float(np.max(np.abs(two_sds))), 1e-30)
    if np.max(np.abs(two_sds - reduced)) > 1e-10 * scale:
        raise NumericError("dds dual-form consistency check failed")
    return GradEstimate(
        direction=two_sds,
        weight=wt,
        t=int(t),
        estimator="dds",
        eps_used=np.asarray(eps, dtype=np.float64),
    )


def vsd_grad(
    pred,
    aux,
    sched: NoiseSchedule,
    x: np.ndarray,
    y: Condition,
    t: int,
    eps: np.ndarray,
    s: float,
    w: WeightFn = WeightFn(),
) -> GradEstimate:
    """Variational direction w(t) * (guided - aux(z_t; y, t)).

    aux is a second predictor, normally fine-tuned online on renders so
    that its prediction approaches the pure denoising component.
    """
    z = add_noise(sched, x, t, eps).z
    eps_uncond = pred.predict(z, NULL, t)
    eps_cond = eps_uncond if y.is_null else pred.predict(z, y, t)
    guided = cfg_combine(eps_uncond, eps_cond, s)
    wt = w(sched, t)
    return GradEstimate(
        direction=wt * (guided - aux.predict(z, y, t)),
        weight=wt,
        t=int(t),
        estimator="vsd",
        eps_used=np.asarray(eps, dtype=np.float64),
    )


def aux_update(
    aux,
    x_batch: np.ndarray,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    steps: int,
    y: Condition = NULL,
    lr: float = 2e-3,
) -> np.ndarray:
    """Fine-tune a trainable aux predictor on rendered samples.

    Runs `steps` denoising-loss gradient steps on the batch (zero steps is
    a no-op). Returns the per-step losses. The aux must be the trainable
    tiny-denoiser implementation; deterministic given the rng state.
    """
    if steps == 0:
        return np.empty(0)
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=np.float64))
    if aux.sched is not sched and aux.sched.to_json() != sched.to_json():
        raise ConfigError("aux predictor schedule differs from run schedule")
    conds = [y] * x_batch.shape[0]
    return aux.train_steps(
        x_batch,
        conds,
        steps=steps,
        rng=rng,
        lr=lr,
        batch_size=x_batch.shape[0],
    )

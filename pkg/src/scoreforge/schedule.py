"""Discrete forward-diffusion noise schedules and sampling steps.

A schedule is the coefficient table of the variance-preserving forward
process

    z_t = sqrt(abar_t) x + sqrt(1 - abar_t) eps,    eps ~ N(0, I),

with abar_t the running product of (1 - beta_i). Timesteps are 1-based:
t runs over 1..T, and abar_0 = 1 is implicit. All tables are float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .conditions import NULL
from .exceptions import ConfigError, DimensionError, TimestepError
from .guidance import cfg_combine

DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02
DEFAULT_T = 1000


@dataclass(frozen=True)
class NoiseSchedule:
    """Forward-process coefficient table.

    Attributes:
        kind: schedule family name ("linear" or "cosine").
        T: number of diffusion timesteps (>= 2).
        betas: shape (T,), per-step noise rates in (0, 1); betas[i] is
            beta_{i+1} in 1-based timestep convention.
        alpha_bars: shape (T,), cumulative products of (1 - beta), strictly
            decreasing and contained in (0, 1).
        beta_start, beta_end: the endpoint parameters the table was built
            from (kept for serialization).
    """

    kind: str
    T: int
    betas: np.ndarray
    alpha_bars: np.ndarray
    beta_start: float
    beta_end: float
    _sqrt_ab: np.ndarray = field(init=False, repr=False, compare=False)
    _sqrt_1mab: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        abars = np.asarray(self.alpha_bars, dtype=np.float64)
        if self.T < 2:
            raise ConfigError(f"schedule needs T >= 2, got T={self.T}")
        if betas.shape != (self.T,) or abars.shape != (self.T,):
            raise ConfigError("betas and alpha_bars must have shape (T,)")
        if not (np.all(betas > 0.0) and np.all(betas < 1.0)):
            raise ConfigError("all betas must lie in (0, 1)")
        if not (np.all(abars > 0.0) and np.all(abars < 1.0)):
            raise ConfigError("all alpha_bars must lie in (0, 1)")
        if not np.all(np.diff(abars) < 0.0):
            raise ConfigError("alpha_bars must be strictly decreasing")
        running = np.cumprod(1.0 - betas)
        if not np.allclose(abars, running, rtol=1e-12, atol=0.0):
            raise ConfigError("alpha_bars inconsistent with betas")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", abars)
        object.__setattr__(self, "_sqrt_ab", np.sqrt(abars))
        object.__setattr__(self, "_sqrt_1mab", np.sqrt(1.0 - abars))

    def check_t(self, t: int) -> int:
        if not isinstance(t, (int, np.integer)):
            raise TimestepError(f"timestep must be an integer, got {t!r}")
        if not 1 <= t <= self.T:
            raise TimestepError(f"timestep {t} outside 1..{self.T}")
        return int(t)

    def alpha_bar(self, t: int) -> float:
        """abar_t for a 1-based timestep; abar_0 = 1 by convention."""
        if t == 0:
            return 1.0
        return float(self.alpha_bars[self.check_t(t) - 1])

    def beta(self, t: int) -> float:
        return float(self.betas[self.check_t(t) - 1])

    def signal_noise(self, t: int) -> tuple[float, float]:
        """(sqrt(abar_t), sqrt(1 - abar_t)) for a 1-based timestep."""
        i = self.check_t(t) - 1
        return float(self._sqrt_ab[i]), float(self._sqrt_1mab[i])

    def to_json(self) -> str:
        """Serialize the defining parameters as a JSON document."""
        doc = {
            "kind": self.kind,
            "T": self.T,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "NoiseSchedule":
        doc = json.loads(text)
        return build_schedule(
            doc["kind"], doc["T"], doc["beta_start"], doc["beta_end"]
        )


@dataclass(frozen=True)
class NoisySample:
    """A noised sample together with the draw that produced it.

    The noise eps is retained because distillation estimators subtract it
    or reuse it across paired evaluations.
    """

    z: np.ndarray
    t: int
    eps: np.ndarray


def build_schedule(
    kind: str,
    T: int,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Construct a noise schedule.

    Args:
        kind: "linear" (betas interpolate beta_start..beta_end),
            "scaled_linear" (interpolation in sqrt(beta) space, the
            convention of the latent-diffusion checkpoints the remote
            bridge fronts), or "cosine" (squared-cosine alpha_bar profile;
            the beta endpoints are ignored beyond a 0.999 cap).
        T: number of timesteps, >= 2.
        beta_start, beta_end: linear-schedule endpoints, each in (0, 1).

    Raises:
        ConfigError: T < 2, endpoints outside (0, 1), or unknown kind.
    """
    if T < 2:
        raise ConfigError(f"schedule needs T >= 2, got T={T}")
    if kind in ("linear", "scaled_linear"):
        if not (0.0 < beta_start < 1.0 and 0.0 < beta_end < 1.0):
            raise ConfigError("beta range must lie within (0, 1)")
        if kind == "linear":
            betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
        else:
            betas = (
                np.linspace(beta_start**0.5, beta_end**0.5, T, dtype=np.float64)
                ** 2
            )
    elif kind == "cosine":
        # Squared-cosine abar profile discretized to betas, capped at 0.999.
        steps = np.arange(T + 1, dtype=np.float64) / T
        f = np.cos((steps + 0.008) / 1.008 * np.pi / 2.0) ** 2
        betas = np.clip(1.0 - f[1:] / f[:-1], 1e-8, 0.999)
    else:
        raise ConfigError(f"unknown schedule kind {kind!r}")
    alpha_bars = np.cumprod(1.0 - betas)
    return NoiseSchedule(
        kind=kind,
        T=int(T),
        betas=betas,
        alpha_bars=alpha_bars,
        beta_start=float(beta_start),
        beta_end=float(beta_end),
    )


def default_schedule(T: int = DEFAULT_T) -> NoiseSchedule:
    """Linear schedule with the conventional endpoints.

    For T != 1000 the endpoints are rescaled by 1000/T so the total
    injected noise (sum of betas) stays comparable; toy tests use T=100
    this way.
    """
    scale = DEFAULT_T / T
    return build_schedule(
        "linear", T, DEFAULT_BETA_START * scale, DEFAULT_BETA_END * scale
    )


def add_noise(
    sched: NoiseSchedule, x: np.ndarray, t: int, eps: np.ndarray
) -> NoisySample:
    """Noise x to timestep t with the given draw.

    z = sqrt(abar_t) x + sqrt(1 - abar_t) eps. The caller supplies eps so
    that paired estimators can share it.
    """
    x = np.asarray(x, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x.shape != eps.shape:
        raise DimensionError(f"x shape {x.shape} != eps shape {eps.shape}")
    c_sig, c_noise = sched.signal_noise(t)
    z = c_sig * x + c_noise * eps
    return NoisySample(z=z, t=int(t), eps=eps)


def ancestral_step(
    sched: NoiseSchedule,
    z_t: np.ndarray,
    eps_hat: np.ndarray,
    t: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One reverse (posterior) step z_t -> z_{t-1}.

    Uses eps_hat as the noise estimate:

        z_{t-1} = (z_t - beta_t / sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t)
                  + sigma_t * xi,

    with sigma_t^2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t and no fresh
    noise at t = 1.
    """
    t = sched.check_t(t)
    z_t = np.asarray(z_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if z_t.shape != eps_hat.shape:
        raise DimensionError(
            f"z shape {z_t.shape} != eps_hat shape {eps_hat.shape}"
        )
    beta_t = sched.beta(t)
    abar_t = sched.alpha_bar(t)
    abar_prev = sched.alpha_bar(t - 1)
    mean = (z_t - beta_t / np.sqrt(1.0 - abar_t) * eps_hat) / np.sqrt(
        1.0 - beta_t
    )
    if t == 1:
        return mean
    sigma = np.sqrt((1.0 - abar_prev) / (1.0 - abar_t) * beta_t)
    return mean + sigma * rng.standard_normal(z_t.shape)


def sample(
    pred,
    sched: NoiseSchedule,
    y,
    s: float,
    rng: np.random.Generator,
    shape: tuple[int, ...] | None = None,
    n: int | None = None,
) -> np.ndarray:
    """Run the full reverse chain from z_T ~ N(0, I) with CFG at every step.

    Args:
        pred: an eps-predictor (see scoreforge.predictors).
        sched: the noise schedule; must match the predictor's.
        y: target condition.
        s: CFG scale, >= 0. s = 1 reduces to the conditional prediction;
            s = 0 to the unconditional one.
        rng: caller-owned generator; consumed for the initial draw and the
            per-step noise.
        shape: sample shape; defaults to (pred.dim,).
        n: if given, run n chains at once (leading batch axis).

    Returns:
        The final z_0, shape `shape` or (n, *shape).
    """
    if s < 0:
        raise ConfigError(f"CFG scale must be >= 0, got {s}")
    if shape is None:
        shape = (pred.dim,)
    full = (n,) + tuple(shape) if n is not None else tuple(shape)
    z = rng.standard_normal(full)
    for t in range(sched.T, 0, -1):
        eps_c = pred.predict(z, y, t)
        if s == 1.0:
            eps_hat = eps_c
        else:
            eps_u = pred.predict(z, NULL, t)
            eps_hat = cfg_combine(eps_u, eps_c, s)
        z = ancestral_step(sched, z, eps_hat, t, rng)
    return z

"""Analytic noise-prediction oracle for Gaussian mixtures.

For data drawn from an isotropic Gaussian mixture per condition,

    p(x | y) = sum_k w_k N(mu_k, var_k * I),

the distribution of z_t = sqrt(abar) x + sqrt(1-abar) eps is again a
mixture with component means sqrt(abar) mu_k and variances
abar * var_k + (1 - abar). The optimal eps-prediction is available in
closed form:

    eps*(z, y, t) = (z - sqrt(abar) E[x | z, y]) / sqrt(1 - abar),

which also equals -sqrt(1-abar) times the gradient of log p_t(z | y).
Components with var_k = 0 (point masses) are allowed; their smoothed
variance is just (1 - abar), which makes eps* reproduce the injected
noise exactly when z was built from the point mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .conditions import NULL, Condition
from .exceptions import ConditionError, DimensionError
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class MixtureComponent:
    """One isotropic component: mean vector, scalar variance, weight."""

    mean: np.ndarray
    var: float
    weight: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        if mean.ndim != 1:
            raise DimensionError("component mean must be a vector")
        if self.var < 0.0:
            raise ValueError(f"component variance must be >= 0, got {self.var}")
        if self.weight <= 0.0:
            raise ValueError(f"component weight must be > 0, got {self.weight}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", float(self.var))
        object.__setattr__(self, "weight", float(self.weight))


class MixtureSpec:
    """Per-condition Gaussian mixtures over a common sample space.

    The NULL condition must always be present (it is the marginal the
    unconditioned predictor sees). Weights are normalized per condition.
    """

    def __init__(self, conditions: dict[Condition, list[MixtureComponent]]):
        if NULL not in conditions:
            raise ConditionError("a mixture spec must define the null condition")
        dims = {
            comp.mean.shape[0]
            for comps in conditions.values()
            for comp in comps
        }
        if len(dims) != 1:
            raise DimensionError(f"inconsistent component dimensions: {dims}")
        (self.dim,) = dims
        self._table: dict[Condition, list[MixtureComponent]] = {}
        for cond, comps in conditions.items():
            if not comps:
                raise ValueError(f"condition {cond} has no components")
            total = sum(c.weight for c in comps)
            self._table[cond] = [
                MixtureComponent(c.mean, c.var, c.weight / total) for c in comps
            ]

    @property
    def conditions(self) -> list[Condition]:
        return list(self._table)

    def components(self, y: Condition) -> list[MixtureComponent]:
        try:
            return self._table[y]
        except KeyError:
            raise ConditionError(f"condition {y} not in mixture spec") from None

    def arrays(self, y: Condition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(means (K,d), vars (K,), weights (K,)) for a condition."""
        comps = self.components(y)
        means = np.stack([c.mean for c in comps])
        variances = np.array([c.var for c in comps])
        weights = np.array([c.weight for c in comps])
        return means, variances, weights

    def sample(
        self, y: Condition, n: int, rng: np.random.Generator
    ) -> np.ndarray:
        """Draw n samples from the condition's mixture, shape (n, dim)."""
        means, variances, weights = self.arrays(y)
        idx = rng.choice(len(weights), size=n, p=weights)
        out = means[idx] + np.sqrt(variances[idx])[:, None] * rng.standard_normal(
            (n, self.dim)
        )
        return out

    @staticmethod
    def from_class_mixtures(
        class_components: dict[int, list[MixtureComponent]],
        class_priors: dict[int, float] | None = None,
        degraded: list[MixtureComponent] | None = None,
    ) -> "MixtureSpec":
        """Build a spec whose null condition is the prior-weighted union of
        the class mixtures."""
        from .conditions import DEGRADED, class_condition

        if class_priors is None:
            class_priors = {cid: 1.0 for cid in class_components}
        total = sum(class_priors.values())
        table: dict[Condition, list[MixtureComponent]] = {}
        marginal: list[MixtureComponent] = []
        for cid, comps in class_components.items():
            table[class_condition(cid)] = comps
            prior = class_priors[cid] / total
            marginal.extend(
                MixtureComponent(c.mean, c.var, prior * c.weight) for c in comps
            )
        table[NULL] = marginal
        if degraded is not None:
            table[DEGRADED] = degraded
        return MixtureSpec(table)


def _posterior_stats(
    means: np.ndarray,
    variances: np.ndarray,
    weights: np.ndarray,
    sched: NoiseSchedule,
    z: np.ndarray,
    t: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common core: responsibilities and per-component noised stats.

    Returns (log responsibilities (..., K), smoothed vars (K,),
    z - sqrt(abar)*mu_k differences (..., K, d)).
    """
    c_sig, _ = sched.signal_noise(t)
    abar = sched.alpha_bar(t)
    svar = abar * variances + (1.0 - abar)  # (K,)
    d = means.shape[1]
    diff = z[..., None, :] - c_sig * means  # (..., K, d)
    sq = np.sum(diff * diff, axis=-1)  # (..., K)
    log_comp = (
        np.log(weights)
        - 0.5 * d * np.log(2.0 * np.pi * svar)
        - 0.5 * sq / svar
    )
    log_resp = log_comp - logsumexp(log_comp, axis=-1, keepdims=True)
    return log_resp, svar, diff


class AnalyticMixturePredictor:
    """Exact eps-predictor for a known per-condition Gaussian mixture.

    Deterministic and vectorized: z may carry leading batch axes.
    """

    def __init__(self, spec: MixtureSpec, sched: NoiseSchedule):
        self.spec = spec
        self.sched = sched
        self.dim = spec.dim

    def _check(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.dim:
            raise DimensionError(
                f"z last axis {z.shape[-1]} != mixture dim {self.dim}"
            )
        self.sched.check_t(t)
        self.spec.components(y)
        return z

    def posterior_mean(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        """E[x | z_t = z, y] under the mixture posterior."""
        z = self._check(z, y, t)
        means, variances, weights = self.spec.arrays(y)
        c_sig, _ = self.sched.signal_noise(t)
        log_resp, svar, diff = _posterior_stats(
            means, variances, weights, self.sched, z, t
        )
        resp = np.exp(log_resp)  # (..., K)
        # E[x | z, k] = mu_k + sqrt(abar) var_k / svar_k * (z - sqrt(abar) mu_k)
        shrink = c_sig * variances / svar  # (K,)
        cond_mean = means + shrink[:, None] * diff  # (..., K, d)
        return np.sum(resp[..., None] * cond_mean, axis=-2)

    def predict(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        """eps*(z, y, t), same shape as z."""
        z = self._check(z, y, t)
        c_sig, c_noise = self.sched.signal_noise(t)
        post = self.posterior_mean(z, y, t)
        return (z - c_sig * post) / c_noise

    def log_density(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        """log p_t(z | y), the smoothed mixture log-density at timestep t."""
        z = self._check(z, y, t)
        means, variances, weights = self.spec.arrays(y)
        abar = self.sched.alpha_bar(t)
        c_sig, _ = self.sched.signal_noise(t)
        svar = abar * variances + (1.0 - abar)
        d = means.shape[1]
        diff = z[..., None, :] - c_sig * means
        sq = np.sum(diff * diff, axis=-1)
        log_comp = (
            np.log(weights)
            - 0.5 * d * np.log(2.0 * np.pi * svar)
            - 0.5 * sq / svar
        )
        return logsumexp(log_comp, axis=-1)

    def score(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        """grad_z log p_t(z | y); equals -eps* / sqrt(1 - abar)."""
        z = self._check(z, y, t)
        _, c_noise = self.sched.signal_noise(t)
        return -self.predict(z, y, t) / c_noise


class ConditionBlindPredictor:
    """Wraps a predictor so every condition resolves to its null mixture.

    Used for oracles of condition-independent distributions (e.g. the
    output distribution of a generator, which has no notion of y).
    """

    def __init__(self, inner):
        self.inner = inner
        self.dim = inner.dim
        self.sched = inner.sched

    def predict(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        return self.inner.predict(z, NULL, t)


def point_mass_predictor(
    x: np.ndarray, sched: NoiseSchedule, var: float = 0.0
) -> ConditionBlindPredictor:
    """Oracle for a distribution concentrated at a single x.

    With var = 0 its prediction on z built from x reproduces the injected
    noise exactly, for every condition (the point mass is
    condition-independent).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    comp = [MixtureComponent(mean=x, var=var, weight=1.0)]
    spec = MixtureSpec({NULL: comp})
    return ConditionBlindPredictor(AnalyticMixturePredictor(spec, sched))

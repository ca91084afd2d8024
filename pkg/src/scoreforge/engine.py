"""The distillation optimization loop.

One iteration draws a timestep (with annealing of the maximum), draws a
noise vector, renders the generator, evaluates the configured estimator,
pulls the direction back to parameter space, and takes an Adam step. The
(timestep, noise) sequence comes from a dedicated stream derived only
from the seed, so runs that differ in estimator but share a seed see
bitwise-identical draws.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .artifacts import hash_draw, sha256_json
from .conditions import DEGRADED, NULL, Condition
from .decompose import default_tau
from .distill import (
    DEFAULT_CFG_SCALE,
    ESTIMATORS,
    WeightFn,
    aux_update,
    dds_grad,
    nfsd_grad,
    sds_grad,
    vsd_grad,
)
from .exceptions import ConfigError, NumericError
from .generators import GeneratorParams, pullback, render
from .optim import AdamState, adam_step
from .schedule import NoiseSchedule, add_noise


@dataclass(frozen=True)
class AnnealConfig:
    """Linear annealing of the maximum sampled timestep.

    t_max moves from t_max_start_frac*T to t_max_end_frac*T over the first
    warmup_iters iterations and stays at the end value afterwards.
    """

    warmup_iters: int = 200
    t_max_start_frac: float = 0.98
    t_max_end_frac: float = 0.5
    t_min_frac: float = 0.02


@dataclass(frozen=True)
class DistillConfig:
    estimator: str = "nfsd"
    s: float | None = None
    iters: int = 1000
    lr: float = 0.01
    weight_fn: WeightFn = WeightFn("constant_one")
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    seed: int = 0
    tau_frac: float = 0.2
    weight_decay: float = 0.0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    vsd_aux_steps: int = 1
    vsd_aux_lr: float = 2e-3

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.iters < 1:
            raise ConfigError("iters must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        a = self.anneal
        if not (0.0 < a.t_min_frac < a.t_max_end_frac <= a.t_max_start_frac <= 1.0):
            raise ConfigError(
                "need 0 < t_min_frac < t_max_end_frac <= t_max_start_frac <= 1"
            )
        if self.s is not None and self.s < 0:
            raise ConfigError("CFG scale must be >= 0")

    @property
    def cfg_scale(self) -> float:
        """The configured s, or the estimator's nominal default."""
        if self.s is not None:
            return float(self.s)
        return DEFAULT_CFG_SCALE[self.estimator]

    def to_doc(self) -> dict:
        doc = asdict(self)
        doc["weight_fn"] = self.weight_fn.kind
        doc["resolved_s"] = self.cfg_scale
        return doc


def t_max_at(cfg: DistillConfig, it: int, T: int) -> int:
    """Annealed upper timestep bound at one iteration."""
    a = cfg.anneal
    if a.warmup_iters <= 0:
        frac = 1.0
    else:
        frac = min(1.0, it / a.warmup_iters)
    val = a.t_max_start_frac + (a.t_max_end_frac - a.t_max_start_frac) * frac
    t_min = max(1, round(a.t_min_frac * T))
    return max(t_min, round(val * T))


def sample_timestep(
    cfg: DistillConfig, it: int, T: int, rng: np.random.Generator
) -> int:
    """Uniform draw from [t_min, t_max(it)]."""
    t_min = max(1, round(cfg.anneal.t_min_frac * T))
    t_max = t_max_at(cfg, it, T)
    return int(rng.integers(t_min, t_max + 1))


@dataclass
class RunResult:
    """Final parameters plus the per-iteration trajectory and manifest."""

    theta: np.ndarray
    x: np.ndarray
    estimator: str
    t: np.ndarray
    direction_norm: np.ndarray
    weight: np.ndarray
    draw_hash: list[str]
    mode_dist: np.ndarray | None
    manifest: dict

    @property
    def iters(self) -> int:
        return self.t.shape[0]


@dataclass
class DistillState:
    """Everything needed to continue a run: last finished iteration,
    parameters, optimizer moments, RNG states, and the trajectory so far."""

    it: int
    theta: np.ndarray
    opt: AdamState
    noise_rng_state: dict
    aux_rng_state: dict
    aux_params: np.ndarray | None
    t_hist: list[int]
    norm_hist: list[float]
    weight_hist: list[float]
    hash_hist: list[str]
    mode_hist: list[list[float]]

    def save(self, base_path: str | Path) -> None:
        base = Path(base_path)
        base.parent.mkdir(parents=True, exist_ok=True)
        arrays = {
            "theta": self.theta,
            "m": self.opt.m,
            "v": self.opt.v,
            "t_hist": np.array(self.t_hist, dtype=np.int64),
            "norm_hist": np.array(self.norm_hist),
            "weight_hist": np.array(self.weight_hist),
            "mode_hist": np.array(self.mode_hist)
            if self.mode_hist
            else np.zeros((0, 0)),
        }
        if self.aux_params is not None:
            arrays["aux_params"] = self.aux_params
        np.savez(str(base) + ".npz.tmp.npz", **arrays)
        Path(str(base) + ".npz.tmp.npz").replace(str(base) + ".npz")
        doc = {
            "it": self.it,
            "opt_step": self.opt.step,
            "noise_rng_state": self.noise_rng_state,
            "aux_rng_state": self.aux_rng_state,
            "hash_hist": self.hash_hist,
            "has_aux": self.aux_params is not None,
            "has_modes": bool(self.mode_hist),
        }
        from .artifacts import atomic_write_text

        atomic_write_text(str(base) + ".json", json.dumps(doc))

    @staticmethod
    def load(base_path: str | Path) -> "DistillState":
        base = Path(base_path)
        doc = json.loads(Path(str(base) + ".json").read_text())
        arrays = np.load(str(base) + ".npz")
        opt = AdamState(m=arrays["m"], v=arrays["v"], step=doc["opt_step"])
        mode_hist = (
            [list(row) for row in arrays["mode_hist"]] if doc["has_modes"] else []
        )
        return DistillState(
            it=doc["it"],
            theta=arrays["theta"],
            opt=opt,
            noise_rng_state=doc["noise_rng_state"],
            aux_rng_state=doc["aux_rng_state"],
            aux_params=arrays["aux_params"] if doc["has_aux"] else None,
            t_hist=[int(v) for v in arrays["t_hist"]],
            norm_hist=[float(v) for v in arrays["norm_hist"]],
            weight_hist=[float(v) for v in arrays["weight_hist"]],
            hash_hist=list(doc["hash_hist"]),
            mode_hist=mode_hist,
        )


def _rng_from_state(state: dict) -> np.random.Generator:
    rng = np.random.default_rng(0)
    rng.bit_generator.state = state
    return rng


def _spawn_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(noise stream, aux stream), both derived only from the seed."""
    ss = np.random.SeedSequence(seed)
    noise_ss, aux_ss = ss.spawn(2)
    return np.random.default_rng(noise_ss), np.random.default_rng(aux_ss)


def run_distillation(
    cfg: DistillConfig,
    pred,
    gen: GeneratorParams,
    sched: NoiseSchedule,
    *,
    y: Condition,
    y_neg: Condition = DEGRADED,
    aux=None,
    x_ref: np.ndarray | None = None,
    y_ref: Condition | None = None,
    mode_means: np.ndarray | None = None,
    checkpoint_path: str | Path | None = None,
    checkpoint_every: int = 0,
    state: DistillState | None = None,
) -> RunResult:
    """Run the full distillation loop; deterministic given cfg.seed.

    For the vsd estimator, aux must be a trainable tiny denoiser; it is
    fine-tuned on the current render every iteration (single-writer: the
    caller must not evaluate aux concurrently). For dds, x_ref and y_ref
    give the reference branch. mode_means (K, d), when provided, adds
    per-mode distances of the render to the trajectory.

    Passing state (from DistillState.load) resumes an interrupted run;
    the trajectory includes the restored portion. On numeric divergence
    the loop writes a checkpoint (when a path is configured) and raises
    NumericError.
    """
    T = sched.T
    tau = max(1, round(cfg.tau_frac * T))
    s = cfg.cfg_scale
    w = cfg.weight_fn
    x_size = gen.size

    if cfg.estimator == "vsd" and aux is None:
        raise ConfigError("vsd estimator needs an aux predictor")
    if cfg.estimator == "dds" and (x_ref is None or y_ref is None):
        raise ConfigError("dds estimator needs x_ref and y_ref")
    if x_ref is not None:
        x_ref = np.asarray(x_ref, dtype=np.float64).ravel()

    if state is None:
        noise_rng, aux_rng = _spawn_streams(cfg.seed)
        opt = AdamState.zeros(gen.theta.size)
        start_it = 0
        t_hist: list[int] = []
        norm_hist: list[float] = []
        weight_hist: list[float] = []
        hash_hist: list[str] = []
        mode_hist: list[list[float]] = []
    else:
        noise_rng = _rng_from_state(state.noise_rng_state)
        aux_rng = _rng_from_state(state.aux_rng_state)
        opt = state.opt
        gen = gen.with_theta(state.theta)
        if aux is not None and state.aux_params is not None:
            aux.params[...] = state.aux_params
        start_it = state.it
        t_hist = list(state.t_hist)
        norm_hist = list(state.norm_hist)
        weight_hist = list(state.weight_hist)
        hash_hist = list(state.hash_hist)
        mode_hist = [list(r) for r in state.mode_hist]

    def capture(it: int) -> DistillState:
        return DistillState(
            it=it,
            theta=gen.theta.copy(),
            opt=AdamState(m=opt.m.copy(), v=opt.v.copy(), step=opt.step),
            noise_rng_state=noise_rng.bit_generator.state,
            aux_rng_state=aux_rng.bit_generator.state,
            aux_params=aux.params.copy() if aux is not None else None,
            t_hist=list(t_hist),
            norm_hist=list(norm_hist),
            weight_hist=list(weight_hist),
            hash_hist=list(hash_hist),
            mode_hist=[list(r) for r in mode_hist],
        )

    for it in range(start_it, cfg.iters):
        t = sample_timestep(cfg, it, T, noise_rng)
        eps = noise_rng.standard_normal(x_size)
        x = render(gen)

        if cfg.estimator == "sds":
            est = sds_grad(pred, sched, x, y, t, eps, s, w)
        elif cfg.estimator == "nfsd":
            est = nfsd_grad(pred, sched, x, y, t, eps, s, w, tau, y_neg)
        elif cfg.estimator == "dds":
            est = dds_grad(pred, sched, x, y, x_ref, y_ref, t, eps, s, w)
        else:
            est = vsd_grad(pred, aux, sched, x, y, t, eps, s, w)

        grad_theta = pullback(gen, est.direction)
        if not np.all(np.isfinite(grad_theta)):
            if checkpoint_path is not None:
                capture(it).save(checkpoint_path)
            raise NumericError(f"non-finite distillation gradient at iteration {it}")
        opt, new_theta = adam_step(
            opt,
            gen.theta,
            grad_theta,
            lr=cfg.lr,
            betas=cfg.adam_betas,
            weight_decay=cfg.weight_decay,
        )
        if not np.all(np.isfinite(new_theta)):
            if checkpoint_path is not None:
                capture(it).save(checkpoint_path)
            raise NumericError(f"non-finite parameters at iteration {it}")
        gen = gen.with_theta(new_theta)

        if cfg.estimator == "vsd" and cfg.vsd_aux_steps > 0:
            aux_update(
                aux,
                x[None, :],
                sched,
                aux_rng,
                steps=cfg.vsd_aux_steps,
                y=y,
                lr=cfg.vsd_aux_lr,
            )

        t_hist.append(t)
        norm_hist.append(float(np.linalg.norm(est.direction)))
        weight_hist.append(est.weight)
        hash_hist.append(hash_draw(t, eps))
        if mode_means is not None:
            mode_hist.append(
                [float(np.linalg.norm(x - m)) for m in np.atleast_2d(mode_means)]
            )

        finished = it + 1
        if (
            checkpoint_path is not None
            and checkpoint_every > 0
            and finished % checkpoint_every == 0
            and finished < cfg.iters
        ):
            capture(finished).save(checkpoint_path)

    sched_doc = json.loads(sched.to_json())
    manifest = {
        "config": cfg.to_doc(),
        "schedule": sched_doc,
        "schedule_sha256": sha256_json(sched_doc),
        "generator": {"kind": gen.kind, "shape": list(gen.shape)},
        "predictor": type(pred).__name__,
        "predictor_sha256": getattr(pred, "params_hash", None),
        "condition": str(y),
        "negative_condition": str(y_neg),
        "tau": tau,
    }
    return RunResult(
        theta=gen.theta,
        x=render(gen),
        estimator=cfg.estimator,
        t=np.array(t_hist, dtype=np.int64),
        direction_norm=np.array(norm_hist),
        weight=np.array(weight_hist),
        draw_hash=hash_hist,
        mode_dist=np.array(mode_hist) if mode_means is not None else None,
        manifest=manifest,
    )


def grad_variance_probe(
    cfg: DistillConfig,
    pred,
    x: np.ndarray,
    t: int,
    n_draws: int,
    sched: NoiseSchedule,
    *,
    y: Condition,
    y_neg: Condition = DEGRADED,
    aux=None,
    estimators: tuple[str, ...] | None = None,
    rng: np.random.Generator | None = None,
) -> dict[str, dict]:
    """Monte-Carlo direction statistics at a fixed sample and timestep.

    All estimators see the same noise draws, so differences are purely the
    estimators'. Returns, per estimator, the covariance trace (sum of
    per-coordinate variances over draws), the mean direction, and its
    squared norm.
    """
    if n_draws < 100:
        raise ConfigError("variance probe needs n_draws >= 100")
    if estimators is None:
        estimators = ("sds", "nfsd")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    x = np.asarray(x, dtype=np.float64).ravel()
    T = sched.T
    tau = max(1, round(cfg.tau_frac * T))
    s = cfg.cfg_scale
    wt = cfg.weight_fn(sched, t)

    E = rng.standard_normal((n_draws, x.size))
    Z = add_noise(sched, np.broadcast_to(x, E.shape), t, E).z
    eps_u = pred.predict(Z, NULL, t)
    eps_c = eps_u if y.is_null else pred.predict(Z, y, t)
    guided = eps_u + s * (eps_c - eps_u)

    out: dict[str, dict] = {}
    for name in estimators:
        if name == "sds":
            dirs = wt * (guided - E)
        elif name == "nfsd":
            if t < tau:
                delta_d = eps_u
            else:
                delta_d = eps_u - pred.predict(Z, y_neg, t)
            dirs = wt * (delta_d + s * (eps_c - eps_u))
        elif name == "vsd":
            if aux is None:
                raise ConfigError("vsd probe needs an aux predictor")
            dirs = wt * (guided - aux.predict(Z, y, t))
        else:
            raise ConfigError(f"variance probe does not support {name!r}")
        mean = dirs.mean(axis=0)
        trace_cov = float(np.sum(dirs.var(axis=0, ddof=1)))
        out[name] = {
            "trace_cov": trace_cov,
            "mean": mean,
            "mean_sq_norm": float(np.dot(mean, mean)),
        }
    return out

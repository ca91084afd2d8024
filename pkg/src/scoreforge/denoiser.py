"""A tiny trainable conditional denoiser with hand-written gradients.

The network is a fully-connected eps-predictor: input is the noisy sample
concatenated with sinusoidal time features and a learned condition
embedding (the null token has its own embedding row), followed by three
tanh hidden layers and a linear output the size of the sample. It is
deliberately small enough that reverse-mode gradients are written out by
hand, so the package has no autodiff dependency.

Training minimizes mean squared error against the injected noise, with
condition dropout so the model also learns the unconditioned (marginal)
prediction needed for classifier-free guidance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .artifacts import atomic_write_bytes, atomic_write_text, sha256_bytes
from .conditions import NULL, Condition, parse_condition
from .exceptions import ConditionError, ConfigError, DimensionError, TrainingError
from .optim import AdamState, adam_step
from .schedule import NoiseSchedule


@dataclass
class TrainConfig:
    """Knobs for train_eps_model.

    cond_dropout is the probability a sample's condition is replaced by
    the null token during training; 0.1 keeps both heads usable for CFG.
    """

    steps: int = 4000
    batch_size: int = 256
    lr: float = 3e-3
    lr_decay: bool = True
    cond_dropout: float = 0.1
    hidden: int = 128
    time_features: int = 16
    embed_dim: int = 8
    seed: int = 0
    weight_decay: float = 0.0


@dataclass
class ConditionedDataset:
    """Training records: sample matrix x (N, d) and one condition per row."""

    x: np.ndarray
    y: list[Condition]

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2:
            raise DimensionError("dataset x must be (N, d)")
        if len(self.y) != self.x.shape[0]:
            raise DimensionError("dataset needs one condition per row")
        if self.x.shape[0] == 0:
            raise ValueError("dataset is empty")

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def vocab(self) -> list[Condition]:
        """Distinct conditions, null first, in first-seen order."""
        seen = [NULL]
        for cond in self.y:
            if cond not in seen:
                seen.append(cond)
        return seen


def _time_features(t: np.ndarray, T: int, n: int) -> np.ndarray:
    """Sinusoidal features of normalized time, shape (..., n)."""
    tau = np.asarray(t, dtype=np.float64) / T
    half = n // 2
    freqs = np.pi * (2.0 ** np.arange(half))
    ang = tau[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)


class TinyDenoiser:
    """Small MLP eps-predictor over a fixed condition vocabulary.

    Parameters live in one flat float64 vector; the layer matrices are
    views into it, which lets the optimizer treat the model as a single
    parameter array.
    """

    N_HIDDEN = 3

    def __init__(
        self,
        dim: int,
        vocab: list[Condition],
        sched: NoiseSchedule,
        hidden: int = 128,
        time_features: int = 16,
        embed_dim: int = 8,
        seed: int = 0,
    ):
        if vocab[0] != NULL:
            raise ConditionError("vocabulary must start with the null condition")
        if time_features % 2 != 0:
            raise ValueError("time_features must be even")
        self.dim = dim
        self.vocab = list(vocab)
        self._vocab_index = {c: i for i, c in enumerate(self.vocab)}
        self.sched = sched
        self.hidden = hidden
        self.time_features = time_features
        self.embed_dim = embed_dim
        self.seed = seed
        self.in_features = dim + time_features + embed_dim

        sizes = self._layer_sizes()
        total = sum(int(np.prod(s)) for s in sizes)
        self.params = np.zeros(total)
        self._views = []
        offset = 0
        for s in sizes:
            size = int(np.prod(s))
            self._views.append(self.params[offset : offset + size].reshape(s))
            offset += size
        self._init_params(np.random.default_rng(seed))
        self.opt_state = AdamState.zeros(total)
        self.loss_history: np.ndarray = np.empty(0)

    # -- parameter plumbing -------------------------------------------------

    def _layer_sizes(self) -> list[tuple[int, ...]]:
        f, h, d, e = self.in_features, self.hidden, self.dim, self.embed_dim
        return [
            (f, h), (h,),          # layer 1
            (h, h), (h,),          # layer 2
            (h, h), (h,),          # layer 3
            (h, d), (d,),          # output
            (len(self.vocab), e),  # condition embeddings
        ]

    def _init_params(self, rng: np.random.Generator) -> None:
        w1, b1, w2, b2, w3, b3, w4, b4, emb = self._views
        for w in (w1, w2, w3):
            w[...] = rng.standard_normal(w.shape) / np.sqrt(w.shape[0])
        w4[...] = rng.standard_normal(w4.shape) * (0.1 / np.sqrt(w4.shape[0]))
        for b in (b1, b2, b3, b4):
            b[...] = 0.0
        # Zero-initialized embeddings: a condition the training never sees
        # stays identical to the null token, so its condition direction is
        # exactly zero rather than random-init noise.
        emb[...] = 0.0

    def copy(self) -> "TinyDenoiser":
        """Weight-identical clone with fresh optimizer state."""
        other = TinyDenoiser(
            self.dim,
            self.vocab,
            self.sched,
            hidden=self.hidden,
            time_features=self.time_features,
            embed_dim=self.embed_dim,
            seed=self.seed,
        )
        other.params[...] = self.params
        return other

    @property
    def params_hash(self) -> str:
        return sha256_bytes(np.ascontiguousarray(self.params).tobytes())

    def cond_index(self, y: Condition) -> int:
        try:
            return self._vocab_index[y]
        except KeyError:
            raise ConditionError(f"condition {y} not in model vocabulary") from None

    # -- forward / backward -------------------------------------------------

    def _forward(self, z: np.ndarray, t: np.ndarray, yidx: np.ndarray):
        """Batched forward pass; returns prediction and cache for backward."""
        w1, b1, w2, b2, w3, b3, w4, b4, emb = self._views
        tf = _time_features(t, self.sched.T, self.time_features)
        x0 = np.concatenate([z, tf, emb[yidx]], axis=1)
        a1 = np.tanh(x0 @ w1 + b1)
        a2 = np.tanh(a1 @ w2 + b2)
        a3 = np.tanh(a2 @ w3 + b3)
        out = a3 @ w4 + b4
        return out, (x0, a1, a2, a3, yidx)

    def _backward(self, cache, dout: np.ndarray) -> np.ndarray:
        """Gradient of a scalar loss wrt params, given dloss/dout."""
        w1, b1, w2, b2, w3, b3, w4, b4, emb = self._views
        x0, a1, a2, a3, yidx = cache
        grad = np.zeros_like(self.params)
        gviews = []
        offset = 0
        for s in self._layer_sizes():
            size = int(np.prod(s))
            gviews.append(grad[offset : offset + size].reshape(s))
            offset += size
        gw1, gb1, gw2, gb2, gw3, gb3, gw4, gb4, gemb = gviews

        gw4[...] = a3.T @ dout
        gb4[...] = dout.sum(axis=0)
        da3 = dout @ w4.T
        dz3 = da3 * (1.0 - a3 * a3)
        gw3[...] = a2.T @ dz3
        gb3[...] = dz3.sum(axis=0)
        da2 = dz3 @ w3.T
        dz2 = da2 * (1.0 - a2 * a2)
        gw2[...] = a1.T @ dz2
        gb2[...] = dz2.sum(axis=0)
        da1 = dz2 @ w2.T
        dz1 = da1 * (1.0 - a1 * a1)
        gw1[...] = x0.T @ dz1
        gb1[...] = dz1.sum(axis=0)
        dx0 = dz1 @ w1.T
        demb_rows = dx0[:, self.dim + self.time_features :]
        np.add.at(gemb, yidx, demb_rows)
        return grad

    # -- public surface -----------------------------------------------------

    def predict(self, z: np.ndarray, y: Condition, t: int) -> np.ndarray:
        """eps-prediction for z of shape (..., dim) at one condition and
        timestep. Deterministic."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.dim:
            raise DimensionError(
                f"z last axis {z.shape[-1]} != model dim {self.dim}"
            )
        t = self.sched.check_t(t)
        lead = z.shape[:-1]
        flat = z.reshape(-1, self.dim)
        n = flat.shape[0]
        tvec = np.full(n, t)
        yidx = np.full(n, self.cond_index(y))
        out, _ = self._forward(flat, tvec, yidx)
        return out.reshape(*lead, self.dim)

    def train_steps(
        self,
        x: np.ndarray,
        conds: list[Condition],
        steps: int,
        rng: np.random.Generator,
        lr: float = 2e-3,
        batch_size: int = 128,
        cond_dropout: float = 0.0,
        weight_decay: float = 0.0,
        lr_decay: bool = False,
    ) -> np.ndarray:
        """Run denoising-loss gradient steps on (x, conds); mutates the model.

        With lr_decay the step size follows a cosine ramp from lr down to
        lr/30, which lowers the stochastic-optimization noise floor.
        Returns the per-step loss array. Raises TrainingError on a
        non-finite loss, reporting the step index.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionError(f"training x must be (N, {self.dim})")
        n = x.shape[0]
        yidx_all = np.array([self.cond_index(c) for c in conds])
        if yidx_all.shape[0] != n:
            raise DimensionError("need one condition per training row")
        abars = self.sched.alpha_bars
        losses = np.empty(steps)
        lr_lo = lr / 30.0
        for step in range(steps):
            if lr_decay and steps > 1:
                ramp = 0.5 * (1.0 + np.cos(np.pi * step / (steps - 1)))
                step_lr = lr_lo + (lr - lr_lo) * ramp
            else:
                step_lr = lr
            take = rng.integers(0, n, size=min(batch_size, n))
            xb = x[take]
            yb = yidx_all[take].copy()
            if cond_dropout > 0.0:
                drop = rng.random(yb.shape[0]) < cond_dropout
                yb[drop] = 0
            tb = rng.integers(1, self.sched.T + 1, size=xb.shape[0])
            eps = rng.standard_normal(xb.shape)
            ab = abars[tb - 1][:, None]
            zb = np.sqrt(ab) * xb + np.sqrt(1.0 - ab) * eps
            out, cache = self._forward(zb, tb, yb)
            resid = out - eps
            loss = float(np.mean(resid * resid))
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at step {step}", step=step)
            losses[step] = loss
            dout = 2.0 * resid / resid.size
            grad = self._backward(cache, dout)
            self.opt_state, new_params = adam_step(
                self.opt_state,
                self.params,
                grad,
                lr=step_lr,
                weight_decay=weight_decay,
            )
            self.params[...] = new_params
        self.loss_history = np.concatenate([self.loss_history, losses])
        return losses

    # -- checkpoints ----------------------------------------------------------

    def save(self, base_path: str | Path) -> dict:
        """Write <base>.bin (raw float64 params) and <base>.json header.

        Returns the header document (includes the blob hash).
        """
        base = Path(base_path)
        blob = np.ascontiguousarray(self.params).tobytes()
        header = {
            "kind": "tiny-denoiser",
            "dim": self.dim,
            "hidden": self.hidden,
            "time_features": self.time_features,
            "embed_dim": self.embed_dim,
            "layer_sizes": [list(s) for s in self._layer_sizes()],
            "condition_vocab": [str(c) for c in self.vocab],
            "schedule": json.loads(self.sched.to_json()),
            "seed": self.seed,
            "params_sha256": sha256_bytes(blob),
        }
        atomic_write_bytes(base.with_suffix(".bin"), blob)
        atomic_write_text(
            base.with_suffix(".json"), json.dumps(header, indent=2, sort_keys=True) + "\n"
        )
        return header

    @staticmethod
    def load(base_path: str | Path) -> "TinyDenoiser":
        base = Path(base_path)
        header = json.loads(base.with_suffix(".json").read_text())
        sched = NoiseSchedule.from_json(json.dumps(header["schedule"]))
        vocab = [parse_condition(s) for s in header["condition_vocab"]]
        model = TinyDenoiser(
            header["dim"],
            vocab,
            sched,
            hidden=header["hidden"],
            time_features=header["time_features"],
            embed_dim=header["embed_dim"],
            seed=header["seed"],
        )
        blob = base.with_suffix(".bin").read_bytes()
        params = np.frombuffer(blob, dtype=np.float64)
        if params.shape != model.params.shape:
            raise ConfigError(
                f"checkpoint parameter count {params.shape} != expected "
                f"{model.params.shape}"
            )
        if sha256_bytes(blob) != header["params_sha256"]:
            raise ConfigError("checkpoint blob does not match header hash")
        model.params[...] = params
        return model


def train_eps_model(
    dataset: ConditionedDataset,
    sched: NoiseSchedule,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
) -> TinyDenoiser:
    """Train a TinyDenoiser on a conditioned dataset.

    The returned model records its loss trajectory in .loss_history.
    Deterministic given config.seed when rng is not supplied.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    model = TinyDenoiser(
        dataset.dim,
        dataset.vocab(),
        sched,
        hidden=config.hidden,
        time_features=config.time_features,
        embed_dim=config.embed_dim,
        seed=config.seed,
    )
    model.train_steps(
        dataset.x,
        dataset.y,
        steps=config.steps,
        rng=rng,
        lr=config.lr,
        batch_size=config.batch_size,
        cond_dropout=config.cond_dropout,
        weight_decay=config.weight_decay,
        lr_decay=config.lr_decay,
    )
    return model

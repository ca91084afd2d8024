"""Differentiable parametric generators g(theta) with explicit pullbacks.

Two kinds exist. The identity generator renders its parameters directly
(g(theta) = theta), which makes distillation equivalent to direct
sample-space optimization. The field generator is a small coordinate
network (two tanh hidden layers over sinusoidal positional features of a
fixed pixel grid) whose smooth parameter coupling stands in for renderers
whose output cannot change one pixel at a time.

Renders are flat float64 vectors of length prod(shape); shape is metadata
for image interpretation. Gradients are hand-derived and validated by
finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .exceptions import DimensionError, NumericError

FIELD_HIDDEN = 64
FIELD_FREQS = 4
FIELD_FEATURES = 2 + 4 * FIELD_FREQS


@dataclass(frozen=True)
class GeneratorParams:
    """Generator kind, flat parameter vector, and output shape."""

    kind: str
    theta: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("identity", "field"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if self.kind == "identity" and theta.size != self.size:
            raise DimensionError(
                f"identity generator needs |theta| == prod(shape); "
                f"got {theta.size} vs {self.size}"
            )
        if self.kind == "field":
            if len(self.shape) != 2:
                raise DimensionError("field generator output must be 2-D")
            if theta.size != field_param_count():
                raise DimensionError(
                    f"field generator needs {field_param_count()} parameters, "
                    f"got {theta.size}"
                )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def with_theta(self, theta: np.ndarray) -> "GeneratorParams":
        return replace(self, theta=theta)


def field_layer_sizes() -> list[tuple[int, ...]]:
    f, h = FIELD_FEATURES, FIELD_HIDDEN
    return [(f, h), (h,), (h, h), (h,), (h, 1), (1,)]


def field_param_count() -> int:
    return sum(int(np.prod(s)) for s in field_layer_sizes())


def _field_views(theta: np.ndarray):
    views = []
    offset = 0
    for s in field_layer_sizes():
        size = int(np.prod(s))
        views.append(theta[offset : offset + size].reshape(s))
        offset += size
    return views


@lru_cache(maxsize=8)
def _grid_features(shape: tuple[int, ...]) -> np.ndarray:
    """Positional features of the fixed pixel grid, shape (H*W, F).

    Rows/columns map to coordinates in [-1, 1]; features are the raw
    coordinates plus sin/cos at frequencies pi, 2pi, ... FIELD_FREQS*pi.
    """
    h, w = shape
    v = np.linspace(-1.0, 1.0, h)
    u = np.linspace(-1.0, 1.0, w)
    vv, uu = np.meshgrid(v, u, indexing="ij")
    cols = [uu.ravel(), vv.ravel()]
    for k in range(1, FIELD_FREQS + 1):
        for axis in (uu, vv):
            cols.append(np.sin(k * np.pi * axis).ravel())
            cols.append(np.cos(k * np.pi * axis).ravel())
    return np.stack(cols, axis=1)


def init_params(
    kind: str, shape: tuple[int, ...], rng: np.random.Generator
) -> GeneratorParams:
    """Gaussian initialization.

    identity: theta ~ N(0, I). field: hidden weights at 1/sqrt(fan_in)
    scale, small output weights and zero biases, so the initial render
    stays well inside (-1, 1).
    """
    shape = tuple(int(v) for v in shape)
    if kind == "identity":
        theta = rng.standard_normal(int(np.prod(shape)))
        return GeneratorParams(kind="identity", theta=theta, shape=shape)
    if kind == "field":
        theta = np.zeros(field_param_count())
        views = _field_views(theta)
        w1, b1, w2, b2, w3, b3 = views
        w1[...] = rng.standard_normal(w1.shape) / np.sqrt(w1.shape[0])
        w2[...] = rng.standard_normal(w2.shape) / np.sqrt(w2.shape[0])
        w3[...] = rng.standard_normal(w3.shape) * (0.1 / np.sqrt(w3.shape[0]))
        return GeneratorParams(kind="field", theta=theta, shape=shape)
    raise ValueError(f"unknown generator kind {kind!r}")


def render(gen: GeneratorParams) -> np.ndarray:
    """Evaluate g(theta); returns a flat vector of length prod(shape)."""
    if not np.all(np.isfinite(gen.theta)):
        raise NumericError("generator parameters are not finite")
    if gen.kind == "identity":
        return gen.theta.copy()
    feats = _grid_features(gen.shape)
    w1, b1, w2, b2, w3, b3 = _field_views(gen.theta)
    a1 = np.tanh(feats @ w1 + b1)
    a2 = np.tanh(a1 @ w2 + b2)
    return (a2 @ w3 + b3).ravel()


def pullback(gen: GeneratorParams, grad_x: np.ndarray) -> np.ndarray:
    """Apply the transposed Jacobian: grad_theta = (dx/dtheta)^T grad_x."""
    grad_x = np.asarray(grad_x, dtype=np.float64).ravel()
    if grad_x.size != gen.size:
        raise DimensionError(
            f"grad_x size {grad_x.size} != render size {gen.size}"
        )
    if gen.kind == "identity":
        return grad_x.copy()
    feats = _grid_features(gen.shape)
    w1, b1, w2, b2, w3, b3 = _field_views(gen.theta)
    a1 = np.tanh(feats @ w1 + b1)
    a2 = np.tanh(a1 @ w2 + b2)

    grad = np.zeros_like(gen.theta)
    gw1, gb1, gw2, gb2, gw3, gb3 = _field_views(grad)
    g = grad_x[:, None]  # (N, 1)
    gw3[...] = a2.T @ g
    gb3[...] = g.sum(axis=0)
    da2 = g @ w3.T
    dz2 = da2 * (1.0 - a2 * a2)
    gw2[...] = a1.T @ dz2
    gb2[...] = dz2.sum(axis=0)
    da1 = dz2 @ w2.T
    dz1 = da1 * (1.0 - a1 * a1)
    gw1[...] = feats.T @ dz1
    gb1[...] = dz1.sum(axis=0)
    return grad

"""Exact noise prediction for Gaussian mixtures.

Builds a little 2-D three-mode mixture, noises a probe point to a few
timesteps, and shows that the closed-form eps-prediction agrees with
brute-force posterior integration and with the finite-difference gradient
of the smoothed log-density.
"""

import numpy as np

from scoreforge import (
    NULL,
    AnalyticMixturePredictor,
    MixtureComponent,
    MixtureSpec,
    add_noise,
    default_schedule,
)

sched = default_schedule(100)
rng = np.random.default_rng(0)

spec = MixtureSpec(
    {
        NULL: [
            MixtureComponent(np.array([2.0, 0.0]), 0.3**2, 0.5),
            MixtureComponent(np.array([-1.5, 1.5]), 0.5**2, 0.3),
            MixtureComponent(np.array([0.0, -2.0]), 0.4**2, 0.2),
        ]
    }
)
pred = AnalyticMixturePredictor(spec, sched)

x = spec.sample(NULL, 1, rng)[0]
print(f"probe sample x = {x}")

for t in (5, 25, 50, 90):
    eps = rng.standard_normal(2)
    z = add_noise(sched, x, t, eps).z
    eps_star = pred.predict(z, NULL, t)

    # brute-force cross-check: integrate the posterior on a fine grid
    g = np.linspace(-9.0, 9.0, 601)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    means, variances, weights = spec.arrays(NULL)
    prior = np.zeros(len(pts))
    for m, v, w in zip(means, variances, weights):
        prior += w * np.exp(-np.sum((pts - m) ** 2, axis=1) / (2 * v)) / (
            2 * np.pi * v
        )
    ab = sched.alpha_bar(t)
    lik = np.exp(-np.sum((z - np.sqrt(ab) * pts) ** 2, axis=1) / (2 * (1 - ab)))
    post = prior * lik
    ex = (pts * post[:, None]).sum(axis=0) / post.sum()
    eps_quad = (z - np.sqrt(ab) * ex) / np.sqrt(1 - ab)

    # and the score identity: eps* = -sqrt(1-abar) grad log p_t
    h = 1e-6
    fd = np.array(
        [
            (
                pred.log_density(z + h * e, NULL, t)
                - pred.log_density(z - h * e, NULL, t)
            )
            / (2 * h)
            for e in np.eye(2)
        ]
    )
    eps_fd = -np.sqrt(1 - ab) * fd

    print(
        f"t={t:3d}  |eps*|={np.linalg.norm(eps_star):.4f}"
        f"  vs quadrature {np.max(np.abs(eps_star - eps_quad)):.2e}"
        f"  vs finite diff {np.max(np.abs(eps_star - eps_fd)):.2e}"
    )

print()
print("the prediction reproduces the injected noise exactly for a point mass:")
from scoreforge import point_mass_predictor

pm = point_mass_predictor(x, sched)
eps = rng.standard_normal(2)
z = add_noise(sched, x, 40, eps).z
print(f"  injected {eps}")
print(f"  predicted {pm.predict(z, NULL, 40)}")

"""Splitting predictions into condition / domain / denoising parts.

Trains the tiny denoiser on clean and degraded bump images, then walks
through the three probes:

  1. the residual scan (the unconditional prediction is a relatively
     worse noise estimate at small timesteps),
  2. the in-domain / out-of-domain pair probe (shared noise isolates a
     domain-correction estimate whose negated application sharpens a
     blurred image),
  3. the full decomposition identity guided = delta_d + delta_n + s*delta_c.

Component fields are dumped as PGM images next to this script.
"""

from pathlib import Path

import numpy as np

from scoreforge import (
    DEGRADED,
    TrainConfig,
    add_noise,
    class_condition,
    decompose_score,
    default_schedule,
    default_tau,
    domain_correction_step,
    probe_id_ood,
    residual_scan,
    train_eps_model,
)
from scoreforge.artifacts import write_pgm
from scoreforge.datasets import bump_images, degrade_images, toy_image_dataset

out_dir = Path(__file__).parent / "out_decomposition"
sched = default_schedule(100)
size = 8

print("training the toy conditional denoiser (clean + degraded bumps)...")
dataset = toy_image_dataset(512, size, np.random.default_rng(3))
model = train_eps_model(dataset, sched, TrainConfig(steps=4000, seed=1))
print(f"  final training loss ~ {model.loss_history[-200:].mean():.4f}")

rng = np.random.default_rng(11)
clean = bump_images(4, size, rng)
blurred = degrade_images(clean, size)

print()
print("1. residual scan on an in-domain image (norm of eps_hat - eps):")
rows = residual_scan(model, clean[0], [10, 20, 30, 50, 70, 100], rng, n_draws=64)
for row in rows:
    print(f"   t={row.t:3d}  residual_norm={row.residual_norm:.3f}  corr(residual, x)={row.correlation:+.3f}")
print("   -> the residual grows toward small t: that is the term a plain")
print("      distillation loss injects into every update.")

print()
print("2. ID/OOD probe with shared noise:")
t = 50
eps = rng.standard_normal(size * size)
delta_n_est, delta_d_est = probe_id_ood(model, clean[0], blurred[0], eps, t)
base = np.linalg.norm(blurred[0] - clean[0])
best_scale, best = None, base
for c in (0.1, 0.25, 0.5, 1.0, 2.0):
    fixed = domain_correction_step(blurred[0], delta_d_est, sched, t, scale=c)
    d = np.linalg.norm(fixed - clean[0])
    if d < best:
        best_scale, best = c, d
print(f"   |blurred - clean| = {base:.3f}")
print(f"   best corrected distance = {best:.3f} at scale {best_scale}")

out_dir.mkdir(exist_ok=True)
write_pgm(out_dir / "x_clean.pgm", clean[0].reshape(size, size))
write_pgm(out_dir / "x_blurred.pgm", blurred[0].reshape(size, size))
lim = float(np.max(np.abs(delta_d_est)))
write_pgm(out_dir / "delta_d_est.pgm", delta_d_est.reshape(size, size), lo=-lim, hi=lim)

print()
print("3. decomposition identity at a few (t, s):")
tau = default_tau(sched.T)
for t, s in ((10, 7.5), (50, 7.5), (50, 100.0), (90, 1.0)):
    z = add_noise(sched, blurred[0], t, rng.standard_normal(size * size)).z
    dec = decompose_score(model, z, class_condition(0), t, s, tau)
    err = np.max(np.abs(dec.recombined() - dec.guided))
    print(
        f"   t={t:3d} s={s:6.1f}  |delta_c|={np.linalg.norm(dec.delta_c):7.3f}"
        f"  |delta_d|={np.linalg.norm(dec.delta_d):7.3f}"
        f"  |delta_n|={np.linalg.norm(dec.delta_n):7.3f}  identity err={err:.1e}"
    )
print(f"component dumps written to {out_dir}/")

"""Sharpness and saturation contrast on toy images.

Runs paired-seed distillation of an 8x8 image against the trained toy
model: plain estimator at the nominal and at the large scale, and the
noise-free estimator at the nominal scale. Prints gradient-energy
(sharpness proxy) and clipped-pixel fraction (saturation proxy), and
writes the renders as PGM files.
"""

from pathlib import Path

import numpy as np

from scoreforge import (
    AnnealConfig,
    DistillConfig,
    TrainConfig,
    class_condition,
    default_schedule,
    init_params,
    run_distillation,
    train_eps_model,
)
from scoreforge.artifacts import write_pgm
from scoreforge.datasets import toy_image_dataset

out_dir = Path(__file__).parent / "out_image_distill"
out_dir.mkdir(exist_ok=True)
sched = default_schedule(100)
size = 8

print("training the toy conditional denoiser...")
dataset = toy_image_dataset(512, size, np.random.default_rng(3))
model = train_eps_model(dataset, sched, TrainConfig(steps=8000, seed=1))


def grad_energy(img):
    im = img.reshape(size, size)
    return float((np.diff(im, axis=0) ** 2).mean() + (np.diff(im, axis=1) ** 2).mean())


def saturation(img):
    return float(((img < 0.0) | (img > 1.0)).mean())


anneal = AnnealConfig(
    warmup_iters=300, t_max_start_frac=0.98, t_max_end_frac=0.25, t_min_frac=0.05
)
seed = 2
print(f"\npaired runs (seed {seed}), 1,000 iterations each:")
for est, s in (("sds", 7.5), ("sds", 100.0), ("nfsd", 7.5)):
    cfg = DistillConfig(
        estimator=est, s=s, iters=1000, lr=0.01, seed=seed,
        anneal=anneal, adam_betas=(0.9, 0.95), tau_frac=0.2,
    )
    gen = init_params("identity", (size * size,), np.random.default_rng(seed))
    res = run_distillation(cfg, model, gen, sched, y=class_condition(0))
    tag = f"{est}_s{s:g}".replace(".", "p")
    write_pgm(out_dir / f"render_{tag}.pgm", res.x.reshape(size, size))
    print(
        f"  {est:4s} s={s:5.1f}:  gradient energy {grad_energy(res.x):6.3f}"
        f"   saturation {saturation(res.x):.3f}"
        f"   range [{res.x.min():+.2f}, {res.x.max():+.2f}]"
    )

print(f"\nrenders written to {out_dir}/")
print("the noise-free run keeps more spatial detail at the nominal scale;")
print("the plain run needs the large scale and clips far more pixels there.")

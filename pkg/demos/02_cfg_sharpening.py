"""How the guidance scale sharpens ancestral sampling.

Samples 2,000 reverse chains per guidance scale on a two-mode mixture,
conditioning on mode A. Larger scales concentrate the samples: the
per-mode variance drops and nearly all chains land in the conditioned
mode. The same seed feeds every sweep entry, so differences are purely
the scale's.
"""

import numpy as np

from scoreforge import NULL, AnalyticMixturePredictor, class_condition, default_schedule, sample
from scoreforge.datasets import two_mode_spec

sched = default_schedule(100)
spec = two_mode_spec(dim=2, sep=2.0, sigma=0.5)
pred = AnalyticMixturePredictor(spec, sched)
means, _, _ = spec.arrays(NULL)

print(f"two modes at {means[0]} and {means[1]}, sigma = 0.5")
print(f"{'s':>6}  {'frac in mode A':>14}  {'within-mode var':>15}")

rows = []
for s in (1.0, 4.0, 7.5, 15.0, 30.0, 100.0):
    out = sample(pred, sched, class_condition(0), s, np.random.default_rng(7), n=2000)
    d2 = ((out[:, None, :] - means[None]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    frac_a = float((assign == 0).mean())
    num, den = 0.0, 0
    for k in range(means.shape[0]):
        grp = out[assign == k]
        if grp.shape[0] >= 2:
            num += grp.var(axis=0, ddof=1).mean() * grp.shape[0]
            den += grp.shape[0]
    rows.append((s, frac_a, num / den))
    print(f"{s:6.1f}  {frac_a:14.3f}  {num / den:15.4f}")

print()
print("variance is non-increasing in s (it saturates once the chains have")
print("fully collapsed); high scales also push samples past the mode")
print("center, the over-saturation analog:")
for s in (1.0, 7.5, 100.0):
    out = sample(pred, sched, class_condition(0), s, np.random.default_rng(7), n=2000)
    grp = out[((out[:, None, :] - means[None]) ** 2).sum(axis=2).argmin(axis=1) == 0]
    print(f"  s={s:5.1f}: mean first coordinate of mode-A samples = {grp[:, 0].mean():+.4f}")

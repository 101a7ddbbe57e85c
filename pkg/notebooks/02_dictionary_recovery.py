# %% [markdown]
# # Recovering a dictionary from 1-sparse data
#
# Data are x = D0 z, where z has one nonzero standard-normal entry, so the
# samples lie on two lines through the origin.  After training, the learned
# dictionary should match D0 up to column order and sign.
#
# The number of transform rows matters.  With only two unit rows the
# discriminator's best responses are too coarse to pin down a non-orthogonal
# pair of lines; an overcomplete transform fixes that.

# %%
import numpy as np

from dtgan import GameConfig, TrainConfig, dictionary_recovery, make_rng, sample_synthesis, train
from dtgan.datagen import random_ground_truth
from dtgan.metrics import alignment_residual

gt = random_ground_truth(2, 2, 1, make_rng(0, 300), min_singular=0.5)
x = sample_synthesis(gt, 5000, make_rng(0, 301))
cos = float(gt.D0.entries[:, 0] @ gt.D0.entries[:, 1])
print("D0 =\n", np.round(gt.D0.entries, 3), f"\ncolumn cosine {cos:+.3f}")

# %%
for m in (2, 16):
    residuals = []
    for seed in range(5):
        D, T, _ = train(x, gt.latent, GameConfig(), TrainConfig(seed=seed), m=m)
        residuals.append(dictionary_recovery(D, gt.D0).residual)
    print(f"m = {m:2d}: residuals {np.round(residuals, 3)}")

# %% [markdown]
# The alignment residual probes how the transform rows that ignore an active
# line respond in the direction orthogonal to it.

# %%
D, T, _ = train(x, gt.latent, GameConfig(), TrainConfig(seed=0), m=16)
match = dictionary_recovery(D, gt.D0)
print("matched permutation", match.permutation, "signs", match.signs)
print("alignment residual", alignment_residual(D, T, gt.latent, 200, make_rng(1)))

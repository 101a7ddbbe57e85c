# %% [markdown]
# # A one-dimensional game, solved twice
#
# Every real sample is the number 2 and every latent is the number 1, so the
# generator's output is just its single dictionary entry D.  With an l1 energy
# and a unit transform t = +1 or -1, the discriminator's payoff is
# |2t| - |tD| = 2 - |D|.  The generator wants this small, so it pushes |D| to
# the edge of its ball.  With a ball of radius 3 the minimax value is -1.

# %%
import numpy as np

from dtgan import EnergyKind, GameConfig, LatentSpec, SampleBatch, TrainConfig, train
from dtgan.metrics import bruteforce_saddle
from dtgan.objective import nash_gap

game = GameConfig(energy=EnergyKind.L1, lam=1.0, frob_bound=3.0)
batch = SampleBatch(np.full((16, 1), 2.0), np.ones((16, 1)))

# %% [markdown]
# First the exhaustive grid: every D on a fine grid of [-3, 3] against both
# transform signs.

# %%
grid = bruteforce_saddle(batch, game, grid_resolution=601)
print(f"grid minimax value {grid.value:+.4f} at D = {grid.D.entries[0, 0]:+.3f}")
print(f"grid error bound   {grid.grid_error_bound:.4f}")

# %% [markdown]
# Now the alternating trainer, starting from a random D.

# %%
D, T, traj = train(batch.data, LatentSpec(1, 1, coeff_law="ones"), game,
                   TrainConfig(outer_iters=500, log_every=50, seed=0), m=1)
for rec in traj.records[::2]:
    print(f"iter {rec.iteration:4d}  value {rec.value.total:+.4f}  |D| {rec.frob_D:.3f}")
print(f"final D = {D.entries[0, 0]:+.3f}, value {traj.final.value.total:+.4f}")

# %% [markdown]
# At the grid point neither player can improve on their own.

# %%
print("nash gap at the grid saddle:", nash_gap(grid.D, grid.T, batch, game, opt_budget=200))

# %% [markdown]
# # How the equilibrium value settles as N grows
#
# For each sample size N we train on N synthetic samples and measure how far
# the resulting objective value sits from a reference run on ten times the
# largest N.  A slope near -1/2 on a log-log plot is the expected behaviour.

# %%
import numpy as np

from dtgan import config
from dtgan.metrics import RateSetup, rate_experiment

cfg = config.canned("rate")
setup = RateSetup(n=cfg.n, k=cfg.k, s=cfg.s, m=cfg.m, game=cfg.game, train=cfg.train)
fit = rate_experiment([int(p) for p in cfg.params], cfg.trials, setup, seed=0)

# %%
print(f"reference value {fit.reference_value:+.4f}")
for n, gap, trials in zip(fit.sample_sizes, fit.gaps, fit.trial_gaps):
    print(f"N = {n:5d}  mean gap {gap:.4f}  trials {np.round(trials, 3)}")
print(f"fitted exponent {fit.fitted_exponent:.3f}")

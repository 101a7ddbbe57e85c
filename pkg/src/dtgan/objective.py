"""Empirical game objective and its (sub)gradients in D and T."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Dictionary,
    DimensionError,
    EnergyKind,
    GameConfig,
    Transform,
    energy,
    row_penalty_grad,
)


@dataclass(frozen=True)
class SampleBatch:
    """Real samples (N_x, n) and latent draws (N_z, k)."""

    data: np.ndarray
    latents: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.data, dtype=float))
        z = np.atleast_2d(np.asarray(self.latents, dtype=float))
        if x.shape[0] < 1 or z.shape[0] < 1 or x.size == 0 or z.size == 0:
            raise ValueError("a batch needs at least one data sample and one latent")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "data", x)
        object.__setattr__(self, "latents", z)

    @classmethod
    def from_lists(cls, data_samples, latent_samples) -> "SampleBatch":
        z = [getattr(v, "values", v) for v in latent_samples]
        return cls(np.vstack(data_samples), np.vstack(z))

    @property
    def n_x(self) -> int:
        return self.data.shape[0]

    @property
    def n_z(self) -> int:
        return self.latents.shape[0]


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    real_energy_term: float
    fake_energy_term: float
    reg_term: float

    def is_finite(self) -> bool:
        return bool(np.isfinite([self.total, self.real_energy_term,
                                 self.fake_energy_term, self.reg_term]).all())


def _check(D, T, batch):
    if D.n != T.n:
        raise DimensionError(f"dictionary has n={D.n} but transform has n={T.n}")
    if batch.data.shape[1] != T.n:
        raise DimensionError(f"data samples have length {batch.data.shape[1]}, expected {T.n}")
    if batch.latents.shape[1] != D.k:
        raise DimensionError(f"latents have length {batch.latents.shape[1]}, expected {D.k}")


def objective_terms(d: np.ndarray, t: np.ndarray, x: np.ndarray, z: np.ndarray,
                    cfg: GameConfig) -> ObjectiveValue:
    """Array-level objective; ``d`` (n, k), ``t`` (m, n), ``x`` (N_x, n), ``z`` (N_z, k)."""
    real = float(np.mean(energy(cfg.energy, x @ t.T)))
    fake = float(np.mean(energy(cfg.energy, z @ (t @ d).T)))
    sq = np.square(t).sum(axis=1)
    reg = float(np.sum(np.square(sq - 1.0)))
    return ObjectiveValue(real - fake + cfg.lam * reg, real, fake, reg)


def _energy_grad(phi, u):
    # d phi / du, with sign(0) = 0 for the l1 subgradient
    return np.sign(u) if phi is EnergyKind.L1 else 2.0 * u


def transform_grad_terms(d, t, x, z, cfg: GameConfig) -> np.ndarray:
    g = z @ d.T
    real = _energy_grad(cfg.energy, x @ t.T).T @ x / x.shape[0]
    fake = _energy_grad(cfg.energy, g @ t.T).T @ g / g.shape[0]
    return real - fake + cfg.lam * row_penalty_grad(t)


def dictionary_grad_terms(d, t, z, cfg: GameConfig) -> np.ndarray:
    w = _energy_grad(cfg.energy, z @ (t @ d).T)
    return -(t.T @ w.T @ z) / z.shape[0]


def empirical_objective(D: Dictionary, T: Transform, batch: SampleBatch,
                        cfg: GameConfig) -> ObjectiveValue:
    _check(D, T, batch)
    return objective_terms(D.entries, T.entries, batch.data, batch.latents, cfg)


def grad_transform(D: Dictionary, T: Transform, batch: SampleBatch,
                   cfg: GameConfig) -> np.ndarray:
    """Gradient (l1: subgradient) of the objective with respect to T."""
    _check(D, T, batch)
    return transform_grad_terms(D.entries, T.entries, batch.data, batch.latents, cfg)


def grad_dictionary(D: Dictionary, T: Transform, batch: SampleBatch,
                    cfg: GameConfig) -> np.ndarray:
    """Gradient (l1: subgradient) of the objective with respect to D.

    Only the generated-energy term depends on D.
    """
    _check(D, T, batch)
    return dictionary_grad_terms(D.entries, T.entries, batch.latents, cfg)


def nash_gap(D: Dictionary, T: Transform, batch: SampleBatch, cfg: GameConfig,
             opt_budget=(200, 200), step_sizes=(1e-2, 1e-2),
             project_rows: bool = True) -> float:
    """Estimate ``max_T' L(D, T') - min_D' L(D', T)`` by warm-started inner solves.

    Both inner solvers return their best iterate, which includes the starting
    point, so the estimate is never negative.
    """
    from .trainer import solve_inner_max, solve_inner_min

    steps_T, steps_D = (opt_budget, opt_budget) if np.isscalar(opt_budget) else opt_budget
    eta_T, eta_D = step_sizes
    T_best = solve_inner_max(D, T, batch, cfg, steps_T, step_size=eta_T,
                             project_rows=project_rows)
    D_best = solve_inner_min(T, D, batch, cfg, steps_D, step_size=eta_D)
    hi = empirical_objective(D, T_best, batch, cfg).total
    lo = empirical_objective(D_best, T, batch, cfg).total
    return float(hi - lo)

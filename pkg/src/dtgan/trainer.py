"""Alternating projected (sub)gradient solver for the dictionary-transform game."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    DegenerateRowError,
    Dictionary,
    GameConfig,
    LatentSpec,
    Transform,
    normalize_rows,
    row_penalty_grad,
)
from .datagen import make_rng, sample_latents
from .objective import (
    ObjectiveValue,
    SampleBatch,
    dictionary_grad_terms,
    nash_gap,
    objective_terms,
    transform_grad_terms,
)

# substream keys under one training seed
_INIT, _LATENT, _DATA, _REINIT = 0, 1, 2, 3


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, what: str = "objective"):
        self.iteration = iteration
        super().__init__(f"non-finite {what} at iteration {iteration}")


@dataclass(frozen=True)
class TrainConfig:
    outer_iters: int = 2000
    disc_steps_per_gen_step: int = 5
    step_size_D: float = 1e-2
    step_size_T: float = 1e-2
    batch_size: int = 256
    seed: int = 0
    project_rows_each_step: bool = True
    log_every: int = 100
    # real samples per round, drawn with replacement; 0 uses the whole data set
    data_batch_size: int = 256
    # 0 disables nash-gap logging
    nash_gap_every: int = 0
    nash_gap_steps: int = 100

    def __post_init__(self):
        for name in ("outer_iters", "disc_steps_per_gen_step", "batch_size", "log_every",
                     "nash_gap_steps"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not (self.step_size_D > 0 and self.step_size_T > 0):
            raise ValueError("step sizes must be positive")
        if self.data_batch_size < 0:
            raise ValueError("data_batch_size must be nonnegative (0 = whole data set)")
        if self.nash_gap_every < 0:
            raise ValueError("nash_gap_every must be nonnegative")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    value: ObjectiveValue
    frob_D: float
    max_row_dev: float
    nash_gap: float | None = None


CSV_FIELDS = ("iteration", "total", "real_term", "fake_term", "reg_term", "frob_D",
              "max_row_dev", "nash_gap")


@dataclass
class TrainTrajectory:
    records: list[TrainRecord] = field(default_factory=list)

    def append(self, rec: TrainRecord):
        if self.records and rec.iteration <= self.records[-1].iteration:
            raise ValueError("trajectory iterations must increase")
        self.records.append(rec)

    @property
    def final(self) -> TrainRecord:
        return self.records[-1]

    def rows(self):
        for r in self.records:
            v = r.value
            yield (r.iteration, v.total, v.real_energy_term, v.fake_energy_term, v.reg_term,
                   r.frob_D, r.max_row_dev, "" if r.nash_gap is None else r.nash_gap)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for row in self.rows():
                w.writerow([repr(c) if isinstance(c, float) else c for c in row])
        return path


def init_players(n: int, k: int, m: int, cfg: GameConfig, seed: int):
    """Random unit-column dictionary (projected onto the ball) and unit-row transform."""
    if min(n, k, m) < 1:
        raise ValueError("dimensions must be positive")
    rng = make_rng(seed, _INIT)
    d = rng.standard_normal((n, k))
    d = d / np.linalg.norm(d, axis=0)
    bound = cfg.bound_for(k)
    f = np.linalg.norm(d)
    if f > bound:
        d = d * (bound / f)
    t = normalize_rows(rng.standard_normal((m, n)), rng)
    return Dictionary(d, bound), Transform(t)


def _ascent_direction(d, t, x, z, cfg):
    g = transform_grad_terms(d, t, x, z, cfg)
    if cfg.row_penalty_weight:
        g = g - cfg.row_penalty_weight * row_penalty_grad(t)
    return g


def _project_ball(d, bound):
    f = np.linalg.norm(d)
    return d * (bound / f) if f > bound else d


def _require_finite(arr, iteration, what):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(iteration, what)


def solve_inner_max(D: Dictionary, T0: Transform, batch: SampleBatch, cfg: GameConfig,
                    steps: int, step_size: float = 1e-2, project_rows: bool = True,
                    rng: np.random.Generator | None = None) -> Transform:
    """Projected gradient ascent in T with D fixed; returns the best iterate."""
    d, x, z = D.entries, batch.data, batch.latents
    t = T0.entries
    best_t, best = None, objective_terms(d, t, x, z, cfg).total
    rng = rng if rng is not None else make_rng(0, _REINIT)
    for it in range(steps):
        t = t + step_size * _ascent_direction(d, t, x, z, cfg)
        _require_finite(t, it, "transform")
        if project_rows:
            t = normalize_rows(t, rng)
        val = objective_terms(d, t, x, z, cfg).total
        if not np.isfinite(val):
            raise DivergenceError(it)
        if val > best:
            best_t, best = t, val
    return T0 if best_t is None else Transform(best_t)


def solve_inner_min(T: Transform, D0: Dictionary, batch: SampleBatch, cfg: GameConfig,
                    steps: int, step_size: float = 1e-2) -> Dictionary:
    """Projected gradient descent in D with T fixed; returns the best iterate."""
    t, x, z = T.entries, batch.data, batch.latents
    bound = D0.frob_bound
    d = D0.entries
    best_d, best = None, objective_terms(d, t, x, z, cfg).total
    for it in range(steps):
        d = _project_ball(d - step_size * dictionary_grad_terms(d, t, z, cfg), bound)
        _require_finite(d, it, "dictionary")
        val = objective_terms(d, t, x, z, cfg).total
        if not np.isfinite(val):
            raise DivergenceError(it)
        if val < best:
            best_d, best = d, val
    return D0 if best_d is None else Dictionary(best_d, bound)


@dataclass
class TrainResult:
    dictionary: Dictionary
    transform: Transform
    trajectory: TrainTrajectory

    def __iter__(self):
        return iter((self.dictionary, self.transform, self.trajectory))


def train(data, latent_spec: LatentSpec, game: GameConfig, tc: TrainConfig,
          m: int | None = None, init=None) -> TrainResult:
    """Run ``tc.outer_iters`` rounds of (T ascent x k steps, one D descent step).

    ``data`` is the fixed real sample set, shape (N, n).  Each round draws a
    fresh latent batch; ``init`` optionally supplies starting ``(D, T)``.
    Unpacks as ``D, T, trajectory``.
    """
    x_all = np.atleast_2d(np.asarray(data, dtype=float))
    if x_all.shape[0] < 1:
        raise ValueError("empty data set")
    n, k = x_all.shape[1], latent_spec.k
    if init is None:
        D, T = init_players(n, k, m or n, game, tc.seed)
    else:
        D, T = init
        if D.n != n or D.k != k or T.n != n:
            raise ValueError("initial players do not match data/latent dimensions")
    d, t, bound = np.array(D.entries), np.array(T.entries), D.frob_bound
    latent_rng = make_rng(tc.seed, _LATENT)
    data_rng = make_rng(tc.seed, _DATA)
    reinit_rng = make_rng(tc.seed, _REINIT)
    traj = TrainTrajectory()

    # overflow is caught by the explicit finiteness checks below
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, tc.outer_iters + 1):
            z = sample_latents(latent_spec, tc.batch_size, latent_rng)
            if tc.data_batch_size == 0:
                x = x_all
            else:
                x = x_all[data_rng.integers(0, x_all.shape[0], size=tc.data_batch_size)]
            for _ in range(tc.disc_steps_per_gen_step):
                t = t + tc.step_size_T * _ascent_direction(d, t, x, z, game)
                _require_finite(t, it, "transform")
                if tc.project_rows_each_step:
                    t = normalize_rows(t, reinit_rng)
            d = _project_ball(d - tc.step_size_D * dictionary_grad_terms(d, t, z, game), bound)
            _require_finite(d, it, "dictionary")

            if it % tc.log_every == 0 or it == tc.outer_iters:
                value = objective_terms(d, t, x_all, z, game)
                if not value.is_finite():
                    raise DivergenceError(it)
                gap = None
                if tc.nash_gap_every and it % tc.nash_gap_every == 0:
                    gap = nash_gap(Dictionary(d, bound), Transform(t), SampleBatch(x_all, z),
                                   game, opt_budget=tc.nash_gap_steps,
                                   step_sizes=(tc.step_size_T, tc.step_size_D),
                                   project_rows=tc.project_rows_each_step)
                dev = float(np.max(np.abs(np.linalg.norm(t, axis=1) - 1.0)))
                traj.append(TrainRecord(it, value, float(np.linalg.norm(d)), dev, gap))

    return TrainResult(Dictionary(d, bound), Transform(t), traj)


__all__ = [
    "DegenerateRowError",
    "DivergenceError",
    "TrainConfig",
    "TrainRecord",
    "TrainResult",
    "TrainTrajectory",
    "init_players",
    "solve_inner_max",
    "solve_inner_min",
    "train",
]

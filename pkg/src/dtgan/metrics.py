"""Recovery, identifiability and alignment metrics, a grid minimax oracle and
the sample-size rate experiment."""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
from dataclasses import asdict, dataclass, is_dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Dictionary, EnergyKind, GameConfig, LatentSpec, Transform
from .datagen import (
    make_rng,
    random_ground_truth,
    sample_latents,
    sample_supports,
    sample_synthesis,
)
from .objective import SampleBatch, objective_terms
from .trainer import DivergenceError, TrainConfig, train

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 10**6


def recovery_error(generated, real) -> float:
    """Euclidean distance between the two sample means."""
    g = np.atleast_2d(np.asarray(generated, dtype=float))
    r = np.atleast_2d(np.asarray(real, dtype=float))
    if g.shape[0] == 0 or r.shape[0] == 0 or g.size == 0 or r.size == 0:
        raise ValueError("recovery error needs non-empty sample sets")
    if g.shape[1] != r.shape[1]:
        raise ValueError("sample dimensions differ")
    return float(np.linalg.norm(g.mean(axis=0) - r.mean(axis=0)))


def component_recovery_error(generated, real, means) -> float:
    """Auxiliary diagnostic (not the headline metric): assign every sample to its
    nearest component mean and average, over components, the distance between
    generated and real per-component means.  A component that receives no
    generated samples contributes the distance from its real mean to the nearest
    generated sample mean overall."""
    g = np.atleast_2d(np.asarray(generated, dtype=float))
    r = np.atleast_2d(np.asarray(real, dtype=float))
    mu = np.atleast_2d(np.asarray(means, dtype=float))
    lab_g = np.argmin(((g[:, None, :] - mu[None]) ** 2).sum(-1), axis=1)
    lab_r = np.argmin(((r[:, None, :] - mu[None]) ** 2).sum(-1), axis=1)
    errs = []
    for c in range(mu.shape[0]):
        rc = r[lab_r == c]
        if rc.shape[0] == 0:
            continue
        gc = g[lab_g == c]
        ref = gc.mean(axis=0) if gc.shape[0] else g.mean(axis=0)
        errs.append(np.linalg.norm(ref - rc.mean(axis=0)))
    return float(np.mean(errs))


@dataclass(frozen=True)
class MatchResult:
    """``permutation[j]`` is the estimated column matched to true column ``j``."""

    permutation: tuple[int, ...]
    signs: tuple[int, ...]
    residual: float


def _entries(D):
    return D.entries if isinstance(D, Dictionary) else np.asarray(D, dtype=float)


def dictionary_recovery(D_hat, D0) -> MatchResult:
    """Match normalized columns of ``D_hat`` to ``D0`` up to permutation and sign."""
    dh, d0 = _entries(D_hat), _entries(D0)
    if dh.shape != d0.shape:
        raise ValueError(f"shape mismatch {dh.shape} vs {d0.shape}")
    norms = np.linalg.norm(dh, axis=0)
    dn = dh / np.where(norms > 0, norms, 1.0)
    c = dn.T @ d0
    rows, cols = linear_sum_assignment(-np.abs(c))
    perm = np.empty(d0.shape[1], dtype=int)
    perm[cols] = rows
    signs = np.where(c[perm, np.arange(d0.shape[1])] < 0, -1, 1)
    residual = float(np.linalg.norm(dn[:, perm] * signs - d0))
    return MatchResult(tuple(int(p) for p in perm), tuple(int(s) for s in signs), residual)


def _orth_basis(a, tol=1e-10):
    """Orthonormal bases of col(a) and of its orthogonal complement."""
    u, sv, _ = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 0.0)))
    return u[:, :r], u[:, r:]


def alignment_residual(D, T, latent_spec: LatentSpec, n_probe: int,
                       rng: np.random.Generator, quantile: float = 0.5) -> float:
    """Mean squared off-span response of the transform rows that face away from
    the active synthesis subspace.

    For each probe a support ``S`` is drawn from ``latent_spec``; ``u`` is a
    random unit vector in span(D_S) and ``v`` one in its orthogonal complement.
    Rows whose span response ``(t_i . u)^2`` is at or below the ``quantile`` of
    all rows' span responses are "orthogonal-facing"; the probe contributes the
    mean of ``(t_i . v)^2`` over those rows.  Probes with an empty complement
    contribute zero.
    """
    d, t = _entries(D), (T.entries if isinstance(T, Transform) else np.asarray(T, dtype=float))
    supports = sample_supports(latent_spec, n_probe, rng)
    total = 0.0
    for S in supports:
        span, comp = _orth_basis(d[:, S])
        g = rng.standard_normal(span.shape[1])
        h = rng.standard_normal(comp.shape[1])
        if comp.shape[1] == 0:
            continue
        u = span @ (g / np.linalg.norm(g))
        v = comp @ (h / np.linalg.norm(h))
        on = (t @ u) ** 2
        facing = on <= np.quantile(on, quantile)
        total += float(np.mean((t[facing] @ v) ** 2))
    return total / n_probe


@dataclass(frozen=True)
class SaddleResult:
    D: Dictionary
    T: Transform
    value: float
    grid_error_bound: float
    n_grid_points: int


def _transform_grid(n, m, res):
    if n == 1:
        rows = np.array([[-1.0], [1.0]])
    elif n == 2:
        ang = 2 * np.pi * np.arange(res) / res
        rows = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        raise ValueError("grid oracle supports n = 1 or n = 2 only")
    combos = itertools.product(range(rows.shape[0]), repeat=m)
    return np.array([rows[list(c)] for c in combos]), (np.pi / res if n == 2 else 0.0)


def _dictionary_grid(n, k, bound, res):
    axis = np.linspace(-bound, bound, res)
    pts = np.array(list(itertools.product(axis, repeat=n * k)))
    pts = pts[np.linalg.norm(pts, axis=1) <= bound * (1 + 1e-12)]
    step = axis[1] - axis[0] if res > 1 else 2 * bound
    return pts.reshape(-1, n, k), step


def bruteforce_saddle(batch: SampleBatch, cfg: GameConfig, grid_resolution: int,
                      m: int | None = None) -> SaddleResult:
    """Exhaustive minimax ``min_D max_T`` of the empirical objective on a grid.

    D ranges over a regular grid of the Frobenius ball; T rows over unit
    vectors ({-1, 1} when n = 1, equally spaced angles when n = 2).
    ``grid_error_bound`` is a Lipschitz bound on how far the grid value can be
    from the minimax value over the continuous feasible sets.
    """
    x, z = batch.data, batch.latents
    n, k = x.shape[1], z.shape[1]
    m = m or n
    bound = cfg.bound_for(k)
    t_grid, dtheta = _transform_grid(n, m, grid_resolution)
    d_count_est = grid_resolution ** (n * k)
    if d_count_est * t_grid.shape[0] > MAX_GRID_POINTS:
        raise ValueError(f"grid of {d_count_est * t_grid.shape[0]} points exceeds "
                         f"{MAX_GRID_POINTS}")
    d_grid, dstep = _dictionary_grid(n, k, bound, grid_resolution)

    real = np.array([np.mean(_phi(cfg.energy, x @ tt.T)) for tt in t_grid])
    reg = np.array([np.sum((np.square(tt).sum(1) - 1.0) ** 2) for tt in t_grid])
    values = np.empty((d_grid.shape[0], t_grid.shape[0]))
    chunk = max(1, 2_000_000 // max(1, z.shape[0] * t_grid.shape[0] * m))
    for lo in range(0, d_grid.shape[0], chunk):
        g = np.einsum("bk,dnk->dbn", z, d_grid[lo:lo + chunk])
        tg = np.einsum("dbn,tmn->dtbm", g, t_grid)
        fake = _phi(cfg.energy, tg).mean(axis=2)
        values[lo:lo + chunk] = real[None] - fake + cfg.lam * reg[None]

    worst = values.max(axis=1)
    i = int(np.argmin(worst))
    j = int(np.argmax(values[i]))

    # Lipschitz constants of the objective in D (Frobenius) and per-row angle
    zn = np.linalg.norm(z, axis=1)
    xn = np.linalg.norm(x, axis=1)
    if EnergyKind(cfg.energy) is EnergyKind.L1:
        lip_d = m * np.mean(zn)
        lip_t = m * (np.mean(xn) + bound * np.mean(zn))
    else:
        lip_d = 2 * m * bound * np.mean(zn ** 2)
        lip_t = 2 * m * (np.mean(xn ** 2) + bound ** 2 * np.mean(zn ** 2))
    # nearest in-ball grid point lies within one cell diagonal of any feasible D
    err = lip_d * dstep * np.sqrt(n * k) + lip_t * dtheta
    return SaddleResult(Dictionary(d_grid[i], bound), Transform(t_grid[j]),
                        float(values[i, j]), float(err), int(values.size))


def _phi(kind, u):
    return np.abs(u).sum(-1) if EnergyKind(kind) is EnergyKind.L1 else np.square(u).sum(-1)


@dataclass(frozen=True)
class RateFit:
    sample_sizes: tuple[int, ...]
    gaps: tuple[float, ...]
    fitted_exponent: float
    fitted_log_constant: float
    trial_gaps: tuple[tuple[float, ...], ...] = ()
    excluded: tuple[tuple[int, int, str], ...] = ()
    reference_value: float | None = None


def fit_power_law(sample_sizes, gaps) -> RateFit:
    """Least-squares line through (log N, log gap)."""
    ns = np.asarray(sample_sizes, dtype=float)
    gs = np.asarray(gaps, dtype=float)
    if ns.size != gs.size or ns.size < 3:
        raise ValueError("need at least three (N, gap) pairs")
    if np.any(gs <= 0) or np.any(ns <= 0):
        raise ValueError("sample sizes and gaps must be positive")
    slope, intercept = np.polyfit(np.log(ns), np.log(gs), 1)
    return RateFit(tuple(int(v) for v in ns), tuple(float(v) for v in gs),
                   float(slope), float(intercept))


@dataclass(frozen=True)
class RateSetup:
    """Problem and solver settings for :func:`rate_experiment`."""

    n: int = 2
    k: int = 2
    s: int = 1
    m: int = 16
    min_singular: float = 0.5
    n_eval_latents: int = 20_000
    ref_factor: int = 10
    game: GameConfig = GameConfig()
    train: TrainConfig = TrainConfig()


def rate_experiment(Ns, trials: int, setup: RateSetup = RateSetup(), seed: int = 0) -> RateFit:
    """Gap between empirical equilibrium values at N samples and a reference
    equilibrium trained on ``ref_factor * max(Ns)`` samples, averaged over trials
    and fitted in log-log space.

    The value of a trained pair is the empirical objective on its own training
    data, with the generated term averaged over a fixed evaluation latent
    sample shared by every run.
    """
    Ns = [int(v) for v in Ns]
    if len(Ns) < 3 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be at least three increasing sample sizes")
    gt = random_ground_truth(setup.n, setup.k, setup.s, make_rng(seed, 0),
                             min_singular=setup.min_singular)
    z_eval = sample_latents(gt.latent, setup.n_eval_latents, make_rng(seed, 1))

    def value_at(N, stream):
        x = sample_synthesis(gt, N, make_rng(seed, 2, *stream))
        tc = _reseed(setup.train, seed, stream)
        D, T, _ = train(x, gt.latent, setup.game, tc, m=setup.m)
        return objective_terms(D.entries, T.entries, x, z_eval, setup.game).total

    ref = value_at(setup.ref_factor * max(Ns), (0, 0))
    gaps, per_n, excluded = [], [], []
    for i, N in enumerate(Ns):
        vals = []
        for tr in range(trials):
            try:
                vals.append(abs(value_at(N, (1 + i, tr)) - ref))
            except DivergenceError as exc:
                log.warning("rate trial N=%d #%d diverged: %s", N, tr, exc)
                excluded.append((N, tr, str(exc)))
        if not vals:
            raise RuntimeError(f"every trial at N={N} diverged")
        per_n.append(tuple(vals))
        gaps.append(float(np.mean(vals)))
    fit = fit_power_law(Ns, gaps)
    return RateFit(fit.sample_sizes, fit.gaps, fit.fitted_exponent, fit.fitted_log_constant,
                   tuple(per_n), tuple(excluded), float(ref))


def _reseed(tc: TrainConfig, seed, stream) -> TrainConfig:
    mixed = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(stream))
    return replace(tc, seed=int(mixed.generate_state(1, dtype=np.uint64)[0]))


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def config_hash(config) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metric_record(name: str, value, config=None, seed=None, **extra) -> dict:
    rec = {"metric": name, "value": _jsonable(value),
           "config_hash": None if config is None else config_hash(config), "seed": seed}
    rec.update({k: _jsonable(v) for k, v in extra.items()})
    return rec


def write_metric_records(path, records) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(list(records), indent=2, sort_keys=True) + "\n")
    return path


__all__ = [
    "MatchResult", "RateFit", "RateSetup", "SaddleResult",
    "alignment_residual", "bruteforce_saddle", "component_recovery_error", "config_hash",
    "dictionary_recovery", "fit_power_law", "metric_record", "rate_experiment",
    "recovery_error", "write_metric_records",
]

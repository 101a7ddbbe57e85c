"""Linear operators, latent model, energy functionals and feasible-set projections.

A dictionary ``D`` (n x k) synthesizes samples ``x = D z`` from sparse latents;
a transform ``T`` (m x n) scores samples through the energy ``phi(T x)``.
All containers are frozen and hold read-only arrays, so every operation here
is a pure function of its arguments.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

ROW_EPS = 1e-12


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class DegenerateRowError(ValueError):
    """A transform row is too short to be normalized."""

    def __init__(self, rows):
        self.rows = list(rows)
        super().__init__(f"transform rows {self.rows} have norm below {ROW_EPS:g}")


def _frozen_matrix(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


class EnergyKind(str, enum.Enum):
    L1 = "l1"
    L2SQ = "l2sq"


@dataclass(frozen=True)
class Dictionary:
    """Synthesis operator with the Frobenius-ball bound ``frob_bound``."""

    entries: np.ndarray
    frob_bound: float

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_matrix(self.entries))
        if not self.frob_bound > 0:
            raise ValueError("frob_bound must be positive")
        object.__setattr__(self, "frob_bound", float(self.frob_bound))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    @property
    def frob_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def is_feasible(self, tol: float = 1e-9) -> bool:
        return self.frob_norm <= self.frob_bound + tol


@dataclass(frozen=True)
class Transform:
    """Analysis operator; rows are unit-norm on the feasible set."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_matrix(self.entries))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=1)

    def max_row_deviation(self) -> float:
        return float(np.max(np.abs(self.row_norms() - 1.0)))


@dataclass(frozen=True)
class LatentSpec:
    """Law of the sparse latent: a uniformly random size-``s`` support.

    ``coeff_law`` is ``"normal"`` (i.i.d. standard normal on the support) or
    ``"ones"`` (every active coefficient equals one; used for toy games).
    """

    k: int
    s: int
    support_law: str = "uniform"
    coeff_law: str = "normal"

    def __post_init__(self):
        if self.k < 1 or not 1 <= self.s <= self.k:
            raise ValueError(f"need 1 <= s <= k, got s={self.s}, k={self.k}")
        if self.support_law != "uniform":
            raise ValueError(f"unsupported support law {self.support_law!r}")
        if self.coeff_law not in ("normal", "ones"):
            raise ValueError(f"unsupported coefficient law {self.coeff_law!r}")

    @property
    def n_supports(self) -> int:
        return math.comb(self.k, self.s)


@dataclass(frozen=True)
class SparseLatent:
    values: np.ndarray
    support: tuple[int, ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        supp = tuple(sorted(int(i) for i in self.support))
        if any(i < 0 or i >= v.size for i in supp):
            raise DimensionError("support index out of range")
        off = np.ones(v.size, dtype=bool)
        off[list(supp)] = False
        if np.any(v[off] != 0):
            raise ValueError("latent has nonzero values outside its support")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support", supp)

    @classmethod
    def from_dense(cls, values) -> "SparseLatent":
        v = np.asarray(values, dtype=float).reshape(-1)
        return cls(v, tuple(np.flatnonzero(v)))


@dataclass(frozen=True)
class GameConfig:
    """Constants of the game.

    ``lam`` weighs the row-norm regularizer inside the objective.
    ``row_penalty_weight`` is a training-only penalty subtracted from the
    discriminator's ascent direction; it keeps rows bounded when hard row
    projection is switched off.  ``frob_bound=None`` means ``sqrt(k)``.
    """

    energy: EnergyKind = EnergyKind.L1
    lam: float = 1.0
    frob_bound: float | None = None
    row_penalty_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "energy", EnergyKind(self.energy))
        if not self.lam >= 0:
            raise ValueError("lam must be nonnegative")
        if self.frob_bound is not None and not self.frob_bound > 0:
            raise ValueError("frob_bound must be positive")
        if not self.row_penalty_weight >= 0:
            raise ValueError("row_penalty_weight must be nonnegative")

    def bound_for(self, k: int) -> float:
        return math.sqrt(k) if self.frob_bound is None else float(self.frob_bound)


def _latent_array(z) -> np.ndarray:
    if isinstance(z, SparseLatent):
        return z.values
    return np.asarray(z, dtype=float)


def synthesize(D: Dictionary, z) -> np.ndarray:
    """Return ``D @ z``; ``z`` is a SparseLatent, a k-vector or an (N, k) batch."""
    zv = _latent_array(z)
    if zv.shape[-1] != D.k:
        raise DimensionError(f"latent length {zv.shape[-1]} does not match k={D.k}")
    if isinstance(z, SparseLatent):
        cols = list(z.support)
        return D.entries[:, cols] @ zv[cols]
    return zv @ D.entries.T


def energy(phi: EnergyKind, u) -> np.ndarray | float:
    """l1 norm or squared l2 norm along the last axis."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("energy of a non-finite vector")
    phi = EnergyKind(phi)
    out = np.abs(u).sum(axis=-1) if phi is EnergyKind.L1 else np.square(u).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def transform_energy(T: Transform, phi: EnergyKind, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != T.n:
        raise DimensionError(f"sample length {x.shape[-1]} does not match n={T.n}")
    return energy(phi, x @ T.entries.T)


def row_penalty(T: Transform) -> float:
    """Sum over rows of (||t_i||^2 - 1)^2."""
    sq = np.square(T.entries).sum(axis=1)
    return float(np.sum(np.square(sq - 1.0)))


def row_penalty_grad(T) -> np.ndarray:
    t = T.entries if isinstance(T, Transform) else np.asarray(T)
    sq = np.square(t).sum(axis=1, keepdims=True)
    return 4.0 * (sq - 1.0) * t


def project_dictionary(D: Dictionary) -> Dictionary:
    f = D.frob_norm
    # rescaling can overshoot the bound by an ulp; treat that as feasible so
    # projecting twice is the same as projecting once
    if f <= D.frob_bound * (1.0 + 4 * np.finfo(float).eps):
        return D
    return Dictionary(D.entries * (D.frob_bound / f), D.frob_bound)


def project_transform_rows(T: Transform) -> Transform:
    norms = T.row_norms()
    bad = np.flatnonzero(norms < ROW_EPS)
    if bad.size:
        raise DegenerateRowError(bad)
    if np.all(np.abs(norms - 1.0) <= ROW_EPS):
        return T
    return Transform(T.entries / norms[:, None])


def normalize_rows(t: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """Row-normalize ``t``, redrawing degenerate rows from ``rng`` when given."""
    t = np.array(t, dtype=float)
    norms = np.linalg.norm(t, axis=1)
    bad = np.flatnonzero(norms < ROW_EPS)
    if bad.size:
        if rng is None:
            raise DegenerateRowError(bad)
        while bad.size:
            t[bad] = rng.standard_normal((bad.size, t.shape[1]))
            norms = np.linalg.norm(t, axis=1)
            bad = np.flatnonzero(norms < ROW_EPS)
    return t / norms[:, None]

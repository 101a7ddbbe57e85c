"""Seeded samplers for sparse-synthesis data and the three 2-D benchmark regimes.

Random state is a :class:`numpy.random.Generator` over the counter-based
Philox bit generator.  Samplers consume the generator they are handed, so a
generator built from the same seed always yields the same stream; use
:func:`make_rng` with distinct ``stream`` keys to get non-overlapping
substreams (data, latents, initialization, ...).
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Dictionary, LatentSpec, SparseLatent, synthesize


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` selects an independent substream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MixtureSpec:
    separation: float = 2.5
    component_var: float = 1.0
    dim: int = 2
    num_components: int = 4

    def __post_init__(self):
        if self.dim != 2 or self.num_components != 4:
            raise ValueError("only the four-corner mixture in R^2 is supported")
        if self.separation < 0 or self.component_var < 0:
            raise ValueError("separation and component_var must be nonnegative")

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.num_components, 1.0 / self.num_components)

    @property
    def means(self) -> np.ndarray:
        corners = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
        return self.separation * corners / np.sqrt(2.0)


@dataclass(frozen=True)
class HeavyTailSpec:
    base: MixtureSpec = MixtureSpec()
    dof: float = 3.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if not self.dof > 1:
            raise ValueError("Student-t degrees of freedom must exceed 1 (finite mean)")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class BlockMixtureSpec:
    noise_scale: float = 0.2
    half_width: float = 3.0
    dim: int = 2

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")
        if self.dim != 2:
            raise ValueError("only the axis-aligned mixture in R^2 is supported")


@dataclass(frozen=True)
class GroundTruth:
    D0: Dictionary
    latent: LatentSpec
    min_singular: float = 1e-8

    def __post_init__(self):
        if self.latent.k != self.D0.k:
            raise ValueError("latent k does not match the dictionary")
        cols = np.linalg.norm(self.D0.entries, axis=0)
        if not np.allclose(cols, 1.0, atol=1e-10):
            raise ValueError("ground-truth dictionary must have unit-norm columns")
        for S in itertools.combinations(range(self.D0.k), self.latent.s):
            sv = np.linalg.svd(self.D0.entries[:, S], compute_uv=False)
            if sv[-1] <= self.min_singular:
                raise ValueError(f"columns {S} of D0 are rank deficient")


def random_ground_truth(n: int, k: int, s: int, rng: np.random.Generator,
                        min_singular: float = 0.0, max_tries: int = 1000) -> GroundTruth:
    """Unit-column dictionary whose smallest singular value is at least ``min_singular``."""
    latent = LatentSpec(k=k, s=s)
    for _ in range(max_tries):
        d = rng.standard_normal((n, k))
        d /= np.linalg.norm(d, axis=0)
        if np.linalg.svd(d, compute_uv=False)[-1] >= min_singular:
            try:
                return GroundTruth(Dictionary(d, np.sqrt(k)), latent)
            except ValueError:
                continue
    raise RuntimeError("could not draw a well-conditioned ground-truth dictionary")


def sample_supports(spec: LatentSpec, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """(n_samples, s) array of sorted supports, uniform over size-s subsets."""
    keys = rng.random((n_samples, spec.k))
    return np.sort(np.argsort(keys, axis=1)[:, : spec.s], axis=1)


def sample_latents(spec: LatentSpec, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """(n_samples, k) array of sparse latents."""
    supp = sample_supports(spec, n_samples, rng)
    if spec.coeff_law == "normal":
        coeffs = rng.standard_normal((n_samples, spec.s))
    else:
        coeffs = np.ones((n_samples, spec.s))
    z = np.zeros((n_samples, spec.k))
    np.put_along_axis(z, supp, coeffs, axis=1)
    return z


def sample_latent(spec: LatentSpec, rng: np.random.Generator) -> SparseLatent:
    z = sample_latents(spec, 1, rng)[0]
    return SparseLatent(z, tuple(np.flatnonzero(z)))


def sample_synthesis(gt: GroundTruth, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    if n_samples == 0:
        return np.zeros((0, gt.D0.n))
    return synthesize(gt.D0, sample_latents(gt.latent, n_samples, rng))


def _mixture_draw(spec: MixtureSpec, n_samples, rng):
    comp = rng.integers(0, spec.num_components, size=n_samples)
    noise = np.sqrt(spec.component_var) * rng.standard_normal((n_samples, spec.dim))
    return spec.means[comp] + noise, comp


def sample_gmm(spec: MixtureSpec, n_samples: int, rng: np.random.Generator,
               return_components: bool = False):
    x, comp = _mixture_draw(spec, n_samples, rng)
    return (x, comp) if return_components else x


def sample_heavy(spec: HeavyTailSpec, n_samples: int, rng: np.random.Generator,
                 return_components: bool = False):
    x, comp = _mixture_draw(spec.base, n_samples, rng)
    # drawn after the mixture so the mixture part matches sample_gmm
    x = x + spec.noise_scale * rng.standard_t(spec.dof, size=x.shape)
    return (x, comp) if return_components else x


def sample_block(spec: BlockMixtureSpec, n_samples: int, rng: np.random.Generator,
                 return_components: bool = False):
    axis = rng.integers(0, spec.dim, size=n_samples)
    on = rng.uniform(-spec.half_width, spec.half_width, size=n_samples)
    off = spec.noise_scale * rng.standard_normal(n_samples)
    x = np.empty((n_samples, spec.dim))
    rows = np.arange(n_samples)
    x[rows, axis] = on
    x[rows, 1 - axis] = off
    return (x, axis) if return_components else x


def write_samples_csv(path, samples) -> Path:
    """One sample per row, columns x0, x1, ..."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([repr(float(v)) for v in row])
    return path

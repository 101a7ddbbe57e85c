"""Central finite-difference checks for the hand-written gradients."""
from __future__ import annotations

import numpy as np

from .baseline_gan import (
    MlpParams,
    discriminator_loss_and_grad,
    gan_forward_generator,
    generator_loss_and_grad,
)
from .core import Dictionary, EnergyKind, GameConfig, Transform
from .datagen import make_rng
from .objective import SampleBatch, empirical_objective, grad_dictionary, grad_transform

FD_STEP = 1e-5


def central_difference(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Numerical gradient of the scalar function ``f`` at array ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        up = f(x)
        x[idx] = orig - h
        down = f(x)
        x[idx] = orig
        g[idx] = (up - down) / (2 * h)
    return g


def relative_error(analytic, numeric) -> float:
    """``max|a - n| / max(max|a|, max|n|)``, with a floor to keep zero gradients sane."""
    a, n = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    scale = max(np.max(np.abs(a)), np.max(np.abs(n)), 1e-8)
    return float(np.max(np.abs(a - n)) / scale)


def random_game_instance(rng, n=3, k=4, m=5, n_x=7, n_z=6):
    d = rng.standard_normal((n, k))
    t = rng.standard_normal((m, n))
    batch = SampleBatch(rng.standard_normal((n_x, n)), rng.standard_normal((n_z, k)))
    return d, t, batch


def game_gradient_errors(d, t, batch, cfg: GameConfig, h: float = FD_STEP):
    """Relative errors of (grad_transform, grad_dictionary) against finite differences."""
    bound = max(10.0 * np.linalg.norm(d), 1.0)
    D, T = Dictionary(d, bound), Transform(t)

    def f_t(tt):
        return empirical_objective(D, Transform(tt), batch, cfg).total

    def f_d(dd):
        return empirical_objective(Dictionary(dd, bound), T, batch, cfg).total

    e_t = relative_error(grad_transform(D, T, batch, cfg), central_difference(f_t, t, h))
    e_d = relative_error(grad_dictionary(D, T, batch, cfg), central_difference(f_d, d, h))
    return e_t, e_d


def dictionary_gradient_suite(n_instances: int = 20, seed: int = 0) -> float:
    """Largest relative error over random squared-l2 instances (both players)."""
    rng = make_rng(seed, 900)
    worst = 0.0
    for _ in range(n_instances):
        d, t, batch = random_game_instance(rng)
        cfg = GameConfig(energy=EnergyKind.L2SQ, lam=float(rng.uniform(0.1, 2.0)))
        worst = max(worst, *game_gradient_errors(d, t, batch, cfg))
    return worst


def _mlp_from_flat(template: MlpParams, flat) -> MlpParams:
    parts, i = [], 0
    for p in (template.w1, template.b1, template.w2, template.b2):
        parts.append(np.asarray(flat[i:i + p.size]).reshape(p.shape))
        i += p.size
    return MlpParams(*parts)


def gan_gradient_errors(gen: MlpParams, disc: MlpParams, x_real, z, h: float = FD_STEP):
    """Relative errors of discriminator and generator backprop against finite differences."""
    x_fake = gan_forward_generator(gen, z)
    _, _, _, g_disc = discriminator_loss_and_grad(disc, x_real, x_fake)
    num_disc = central_difference(
        lambda v: discriminator_loss_and_grad(_mlp_from_flat(disc, v), x_real, x_fake)[0],
        disc.flat(), h)
    _, g_gen = generator_loss_and_grad(gen, disc, z)
    num_gen = central_difference(
        lambda v: generator_loss_and_grad(_mlp_from_flat(gen, v), disc, z)[0], gen.flat(), h)
    return relative_error(g_disc.flat(), num_disc), relative_error(g_gen.flat(), num_gen)


def _with_random_biases(p: MlpParams, rng) -> MlpParams:
    return MlpParams(p.w1, 0.1 * rng.standard_normal(p.b1.shape), p.w2,
                     0.1 * rng.standard_normal(p.b2.shape))


def gan_gradient_suite(n_instances: int = 20, seed: int = 0, batch: int = 2) -> float:
    """Largest relative error of GAN backprop over random small networks."""
    rng = make_rng(seed, 901)
    worst = 0.0
    for _ in range(n_instances):
        gen, disc = (_with_random_biases(MlpParams.init(2, 8, out, rng), rng) for out in (2, 1))
        x_real = rng.standard_normal((batch, 2))
        z = rng.standard_normal((batch, 2))
        worst = max(worst, *gan_gradient_errors(gen, disc, x_real, z))
    return worst

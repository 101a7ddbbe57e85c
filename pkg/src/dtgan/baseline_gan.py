"""Two-layer ReLU GAN baseline with hand-written forward and backward passes.

Generator: ``z -> relu(z W1 + b1) W2 + b2``.  Discriminator:
``x -> sigmoid(relu(x W1 + b1) W2 + b2)``.  The discriminator minimizes binary
cross-entropy, the generator the non-saturating loss ``-log D(G(z))``.
Probabilities are clamped to ``[PROB_EPS, 1 - PROB_EPS]`` inside the logs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import make_rng
from .objective import ObjectiveValue
from .trainer import DivergenceError, TrainRecord, TrainTrajectory

PROB_EPS = 1e-7


@dataclass(frozen=True)
class MlpParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        if self.w1.shape[1] != self.b1.shape[0] or self.w2.shape[0] != self.w1.shape[1] \
                or self.w2.shape[1] != self.b2.shape[0]:
            raise ValueError("inconsistent layer shapes")

    @classmethod
    def init(cls, n_in, n_hidden, n_out, rng):
        return cls(rng.standard_normal((n_in, n_hidden)) / np.sqrt(n_in), np.zeros(n_hidden),
                   rng.standard_normal((n_hidden, n_out)) / np.sqrt(n_hidden), np.zeros(n_out))

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in (self.w1, self.b1, self.w2, self.b2)])

    def axpy(self, alpha, grad: "MlpParams") -> "MlpParams":
        """Return ``self + alpha * grad``."""
        return MlpParams(self.w1 + alpha * grad.w1, self.b1 + alpha * grad.b1,
                         self.w2 + alpha * grad.w2, self.b2 + alpha * grad.b2)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.flat())))


@dataclass(frozen=True)
class GanParams:
    gen: MlpParams
    disc: MlpParams


@dataclass(frozen=True)
class GanConfig:
    latent_dim: int = 2
    hidden_dim: int = 32
    step_size_G: float = 1e-2
    step_size_D: float = 1e-2
    batch_size: int = 256
    iterations: int = 2000
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        for name in ("latent_dim", "hidden_dim", "batch_size", "iterations", "log_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.step_size_G < 0 or self.step_size_D < 0:
            raise ValueError("step sizes must be nonnegative")


def init_gan(n: int, cfg: GanConfig) -> GanParams:
    rng = make_rng(cfg.seed, 10)
    return GanParams(MlpParams.init(cfg.latent_dim, cfg.hidden_dim, n, rng),
                     MlpParams.init(n, cfg.hidden_dim, 1, rng))


def _forward(p: MlpParams, inp):
    pre = inp @ p.w1 + p.b1
    h = np.maximum(pre, 0.0)
    return pre, h, h @ p.w2 + p.b2


def gan_forward_generator(gen: MlpParams, z_batch) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z_batch, dtype=float))
    if z.shape[1] != gen.w1.shape[0]:
        raise ValueError(f"latent width {z.shape[1]} does not match {gen.w1.shape[0]}")
    return _forward(gen, z)[2]


def gan_forward_discriminator(disc: MlpParams, x) -> np.ndarray:
    """Probabilities of being real, shape (B,)."""
    logit = _forward(disc, np.atleast_2d(x))[2][:, 0]
    return 1.0 / (1.0 + np.exp(-logit))


def _backward(p: MlpParams, inp, pre, h, dout):
    """Gradients of a two-layer net given dLoss/dOutput; also returns dLoss/dInput."""
    dh = dout @ p.w2.T
    dpre = dh * (pre > 0)
    grad = MlpParams(inp.T @ dpre, dpre.sum(axis=0), h.T @ dout, dout.sum(axis=0))
    return grad, dpre @ p.w1.T


def _clamped(prob):
    c = np.clip(prob, PROB_EPS, 1 - PROB_EPS)
    return c, (prob == c)


def discriminator_loss_and_grad(disc: MlpParams, x_real, x_fake):
    """BCE loss ``-mean log D(x_real) - mean log(1 - D(x_fake))`` and its gradient.

    Returns ``(loss, real_part, fake_part, grad)``.
    """
    parts, grads = [], []
    for x, real in ((x_real, True), (x_fake, False)):
        pre, h, logit = _forward(disc, x)
        prob = 1.0 / (1.0 + np.exp(-logit[:, 0]))
        c, live = _clamped(prob)
        b = x.shape[0]
        if real:
            parts.append(-np.mean(np.log(c)))
            dlogit = -(1.0 - prob) * live / b
        else:
            parts.append(-np.mean(np.log(1.0 - c)))
            dlogit = prob * live / b
        grads.append(_backward(disc, x, pre, h, dlogit[:, None])[0])
    g = grads[0].axpy(1.0, grads[1])
    return parts[0] + parts[1], parts[0], parts[1], g


def generator_loss_and_grad(gen: MlpParams, disc: MlpParams, z):
    """Non-saturating loss ``-mean log D(G(z))`` and its gradient in the generator."""
    gpre, gh, x = _forward(gen, z)
    dpre, dh, logit = _forward(disc, x)
    prob = 1.0 / (1.0 + np.exp(-logit[:, 0]))
    c, live = _clamped(prob)
    loss = -np.mean(np.log(c))
    dlogit = -(1.0 - prob) * live / z.shape[0]
    _, dx = _backward(disc, x, dpre, dh, dlogit[:, None])
    grad, _ = _backward(gen, z, gpre, gh, dx)
    return loss, grad


def gan_step(params: GanParams, real_batch, cfg: GanConfig, rng: np.random.Generator,
             iteration: int = 0):
    """One discriminator step then one generator step; returns ``(params, losses)``."""
    x_real = np.atleast_2d(np.asarray(real_batch, dtype=float))
    b = x_real.shape[0]
    z = rng.standard_normal((b, cfg.latent_dim))
    x_fake = gan_forward_generator(params.gen, z)
    d_loss, real_part, fake_part, d_grad = discriminator_loss_and_grad(params.disc, x_real, x_fake)
    if not np.isfinite(d_loss):
        raise DivergenceError(iteration, "discriminator loss")
    disc = params.disc.axpy(-cfg.step_size_D, d_grad) if cfg.step_size_D else params.disc
    z = rng.standard_normal((b, cfg.latent_dim))
    g_loss, g_grad = generator_loss_and_grad(params.gen, disc, z)
    if not np.isfinite(g_loss):
        raise DivergenceError(iteration, "generator loss")
    gen = params.gen.axpy(-cfg.step_size_G, g_grad) if cfg.step_size_G else params.gen
    if not (gen.is_finite() and disc.is_finite()):
        raise DivergenceError(iteration, "parameters")
    return GanParams(gen, disc), (d_loss, real_part, fake_part, g_loss)


@dataclass
class GanTrainResult:
    params: GanParams
    trajectory: TrainTrajectory
    divergence: DivergenceError | None = None

    def __iter__(self):
        return iter((self.params, self.trajectory, self.divergence))


def train_gan(data, cfg: GanConfig, stop_on_divergence: bool = False) -> GanTrainResult:
    """Minibatch training on the fixed sample set ``data``.

    The trajectory reuses the dictionary trainer's CSV schema: ``total`` is the
    discriminator loss, ``real_term``/``fake_term`` its two parts, ``reg_term``
    the generator loss, ``frob_D`` the generator's parameter norm.

    A non-finite loss raises ``DivergenceError`` unless ``stop_on_divergence``
    is set, in which case training halts, the last finite parameters are kept
    and the error is stored on the result.  Unpacks as
    ``params, trajectory, divergence``.
    """
    x_all = np.atleast_2d(np.asarray(data, dtype=float))
    params = init_gan(x_all.shape[1], cfg)
    rng = make_rng(cfg.seed, 11)
    traj = TrainTrajectory()
    for it in range(1, cfg.iterations + 1):
        batch = x_all[rng.integers(0, x_all.shape[0], size=cfg.batch_size)]
        try:
            # non-finite values are caught inside gan_step
            with np.errstate(over="ignore", invalid="ignore"):
                params, (d_loss, rp, fp, g_loss) = gan_step(params, batch, cfg, rng, it)
        except DivergenceError as exc:
            if not stop_on_divergence:
                raise
            return GanTrainResult(params, traj, exc)
        if it % cfg.log_every == 0 or it == cfg.iterations:
            traj.append(TrainRecord(it, ObjectiveValue(d_loss, rp, fp, g_loss),
                                    float(np.linalg.norm(params.gen.flat())), 0.0))
    return GanTrainResult(params, traj)


def gan_sample(params: GanParams, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n_samples, params.gen.w1.shape[0]))
    return gan_forward_generator(params.gen, z)


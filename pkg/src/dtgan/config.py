"""Experiment configuration files (TOML) and their dataclass form."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import tomli
import tomli_w

from .baseline_gan import GanConfig
from .core import EnergyKind, GameConfig
from .trainer import TrainConfig

REGIMES = ("gmm", "heavy", "block", "synthesis", "rate", "saddle")
MODELS = ("dtgan", "gan", "both")
OUTPUT_ENV = "DTGAN_OUTPUT_DIR"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment grid: regime parameter values x models x seeds.

    ``params`` holds the swept regime parameter: separations (gmm), Student-t
    degrees of freedom (heavy), noise scales (block), sparsity levels
    (synthesis), sample sizes (rate) or grid resolutions (saddle).
    """

    regime: str
    params: tuple[float, ...]
    model: str = "both"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    n_samples: int = 5000
    n_generated: int = 10_000
    n: int = 2
    k: int = 2
    s: int = 1
    m: int = 16
    separation: float = 2.5
    noise_scale: float = 1.0
    trials: int = 5
    output: str = "results"
    train: TrainConfig = field(default_factory=TrainConfig)
    game: GameConfig = field(default_factory=GameConfig)
    gan: GanConfig = field(default_factory=GanConfig)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.params:
            raise ValueError("at least one regime parameter value is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.regime in ("gmm", "heavy", "block") and self.n != 2:
            raise ValueError(f"the {self.regime} regime lives in R^2; set n = 2")
        if self.regime == "heavy" and min(self.params) <= 1:
            raise ValueError("heavy-tail degrees of freedom must exceed 1")
        if self.regime == "block" and min(self.params) < 0:
            raise ValueError("noise scales must be nonnegative")
        if self.regime == "synthesis" and any(not 1 <= p <= self.k for p in self.params):
            raise ValueError("sparsity levels must lie in [1, k]")
        if self.model == "both":
            if self.train.outer_iters != self.gan.iterations \
                    or self.train.batch_size != self.gan.batch_size:
                raise ValueError("budget parity: DT-GAN and GAN need equal iteration counts "
                                 "and batch sizes")

    @property
    def models(self) -> tuple[str, ...]:
        return ("dtgan", "gan") if self.model == "both" else (self.model,)

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV, self.output))

    def budget(self) -> dict:
        return {"dtgan": {"iterations": self.train.outer_iters,
                          "batch_size": self.train.batch_size},
                "gan": {"iterations": self.gan.iterations, "batch_size": self.gan.batch_size}}


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def to_dict(cfg: ExperimentConfig) -> dict:
    top = {f.name: getattr(cfg, f.name) for f in fields(cfg)
           if f.name not in ("train", "game", "gan")}
    top["params"] = list(cfg.params)
    top["seeds"] = list(cfg.seeds)
    game = asdict(cfg.game)
    game["energy"] = EnergyKind(cfg.game.energy).value
    top["train"] = _drop_none(asdict(cfg.train))
    top["game"] = _drop_none(game)
    top["gan"] = asdict(cfg.gan)
    return top


def from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    train = TrainConfig(**d.pop("train", {}))
    game = GameConfig(**d.pop("game", {}))
    gan = GanConfig(**d.pop("gan", {}))
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(train=train, game=game, gan=gan, **d)


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def loads(text: str) -> ExperimentConfig:
    return from_dict(tomli.loads(text))


def load(path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def save(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(cfg))
    return path


CANNED = {
    "table1": "table1_gmm.toml",
    "table2": "table2_heavy.toml",
    "table3": "table3_block.toml",
    "identifiability": "identifiability.toml",
    "rate": "rate.toml",
    "saddle": "saddle.toml",
}


def canned(name: str) -> ExperimentConfig:
    """A config shipped with the package (see ``CANNED``)."""
    text = resources.files("dtgan.configs").joinpath(CANNED[name]).read_text()
    return loads(text)


def with_seeds(cfg: ExperimentConfig, seeds) -> ExperimentConfig:
    return replace(cfg, seeds=tuple(seeds))

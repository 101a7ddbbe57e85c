"""Dictionary-transform adversarial game: a sparse synthesis generator trained
against an analysis-transform energy discriminator, with a small neural GAN
baseline and an experiment harness."""

from .baseline_gan import GanConfig, MlpParams, gan_forward_generator, gan_step, train_gan
from .config import ExperimentConfig
from .core import (
    DegenerateRowError,
    Dictionary,
    DimensionError,
    EnergyKind,
    GameConfig,
    LatentSpec,
    SparseLatent,
    Transform,
    energy,
    project_dictionary,
    project_transform_rows,
    row_penalty,
    synthesize,
    transform_energy,
)
from .datagen import (
    BlockMixtureSpec,
    GroundTruth,
    HeavyTailSpec,
    MixtureSpec,
    make_rng,
    sample_block,
    sample_gmm,
    sample_heavy,
    sample_latent,
    sample_synthesis,
)
from .experiments import ResultTable, reproduce_tables, run_experiment, verify
from .metrics import (
    MatchResult,
    RateFit,
    alignment_residual,
    bruteforce_saddle,
    dictionary_recovery,
    rate_experiment,
    recovery_error,
)
from .objective import (
    ObjectiveValue,
    SampleBatch,
    empirical_objective,
    grad_dictionary,
    grad_transform,
    nash_gap,
)
from .trainer import (
    DivergenceError,
    TrainConfig,
    TrainTrajectory,
    init_players,
    solve_inner_max,
    solve_inner_min,
    train,
)

__version__ = "0.1.0"

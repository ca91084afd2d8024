"""scoreforge: a desk-scale test bench for score distillation.

The package implements discrete diffusion noise schedules, exact
noise-prediction oracles for Gaussian mixtures, a tiny trainable
conditional denoiser, classifier-free guidance, the decomposition of a
guided prediction into condition / domain / denoising components, and
four distillation gradient estimators (sds, nfsd, dds, vsd) driving
differentiable generators through a deterministic optimization engine.

Every eps-predictor follows one duck-typed contract:

    predict(z, y, t) -> eps_hat

with z an array whose last axis is the sample dimension (leading axes are
batch), y a Condition, and t a 1-based integer timestep. Predictors are
deterministic and safe to call concurrently.
"""

from .conditions import DEGRADED, NULL, Condition, class_condition, parse_condition
from .decompose import (
    DecomposedScore,
    ResidualScanRow,
    condition_direction,
    decompose_score,
    default_tau,
    domain_correction_step,
    domain_direction,
    probe_id_ood,
    residual_scan,
)
from .denoiser import ConditionedDataset, TinyDenoiser, TrainConfig, train_eps_model
from .distill import (
    DEFAULT_CFG_SCALE,
    ESTIMATORS,
    GradEstimate,
    WeightFn,
    aux_update,
    dds_grad,
    nfsd_grad,
    sds_grad,
    vsd_grad,
)
from .engine import (
    AnnealConfig,
    DistillConfig,
    DistillState,
    RunResult,
    grad_variance_probe,
    run_distillation,
    sample_timestep,
)
from .exceptions import (
    ConditionError,
    ConfigError,
    DimensionError,
    NumericError,
    ProtocolError,
    TimestepError,
    TrainingError,
    TransportError,
)
from .generators import GeneratorParams, init_params, pullback, render
from .guidance import cfg_combine
from .mixture import (
    AnalyticMixturePredictor,
    ConditionBlindPredictor,
    MixtureComponent,
    MixtureSpec,
    point_mass_predictor,
)
from .optim import AdamState, adam_step
from .schedule import (
    NoiseSchedule,
    NoisySample,
    add_noise,
    ancestral_step,
    build_schedule,
    default_schedule,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AnalyticMixturePredictor",
    "AnnealConfig",
    "Condition",
    "ConditionBlindPredictor",
    "ConditionError",
    "ConditionedDataset",
    "ConfigError",
    "DEFAULT_CFG_SCALE",
    "DEGRADED",
    "DecomposedScore",
    "DimensionError",
    "DistillConfig",
    "DistillState",
    "ESTIMATORS",
    "GeneratorParams",
    "GradEstimate",
    "MixtureComponent",
    "MixtureSpec",
    "NULL",
    "NoiseSchedule",
    "NoisySample",
    "NumericError",
    "ProtocolError",
    "ResidualScanRow",
    "RunResult",
    "TimestepError",
    "TinyDenoiser",
    "TrainConfig",
    "TrainingError",
    "TransportError",
    "WeightFn",
    "add_noise",
    "adam_step",
    "ancestral_step",
    "aux_update",
    "build_schedule",
    "cfg_combine",
    "class_condition",
    "condition_direction",
    "dds_grad",
    "decompose_score",
    "default_schedule",
    "default_tau",
    "domain_correction_step",
    "domain_direction",
    "grad_variance_probe",
    "init_params",
    "nfsd_grad",
    "parse_condition",
    "point_mass_predictor",
    "probe_id_ood",
    "pullback",
    "render",
    "residual_scan",
    "run_distillation",
    "sample",
    "sample_timestep",
    "sds_grad",
    "train_eps_model",
    "vsd_grad",
]

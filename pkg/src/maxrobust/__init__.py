"""maxrobust: how optimizer, architecture, and regularizer choices set
the adversarial robustness of linear models.

The package trains linear and circular-convolution models with steepest
descent w.r.t. different norms, proximal regularization, and adversarial
training; measures normalized margins and largest survivable attack
budgets; and certifies the best achievable robustness with a convex
oracle. The central phenomenon: matching the training geometry to the
attack norm reaches maximal robustness without any adversarial training.
"""

__version__ = "0.1.0"

from .attacks import (
    AttackConfig,
    attack_report,
    fourier_linf_attack,
    linear_worst_case,
    max_robust_eps,
    pgd_attack,
    robust_error,
    worst_case_drop,
    write_attack_report,
)
from .data import (
    Dataset,
    DatasetFormatError,
    generate_gaussian_separable,
    load_dataset,
    save_dataset,
    verify_separable,
)
from .fourier import (
    HermitianSymmetryError,
    Spectrum,
    band_mask,
    circular_convolve,
    complex_linf_project,
    complex_soft_threshold,
    dft,
    dft_direct,
    flip,
    hermitian_mask,
    idft,
    spectrum_phases,
)
from .losses import log_risk, loss_derivative, loss_value
from .models import (
    ConvLinearNet,
    LinearModel,
    ModelFormatError,
    UndefinedMarginError,
    conv_gradients,
    decision,
    decision_layered,
    effective_weight,
    load_model,
    margin,
    save_model,
    weight_vector,
)
from .norms import NormKind, dual, dual_witness, norm, project_ball, project_l1_ball
from .optimizers import (
    AdvSpec,
    DivergenceError,
    RegSpec,
    TrainConfig,
    TrainTrace,
    adversarial_training_linear,
    dual_norm_subgradient,
    prox,
    regularization_path,
    train_conv_gd,
    train_proximal,
    train_steepest,
)
from .oracle import (
    OracleError,
    OracleSolution,
    brute_force_max_margin,
    min_norm_solve,
)
from .sweep import SweepRecord, SweepSpec, run_sweep

__all__ = [
    "AdvSpec",
    "AttackConfig",
    "ConvLinearNet",
    "Dataset",
    "DatasetFormatError",
    "DivergenceError",
    "HermitianSymmetryError",
    "LinearModel",
    "ModelFormatError",
    "NormKind",
    "OracleError",
    "OracleSolution",
    "RegSpec",
    "Spectrum",
    "SweepRecord",
    "SweepSpec",
    "TrainConfig",
    "TrainTrace",
    "UndefinedMarginError",
    "adversarial_training_linear",
    "attack_report",
    "band_mask",
    "brute_force_max_margin",
    "circular_convolve",
    "complex_linf_project",
    "complex_soft_threshold",
    "conv_gradients",
    "decision",
    "decision_layered",
    "dft",
    "dft_direct",
    "dual",
    "dual_norm_subgradient",
    "dual_witness",
    "effective_weight",
    "flip",
    "fourier_linf_attack",
    "generate_gaussian_separable",
    "hermitian_mask",
    "idft",
    "linear_worst_case",
    "load_dataset",
    "load_model",
    "log_risk",
    "loss_derivative",
    "loss_value",
    "margin",
    "max_robust_eps",
    "min_norm_solve",
    "norm",
    "pgd_attack",
    "prox",
    "project_ball",
    "project_l1_ball",
    "regularization_path",
    "robust_error",
    "run_sweep",
    "save_dataset",
    "save_model",
    "spectrum_phases",
    "train_conv_gd",
    "train_proximal",
    "train_steepest",
    "verify_separable",
    "weight_vector",
    "worst_case_drop",
    "write_attack_report",
]

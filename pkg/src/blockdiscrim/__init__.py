"""Weighted block naive Bayes discriminants and their growing-dimension risk limits."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .classifier import (
    Fixed,
    FittedClassifier,
    OptimalPlugIn,
    Unit,
    block_discriminant,
    block_power,
    classify,
    discriminant,
    resolve_weights,
)
from .errors import (
    BlockDiscrimError,
    ConvergenceError,
    DatasetFormatError,
    DegenerateError,
    DomainError,
    ModelError,
    ReplicationError,
    UsageError,
)
from .model import (
    BlockParams,
    BlockPartition,
    LabeledDataset,
    PopulationModel,
    block_divergence,
    block_noncentrality,
    canonical_model,
    fit,
    sample,
    total_divergence,
)
from .montecarlo import ExperimentConfig, ExperimentReport, ks_distance, run
from .numerics import (
    QuadratureConfig,
    integrate_halfline,
    noncentral_chi2_cdf,
    noncentral_chi2_mean,
    noncentral_chi2_pdf,
    std_normal_cdf,
)
from .risk import (
    PowerDistribution,
    Regime,
    e_of_w,
    limiting_divergence,
    optimal_risk,
    theorem1_error_limits,
    unit_risk,
    v_of_w,
    w0,
    weighted_error_limits,
)

"""map2fit: simulation, analysis and maximum-likelihood fitting of two-state
Markovian arrival processes (MAP2) in canonical form."""

__version__ = "0.1.0"

from .divergence import KlEstimate, empirical_kl
from .errors import (
    ComplexSpectrum,
    DegenerateLikelihood,
    DegenerateVariance,
    EmptySample,
    InvalidModel,
    Map2Error,
    NoFeasibleStart,
    NonErgodic,
    NonpositiveEntry,
    NonpositiveScale,
    OptimizerFailure,
    ReducibleChain,
    SingularMatrix,
)
from .estimate import (
    EstimationConfig,
    FitResult,
    delta_tau,
    fit,
    fit_both_forms,
    ml_fit_form,
    ml_fit_redundant,
    moments_match_start,
    select_form,
)
from .likelihood import (
    LogLikelihood,
    loglik,
    loglik_scaled_pipeline,
    marginal_density,
    rescale_model,
)
from .matrix2 import Matrix2, Vector2, eigenvalues, expm, invert, stationary_row
from .models import (
    CanonicalForm,
    CanonicalMap2,
    MomentSummary,
    RateMatrixPair,
    RedundantMap2,
    autocorrelation,
    canonical_to_matrices,
    classify_form,
    embedded_chain,
    empirical_moments,
    gamma,
    matrices_to_redundant,
    moment,
    redundant_to_matrices,
    stationary_phi,
    stationary_pi,
    theoretical_moments,
)
from .simulate import (
    DEFAULT_BOUNDS,
    InterarrivalSample,
    ParameterBounds,
    SimulationStart,
    STATIONARY_AT_ARRIVAL,
    random_canonical,
    random_redundant,
    simulate,
    substream,
)

__all__ = [
    "CanonicalForm",
    "CanonicalMap2",
    "ComplexSpectrum",
    "DEFAULT_BOUNDS",
    "DegenerateLikelihood",
    "DegenerateVariance",
    "EmptySample",
    "EstimationConfig",
    "FitResult",
    "InterarrivalSample",
    "InvalidModel",
    "KlEstimate",
    "LogLikelihood",
    "Map2Error",
    "Matrix2",
    "MomentSummary",
    "NoFeasibleStart",
    "NonErgodic",
    "NonpositiveEntry",
    "NonpositiveScale",
    "OptimizerFailure",
    "ParameterBounds",
    "RateMatrixPair",
    "RedundantMap2",
    "ReducibleChain",
    "STATIONARY_AT_ARRIVAL",
    "SimulationStart",
    "SingularMatrix",
    "Vector2",
    "autocorrelation",
    "canonical_to_matrices",
    "classify_form",
    "delta_tau",
    "eigenvalues",
    "embedded_chain",
    "empirical_kl",
    "empirical_moments",
    "expm",
    "fit",
    "fit_both_forms",
    "gamma",
    "invert",
    "loglik",
    "loglik_scaled_pipeline",
    "marginal_density",
    "matrices_to_redundant",
    "ml_fit_form",
    "ml_fit_redundant",
    "moment",
    "moments_match_start",
    "random_canonical",
    "random_redundant",
    "redundant_to_matrices",
    "rescale_model",
    "select_form",
    "simulate",
    "stationary_phi",
    "stationary_pi",
    "stationary_row",
    "substream",
    "theoretical_moments",
]

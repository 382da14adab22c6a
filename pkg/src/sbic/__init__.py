"""Streaming Bayesian inference for binary crowdsourced classification.

Log-odds aggregation in a fast single-pass and a sorted deferred-label
variant, the classic baselines (majority, mean-field EM/AMF, power
iteration, Gibbs, particle filter), round-robin and uncertainty-sampling
collection policies, closed-form asymptotic error bounds, and a
simulator that reproduces the empirical error and timing curves.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundSpec,
    beta_binomial_pmf,
    bound_curve,
    f_fast,
    f_sorted,
    g_fast,
    g_sorted,
)
from .model import (
    ConfigError,
    DuplicateLabelError,
    GroundTruth,
    LabelFormatError,
    LabelMatrix,
    LabelRecord,
    Prediction,
    Prior,
    error_count,
    expit,
    logit,
    matrix_ingest,
    prediction_from_log_odds,
    prior_log_odds,
)
from .baselines import (
    MeanFieldOnline,
    ParticleFilter,
    amf_run,
    gibbs_marginals,
    gibbs_run,
    kos_run,
    majority_vote,
    particle_filter_run,
)
from .online import ALGORITHMS, make_online, run_offline
from .policies import AssignmentContext, ExhaustedWorkerError, uni_next, us_next
from .simulate import (
    CurvePoint,
    RunResult,
    SyntheticConfig,
    agresti_coull,
    estimate_error_curve,
    generate_run,
    run_once,
    timing_harness,
)
from .streaming import FastSbic, SortedSbic, WorkerEstimate, fast_offline, sorted_offline

__all__ = [
    "ALGORITHMS",
    "AssignmentContext",
    "BoundSpec",
    "ConfigError",
    "CurvePoint",
    "DuplicateLabelError",
    "ExhaustedWorkerError",
    "FastSbic",
    "GroundTruth",
    "LabelFormatError",
    "LabelMatrix",
    "LabelRecord",
    "MeanFieldOnline",
    "ParticleFilter",
    "Prediction",
    "Prior",
    "RunResult",
    "SortedSbic",
    "SyntheticConfig",
    "WorkerEstimate",
    "agresti_coull",
    "amf_run",
    "beta_binomial_pmf",
    "bound_curve",
    "error_count",
    "estimate_error_curve",
    "expit",
    "f_fast",
    "f_sorted",
    "fast_offline",
    "g_fast",
    "g_sorted",
    "generate_run",
    "gibbs_marginals",
    "gibbs_run",
    "kos_run",
    "logit",
    "majority_vote",
    "make_online",
    "matrix_ingest",
    "particle_filter_run",
    "prediction_from_log_odds",
    "prior_log_odds",
    "run_offline",
    "run_once",
    "sorted_offline",
    "timing_harness",
    "uni_next",
    "us_next",
]

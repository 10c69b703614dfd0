"""Reliability toolkit for N-version API method sequence recommendation.

Profiles per-model performance on individual API methods, gates tail-case
inputs, filters unreliable candidate sequences, aggregates survivors by
majority voting with configurable fallback rules, and reports true-accept,
rejection, and false-rejection rates.
"""

from .corpus import (
    ApiMethod,
    ApiSequence,
    PredictionRecord,
    Sample,
    load_predictions,
    load_samples,
    normalize_method,
    parse_api_sequence,
    write_predictions,
    write_samples,
)
from .ensemble import (
    Candidate,
    PipelineConfig,
    PipelineOutcome,
    VoteResult,
    apply_filter,
    decide,
    majority_vote,
    reliability_score,
    run_dataset,
    run_pipeline,
)
from .errors import ConfigError, FormatError, ToolkitError
from .metrics import (
    EvaluationReport,
    compute_report,
    counterfactual_correct,
    render_table,
    score_outcome,
)
from .profile import (
    ModelProfile,
    ProfileEntry,
    MethodStats,
    accumulate_model_stats,
    assign_tail_flags,
    build_profile,
    count_frequencies,
    load_profile,
    method_accuracy,
    save_profile,
    with_tail_threshold,
)
from .synth import SynthConfig, SyntheticModelSpec, generate_corpus, simulate_model
from .tail import (
    BaselineClassifier,
    TailVerdict,
    classify,
    derive_tail_label,
    evaluate_classifier,
    load_external_verdicts,
    train_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "ApiMethod", "ApiSequence", "Sample", "PredictionRecord",
    "parse_api_sequence", "normalize_method",
    "load_samples", "write_samples", "load_predictions", "write_predictions",
    "ModelProfile", "ProfileEntry", "MethodStats",
    "count_frequencies", "assign_tail_flags", "accumulate_model_stats",
    "build_profile", "method_accuracy", "save_profile", "load_profile",
    "with_tail_threshold",
    "TailVerdict", "BaselineClassifier", "derive_tail_label", "train_baseline",
    "classify", "evaluate_classifier", "load_external_verdicts",
    "PipelineConfig", "Candidate", "PipelineOutcome", "VoteResult",
    "apply_filter", "majority_vote", "reliability_score", "decide",
    "run_pipeline", "run_dataset",
    "EvaluationReport", "score_outcome", "counterfactual_correct",
    "compute_report", "render_table",
    "SynthConfig", "SyntheticModelSpec", "generate_corpus", "simulate_model",
    "ToolkitError", "FormatError", "ConfigError",
    "__version__",
]

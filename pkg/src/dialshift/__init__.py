"""Gradual distribution shifts for dialogue response ranking.

Builds unknown-word, known-word, and context-deletion variants of a
dialogue corpus, scores candidate responses with pluggable scorers, and
evaluates accuracy and calibration (Brier, ECE) with optional temperature
scaling, multi-pass aggregation, and ensembles.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    CandidateSet,
    Dialogue,
    Instance,
    Provenance,
    Utterance,
    build_candidate_sets,
    expand_instances,
    filter_by_context_length,
    load_dialogues,
    tokenize,
)
from .jsonl import derive_seed  # noqa: F401
from .errors import ConfigError, DialshiftError, SchemaError  # noqa: F401
from .lexicon import (  # noqa: F401
    ReplacementMode,
    SynonymLexicon,
    VocabStats,
    build_vocab_stats,
    classify_word,
    levenshtein,
    select_replacement,
)
from .importance import ImportanceMap, bucketize, fallback_importance  # noqa: F401
from .shift_uw import ShiftStats, UwConfig, apply_uw, required_targets, shift_dataset_uw  # noqa: F401
from .shift_ic import apply_ic, build_sr_sets, parse_ic_ratio, shift_dataset_ic  # noqa: F401
from .harness import (  # noqa: F401
    AggregatedPrediction,
    NoisyOverlapScorer,
    OverlapScorer,
    PerturbedOverlapScorer,
    ScoreVector,
    aggregate_probability_vectors,
    ensemble_aggregate,
    mc_aggregate,
    predict_probs,
    softmax,
)
from .calibration import Temperature, apply_temperature, fit_temperature, mean_nll  # noqa: F401
from .metrics import EceBinning, MetricsRow, brier, ece, evaluate, recall_at_1  # noqa: F401

"""Science MCQ synthesis toolkit: reward kernel, answer extraction, voting
classification and dataset utilities, backed by the C++ core."""

from ._core import (
    AgreementClass,
    ItemStage,
    McqItem,
    UNANSWERABLE_OPTION_TEXT,
    __version__,
    augment_permutations,
    classify_agreement,
    dedup_against,
    extract_answer,
    heuristic_filter,
    ngram_set,
    reward_episode,
    reward_syn,
    run_stats,
    score_records,
    shuffle_options,
    validate_item,
)

__all__ = [
    "AgreementClass",
    "ItemStage",
    "McqItem",
    "UNANSWERABLE_OPTION_TEXT",
    "__version__",
    "augment_permutations",
    "classify_agreement",
    "dedup_against",
    "extract_answer",
    "heuristic_filter",
    "ngram_set",
    "reward_episode",
    "reward_syn",
    "run_stats",
    "score_records",
    "shuffle_options",
    "validate_item",
]

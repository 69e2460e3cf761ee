"""Synthetic benchmark for probing how GEC models generalize to unseen errors.

A paired context-free grammar renders minimal error/correction sentence pairs
for five error types; deterministic splitters carve them into settings where
test patterns were either seen during training ("known") or deliberately held
out ("unknown"); a small numpy encoder-decoder trains on the result and an
edit-level F0.5 scorer measures the generalization gap.
"""

from .data import (
    ERROR_TYPES,
    DatasetBundle,
    Edit,
    Pattern,
    SentencePair,
    apply_edits,
    edit_pattern,
    read_jsonl,
    write_jsonl,
)
from .decoding import DecodeConfig, beam_decode, beam_decode_scored
from .edits import align, alignment_cost, explode_per_pattern
from .errors import (
    CapacityExceeded,
    DivergenceDetected,
    GecProbeError,
    GradientMismatch,
    GrammarFormatError,
    InfeasibleSplit,
    InsufficientDonors,
    LengthMismatch,
    MalformedM2,
    ValidationError,
)
from .grammar import (
    Grammar,
    capacity,
    default_grammar_path,
    derive_pair,
    enumerate_all,
    generate_corpus,
    load_grammar,
    parse_grammar,
    recognize,
)
from .m2 import parse_m2, read_m2, save_m2, write_m2
from .scoring import (
    MatchCounts,
    ScoreReport,
    f_beta,
    gap_report,
    match_edits,
    score,
    stratified_score,
)
from .splits import (
    SplitSpec,
    build_frequency_split,
    build_known_split,
    build_unknown_split,
    inject_patterns,
    load_bundle,
    save_bundle,
    validate_bundle,
)
from .training import (
    Adam,
    Checkpoint,
    TrainConfig,
    TrainResult,
    learning_rate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .transformer import (
    ModelConfig,
    Transformer,
    grad_check,
    make_batch,
    smoothed_loss_and_grad,
)
from .vocab import Vocabulary, build_vocab

__version__ = "0.1.0"

__all__ = [
    "ERROR_TYPES",
    "Adam",
    "CapacityExceeded",
    "Checkpoint",
    "DatasetBundle",
    "DecodeConfig",
    "DivergenceDetected",
    "Edit",
    "GecProbeError",
    "GradientMismatch",
    "Grammar",
    "GrammarFormatError",
    "InfeasibleSplit",
    "InsufficientDonors",
    "LengthMismatch",
    "MalformedM2",
    "MatchCounts",
    "ModelConfig",
    "Pattern",
    "ScoreReport",
    "SentencePair",
    "SplitSpec",
    "TrainConfig",
    "TrainResult",
    "Transformer",
    "ValidationError",
    "Vocabulary",
    "align",
    "alignment_cost",
    "apply_edits",
    "beam_decode",
    "beam_decode_scored",
    "build_frequency_split",
    "build_known_split",
    "build_unknown_split",
    "build_vocab",
    "capacity",
    "default_grammar_path",
    "derive_pair",
    "edit_pattern",
    "enumerate_all",
    "explode_per_pattern",
    "f_beta",
    "gap_report",
    "generate_corpus",
    "grad_check",
    "inject_patterns",
    "learning_rate",
    "load_bundle",
    "load_checkpoint",
    "load_grammar",
    "make_batch",
    "match_edits",
    "parse_grammar",
    "parse_m2",
    "read_jsonl",
    "read_m2",
    "recognize",
    "save_bundle",
    "save_checkpoint",
    "save_m2",
    "score",
    "smoothed_loss_and_grad",
    "stratified_score",
    "train",
    "validate_bundle",
    "write_jsonl",
    "write_m2",
]

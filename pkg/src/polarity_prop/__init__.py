"""Affective-event polarity via seed-lexicon propagation over discourse pairs."""

from .dataset import (
    BalanceConfig,
    DatasetBundle,
    LabeledEvent,
    PairClass,
    PairTag,
    build_bundle,
    classify_pair,
    load_bundle,
    load_labeled_events,
    save_bundle,
)
from .errors import PolarityPropError
from .events import (
    ClauseOrder,
    ConnectiveRule,
    Event,
    EventPair,
    Relation,
    extract_pairs,
    load_connective_table,
    read_pairs,
    stream_corpus,
    write_pairs,
)
from .evaluate import (
    EvalResult,
    baseline_random,
    baseline_random_seed,
    classify,
    evaluate,
)
from .lexicon import SeedLexicon, load_lexicon, load_negation_markers, match_seed
from .model import (
    MEAN,
    RECURRENT,
    PolarityModel,
    Vocabulary,
    build_vocabulary,
    encode,
    init_model,
    load_checkpoint,
    polarity,
    save_checkpoint,
)
from .training import (
    BatchSet,
    LossReport,
    Objective,
    TrainConfig,
    compute_gradients,
    loss_acp,
    loss_al,
    loss_ca,
    loss_co,
    momentum_step,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceConfig", "BatchSet", "ClauseOrder", "ConnectiveRule", "DatasetBundle",
    "EvalResult", "Event", "EventPair", "LabeledEvent", "LossReport", "MEAN",
    "Objective", "PairClass", "PairTag", "PolarityModel", "PolarityPropError",
    "RECURRENT", "Relation", "SeedLexicon", "TrainConfig", "Vocabulary",
    "baseline_random", "baseline_random_seed", "build_bundle", "build_vocabulary",
    "classify", "classify_pair", "compute_gradients", "encode", "evaluate",
    "extract_pairs", "init_model", "load_bundle", "load_checkpoint",
    "load_connective_table", "load_labeled_events", "load_lexicon",
    "load_negation_markers", "loss_acp", "loss_al", "loss_ca", "loss_co",
    "match_seed", "momentum_step", "polarity", "read_pairs", "save_bundle",
    "save_checkpoint", "stream_corpus", "train", "write_pairs",
]

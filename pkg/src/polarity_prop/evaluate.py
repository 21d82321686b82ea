"""Sign-threshold classification, accuracy, and the two random baselines."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import LabeledEvent
from .errors import PolarityPropError
from .lexicon import SeedLexicon
from .model import PolarityModel
from .training import forward_events

POSITIVE = 1
NEGATIVE = -1


class NonFiniteScoreError(PolarityPropError):
    """A score to classify was NaN or infinite."""


class EmptyTestSetError(PolarityPropError):
    """Evaluation needs at least one labeled event."""


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    n_total: int
    n_correct: int
    # confusion[predicted][reference], signs ordered (positive, negative)
    confusion: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n_correct > self.n_total:
            raise ValueError("n_correct exceeds n_total")
        if sum(sum(row) for row in self.confusion) != self.n_total:
            raise ValueError("confusion counts do not sum to n_total")
        if not math.isclose(self.accuracy, self.n_correct / self.n_total):
            raise ValueError("accuracy does not equal n_correct / n_total")

    def format(self) -> str:
        (pp, pn), (np_, nn) = self.confusion
        return (
            f"accuracy {self.accuracy:.4f} ({self.n_correct}/{self.n_total})\n"
            f"confusion (predicted x reference):\n"
            f"  pred+  ref+ {pp:6d}  ref- {pn:6d}\n"
            f"  pred-  ref+ {np_:6d}  ref- {nn:6d}"
        )


def classify(score: float) -> int:
    """Positive iff the score is strictly greater than zero."""
    if not math.isfinite(score):
        raise NonFiniteScoreError(f"cannot classify score {score!r}")
    return POSITIVE if score > 0.0 else NEGATIVE


def _result_from_predictions(predicted: Sequence[int], refs: Sequence[int]) -> EvalResult:
    counts = {(p, r): 0 for p in (POSITIVE, NEGATIVE) for r in (POSITIVE, NEGATIVE)}
    correct = 0
    for p, r in zip(predicted, refs):
        counts[(p, r)] += 1
        correct += p == r
    n = len(refs)
    return EvalResult(
        accuracy=correct / n,
        n_total=n,
        n_correct=correct,
        confusion=(
            (counts[(POSITIVE, POSITIVE)], counts[(POSITIVE, NEGATIVE)]),
            (counts[(NEGATIVE, POSITIVE)], counts[(NEGATIVE, NEGATIVE)]),
        ),
    )


def _require_test(test: Sequence[LabeledEvent]) -> None:
    if not test:
        raise EmptyTestSetError("test set is empty")


def evaluate(model: PolarityModel, test: Sequence[LabeledEvent]) -> EvalResult:
    """Accuracy of sign-threshold classification against reference signs."""
    _require_test(test)
    scores = forward_events(model, [ev.event for ev in test]).p
    if not np.isfinite(scores).all():
        raise NonFiniteScoreError("model produced non-finite scores")
    predicted = [classify(float(s)) for s in scores]
    return _result_from_predictions(predicted, [ev.score for ev in test])


def baseline_random(test: Sequence[LabeledEvent], rng_seed: int = 0) -> EvalResult:
    """Uniform coin flip per event, seeded."""
    _require_test(test)
    rng = np.random.default_rng(rng_seed)
    predicted = [POSITIVE if rng.random() < 0.5 else NEGATIVE for _ in test]
    return _result_from_predictions(predicted, [ev.score for ev in test])


def baseline_random_seed(
    test: Sequence[LabeledEvent],
    lexicon: SeedLexicon,
    rng_seed: int = 0,
) -> EvalResult:
    """Seed-lexicon lookup (sign flipped under negation), coin flip otherwise.

    Unlike seed matching during dataset construction, which excludes negated
    events, this baseline follows the lexicon entry and reverses it when a
    negation marker is present.
    """
    _require_test(test)
    rng = np.random.default_rng(rng_seed)
    predicted = []
    for ev in test:
        entry = lexicon.entries.get(ev.event.predicate)
        if entry is not None:
            negated = any(t in lexicon.negation_markers for t in ev.event.tokens)
            predicted.append(-entry if negated else entry)
        else:
            predicted.append(POSITIVE if rng.random() < 0.5 else NEGATIVE)
    return _result_from_predictions(predicted, [ev.score for ev in test])


def dump_scores(
    model: PolarityModel,
    test: Sequence[LabeledEvent],
    path: str | Path,
) -> None:
    """Per-event JSON Lines: tokens, reference, score, predicted sign."""
    _require_test(test)
    scores = forward_events(model, [ev.event for ev in test]).p
    with open(path, "w", encoding="utf-8") as fh:
        for ev, score in zip(test, scores):
            fh.write(json.dumps({
                "tokens": list(ev.event.tokens),
                "reference": ev.score,
                "score": float(score),
                "predicted": "positive" if classify(float(score)) == POSITIVE else "negative",
            }, ensure_ascii=False) + "\n")

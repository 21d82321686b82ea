"""Pair classification (AL / CA / CO), dataset balancing, and bundle IO.

A pair whose latter event matches the seed lexicon while its former event
does not becomes an automatically labeled (AL) pair: the latter keeps its
seed score and the former inherits the same score under a cause relation or
the opposite score under concession.  Pairs with no match on either side
become CA (cause) or CO (concession) consistency pairs.  Any pair whose
former event matches is discarded; propagation only flows latter to former.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import PolarityPropError
from .events import Event, EventPair, Relation, pair_from_record, pair_to_record
from .lexicon import SeedLexicon, match_seed

log = logging.getLogger(__name__)


class MalformedRecordError(PolarityPropError):
    """A JSON Lines record is missing fields or has the wrong shape."""


class InvalidScoreError(PolarityPropError):
    """A reference score is not +1 or -1."""


class EmptyALError(PolarityPropError):
    """No usable AL pairs; the propagation objectives cannot be trained."""


class PairTag(Enum):
    AL = "al"
    CA = "ca"
    CO = "co"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class PairClass:
    tag: PairTag
    r_former: int | None = None
    r_latter: int | None = None

    def __post_init__(self) -> None:
        if self.tag is PairTag.AL:
            if self.r_former not in (1, -1) or self.r_latter not in (1, -1):
                raise ValueError("AL carries reference scores in {+1, -1}")
        elif self.r_former is not None or self.r_latter is not None:
            raise ValueError(f"{self.tag.value} pairs carry no reference scores")


@dataclass(frozen=True)
class LabeledEvent:
    event: Event
    score: int

    def __post_init__(self) -> None:
        if self.score not in (1, -1):
            raise InvalidScoreError(f"score must be +1 or -1, got {self.score!r}")


@dataclass
class DatasetBundle:
    al: list[tuple[EventPair, int, int]] = field(default_factory=list)
    ca: list[EventPair] = field(default_factory=list)
    co: list[EventPair] = field(default_factory=list)
    supervised: list[LabeledEvent] = field(default_factory=list)

    def with_supervised(self, events: list[LabeledEvent]) -> "DatasetBundle":
        return replace(self, supervised=list(events))

    def al_sign_counts(self) -> tuple[int, int]:
        """(positive-latter, negative-latter) counts."""
        pos = sum(1 for _, _, r_latter in self.al if r_latter == 1)
        return pos, len(self.al) - pos


def classify_pair(pair: EventPair, lexicon: SeedLexicon) -> PairClass:
    """Assign a pair to AL, CA, CO, or Discarded.

    AL requires a latter match and no former match; the former's reference
    score equals the latter's under cause and its opposite under concession.
    """
    former_score = match_seed(pair.former, lexicon)
    latter_score = match_seed(pair.latter, lexicon)
    if former_score is not None:
        return PairClass(PairTag.DISCARDED)
    if latter_score is not None:
        r_former = latter_score if pair.relation is Relation.CAUSE else -latter_score
        return PairClass(PairTag.AL, r_former=r_former, r_latter=latter_score)
    if pair.relation is Relation.CAUSE:
        return PairClass(PairTag.CA)
    return PairClass(PairTag.CO)


@dataclass(frozen=True)
class BalanceConfig:
    max_al: int | None = None
    multiplier: int = 5

    def __post_init__(self) -> None:
        if self.max_al is not None and self.max_al < 0:
            raise ValueError("max_al must be non-negative")
        if self.multiplier < 0:
            raise ValueError("multiplier must be non-negative")


def _subsample(items: list, k: int, rng: np.random.Generator) -> list:
    """Uniform sample without replacement, preserving input order."""
    if k >= len(items):
        return list(items)
    keep = np.sort(rng.choice(len(items), size=k, replace=False))
    return [items[i] for i in keep]


def build_bundle(
    pairs: Iterable[EventPair],
    lexicon: SeedLexicon,
    balance: BalanceConfig = BalanceConfig(),
    rng_seed: int = 0,
) -> DatasetBundle:
    """Classify pairs and balance the result into a training bundle.

    AL is downsampled so positive-latter and negative-latter counts are equal
    (optionally capped at ``balance.max_al`` total); CA and CO are each
    downsampled to ``multiplier * |AL|`` where available, otherwise kept whole
    with the shortfall logged.  Deterministic given ``rng_seed``.
    """
    al_pos: list[tuple[EventPair, int, int]] = []
    al_neg: list[tuple[EventPair, int, int]] = []
    ca: list[EventPair] = []
    co: list[EventPair] = []
    n_discarded = 0
    for pair in pairs:
        cls = classify_pair(pair, lexicon)
        if cls.tag is PairTag.AL:
            entry = (pair, cls.r_former, cls.r_latter)
            (al_pos if cls.r_latter == 1 else al_neg).append(entry)
        elif cls.tag is PairTag.CA:
            ca.append(pair)
        elif cls.tag is PairTag.CO:
            co.append(pair)
        else:
            n_discarded += 1

    per_side = min(len(al_pos), len(al_neg))
    if balance.max_al is not None:
        per_side = min(per_side, balance.max_al // 2)
    if per_side == 0:
        raise EmptyALError(
            f"no balanced AL pairs (positive latter: {len(al_pos)}, "
            f"negative latter: {len(al_neg)})"
        )

    rng = np.random.default_rng(rng_seed)
    al = _subsample(al_pos, per_side, rng) + _subsample(al_neg, per_side, rng)
    target = balance.multiplier * len(al)
    for name, found in (("CA", ca), ("CO", co)):
        if len(found) < target:
            log.warning(
                "%s has %d pairs, %d short of the %dx target %d; keeping all",
                name, len(found), target - len(found), balance.multiplier, target,
            )
    ca = _subsample(ca, target, rng)
    co = _subsample(co, target, rng)
    log.info(
        "bundle: AL=%d (pos %d / neg %d), CA=%d, CO=%d, discarded=%d",
        len(al), per_side, per_side, len(ca), len(co), n_discarded,
    )
    return DatasetBundle(al=al, ca=ca, co=co)


def labeled_event_to_record(ev: LabeledEvent) -> dict:
    return {
        "tokens": list(ev.event.tokens),
        "predicate_index": ev.event.predicate_index,
        "score": ev.score,
    }


def labeled_event_from_record(record: dict) -> LabeledEvent:
    try:
        tokens = record["tokens"]
        predicate_index = record["predicate_index"]
        score = record["score"]
    except (KeyError, TypeError) as exc:
        raise MalformedRecordError(f"bad labeled-event record: {record!r}") from exc
    if not isinstance(score, int) or isinstance(score, bool) or score not in (1, -1):
        raise InvalidScoreError(f"score must be +1 or -1, got {score!r}")
    try:
        return LabeledEvent(Event(tuple(tokens), predicate_index), score)
    except (ValueError, TypeError) as exc:
        raise MalformedRecordError(f"bad labeled-event record: {record!r}") from exc


def load_labeled_events(path: str | Path) -> list[LabeledEvent]:
    """Load JSON Lines records of ``{tokens, predicate_index, score}``."""
    events: list[LabeledEvent] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(f"{path}:{lineno}: invalid JSON") from exc
            try:
                events.append(labeled_event_from_record(record))
            except (MalformedRecordError, InvalidScoreError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from None
    return events


def save_labeled_events(events: Iterable[LabeledEvent], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(labeled_event_to_record(ev), ensure_ascii=False) + "\n")
            n += 1
    return n


def save_bundle(bundle: DatasetBundle, path: str | Path) -> None:
    """Bundle on disk: JSON Lines with a ``type`` field in {al, ca, co, sup}."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair, r_former, r_latter in bundle.al:
            record = {"type": "al", **pair_to_record(pair),
                      "r_former": r_former, "r_latter": r_latter}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        for tag, pairs in (("ca", bundle.ca), ("co", bundle.co)):
            for pair in pairs:
                fh.write(json.dumps({"type": tag, **pair_to_record(pair)},
                                    ensure_ascii=False) + "\n")
        for ev in bundle.supervised:
            fh.write(json.dumps({"type": "sup", **labeled_event_to_record(ev)},
                                ensure_ascii=False) + "\n")


def load_bundle(path: str | Path) -> DatasetBundle:
    bundle = DatasetBundle()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                kind = record["type"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise MalformedRecordError(f"{path}:{lineno}: bad bundle record") from exc
            if kind == "al":
                pair = pair_from_record(record)
                r_former, r_latter = record["r_former"], record["r_latter"]
                if r_former not in (1, -1) or r_latter not in (1, -1):
                    raise InvalidScoreError(f"{path}:{lineno}: AL scores must be +1/-1")
                bundle.al.append((pair, r_former, r_latter))
            elif kind == "ca":
                bundle.ca.append(pair_from_record(record))
            elif kind == "co":
                bundle.co.append(pair_from_record(record))
            elif kind == "sup":
                bundle.supervised.append(labeled_event_from_record(record))
            else:
                raise MalformedRecordError(f"{path}:{lineno}: unknown type {kind!r}")
    return bundle

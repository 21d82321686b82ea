"""Clause-pair extraction driven by an explicit connective table.

A sentence is split at each occurrence of a connective pattern; the two
maximal spans around the occurrence become the former/latter events of a
discourse-tagged pair.  The connective table decides both the relation
(cause vs concession) and which side of the connective plays the "former"
role, so language-specific clause order lives entirely in data.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import PolarityPropError

log = logging.getLogger(__name__)

# Tokens stripped from clause boundaries so the predicate heuristic never
# lands on punctuation.
BOUNDARY_PUNCT = frozenset({",", ".", "!", "?", ";", ":", "、", "。", "！", "？"})

# Tokens acting as a secondary split point when a connective opens the
# sentence ("Because A , B").
CLAUSE_DELIMITERS = frozenset({",", "、"})


class MalformedRuleError(PolarityPropError):
    """A connective-table line does not parse."""


class DuplicatePatternError(PolarityPropError):
    """The same connective pattern appears twice in one table."""


class Relation(Enum):
    CAUSE = "cause"
    CONCESSION = "concession"


class ClauseOrder(Enum):
    """Which side of the connective is the former event."""

    FORMER_FIRST = "former_first"
    LATTER_FIRST = "latter_first"


@dataclass(frozen=True)
class Event:
    """A token span with a designated main predicate."""

    tokens: tuple[str, ...]
    predicate_index: int

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("event needs at least one token")
        if not 0 <= self.predicate_index < len(self.tokens):
            raise ValueError(
                f"predicate_index {self.predicate_index} out of range for "
                f"{len(self.tokens)} tokens"
            )

    @property
    def predicate(self) -> str:
        return self.tokens[self.predicate_index]

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class EventPair:
    former: Event
    latter: Event
    relation: Relation


@dataclass(frozen=True)
class ConnectiveRule:
    pattern: str
    relation: Relation
    order: ClauseOrder

    def __post_init__(self) -> None:
        if not self.pattern.strip():
            raise ValueError("connective pattern must be non-empty")

    @property
    def pattern_tokens(self) -> tuple[str, ...]:
        return tuple(self.pattern.split())


def load_connective_table(path: str | Path) -> list[ConnectiveRule]:
    """Parse a tab-separated connective table.

    Format: ``pattern<TAB>relation(cause|concession)<TAB>order(former_first|latter_first)``,
    one rule per line, ``#`` comments and blank lines ignored.
    """
    rules: list[ConnectiveRule] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedRuleError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            pattern, relation_name, order_name = (p.strip() for p in parts)
            if not pattern:
                raise MalformedRuleError(f"{path}:{lineno}: empty pattern")
            try:
                relation = Relation(relation_name.lower())
            except ValueError:
                raise MalformedRuleError(
                    f"{path}:{lineno}: unknown relation {relation_name!r}"
                ) from None
            try:
                order = ClauseOrder(order_name.lower())
            except ValueError:
                raise MalformedRuleError(
                    f"{path}:{lineno}: unknown order {order_name!r}"
                ) from None
            if pattern.casefold() in seen:
                raise DuplicatePatternError(f"{path}:{lineno}: duplicate pattern {pattern!r}")
            seen.add(pattern.casefold())
            rules.append(ConnectiveRule(pattern, relation, order))
    return rules


def whitespace_tokenize(sentence: str) -> list[str]:
    return sentence.split()


def _trim(tokens: list[str]) -> list[str]:
    start, end = 0, len(tokens)
    while start < end and tokens[start] in BOUNDARY_PUNCT:
        start += 1
    while end > start and tokens[end - 1] in BOUNDARY_PUNCT:
        end -= 1
    return tokens[start:end]


def _make_event(tokens: list[str], predicate_position: str) -> Event | None:
    if not tokens:
        return None
    idx = len(tokens) - 1 if predicate_position == "last" else 0
    return Event(tuple(tokens), idx)


def _match_at(tokens_cf: list[str], pattern_cf: tuple[str, ...], pos: int) -> bool:
    end = pos + len(pattern_cf)
    if end > len(tokens_cf):
        return False
    return tuple(tokens_cf[pos:end]) == pattern_cf


def extract_pairs(
    sentence: list[str],
    table: list[ConnectiveRule],
    predicate_position: str = "last",
) -> list[EventPair]:
    """Extract discourse-tagged event pairs from one tokenized sentence.

    Every occurrence of a rule's pattern that leaves a non-empty clause on
    each side yields one pair, in left-to-right occurrence order.  Pattern
    matching is case-insensitive so sentence-initial capitalized connectives
    still match.  A sentence-initial connective has no left clause; in that
    case the remainder is split at its first clause delimiter (comma), and
    the clause adjacent to the connective takes the role the right-hand side
    would have taken in mid-sentence position.
    """
    if predicate_position not in ("last", "first"):
        raise ValueError(f"unknown predicate_position {predicate_position!r}")
    tokens_cf = [t.casefold() for t in sentence]
    pairs: list[EventPair] = []
    for pos in range(len(sentence)):
        for rule in table:
            pattern_cf = tuple(t.casefold() for t in rule.pattern_tokens)
            if not _match_at(tokens_cf, pattern_cf, pos):
                continue
            left = _trim(sentence[:pos])
            right = _trim(sentence[pos + len(pattern_cf):])
            if left and right:
                left_clause, right_clause = left, right
            elif not left and right:
                # Sentence-initial connective: split the remainder at the
                # first delimiter; the adjacent clause plays the right-side
                # role ("Because A , B" pairs like "B because A").
                cut = next((i for i, t in enumerate(right) if t in CLAUSE_DELIMITERS), None)
                if cut is None:
                    continue
                adjacent = _trim(right[:cut])
                distal = _trim(right[cut + 1:])
                if not adjacent or not distal:
                    continue
                left_clause, right_clause = distal, adjacent
            else:
                continue
            former_tokens, latter_tokens = (
                (left_clause, right_clause)
                if rule.order is ClauseOrder.FORMER_FIRST
                else (right_clause, left_clause)
            )
            former = _make_event(former_tokens, predicate_position)
            latter = _make_event(latter_tokens, predicate_position)
            if former is None or latter is None:
                continue
            pairs.append(EventPair(former, latter, rule.relation))
    return pairs


def last_clause(sentence: list[str], predicate_position: str = "last") -> Event | None:
    """The final clause of a sentence (after the last delimiter), as an event."""
    cut = max(
        (i for i, t in enumerate(sentence) if t in CLAUSE_DELIMITERS),
        default=-1,
    )
    return _make_event(_trim(sentence[cut + 1:]), predicate_position)


class CorpusStream:
    """Stream event pairs from a one-sentence-per-line UTF-8 corpus file.

    Iterating decodes lazily, so memory stays constant in corpus size.
    Lines that fail UTF-8 decoding are skipped; ``skipped_lines`` holds the
    tally once iteration has passed them.
    """

    def __init__(
        self,
        path: str | Path,
        table: list[ConnectiveRule],
        predicate_position: str = "last",
        tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
    ) -> None:
        self.path = Path(path)
        self.table = table
        self.predicate_position = predicate_position
        self.tokenizer = tokenizer
        self.skipped_lines = 0
        self.total_lines = 0

    def __iter__(self) -> Iterator[EventPair]:
        self.skipped_lines = 0
        self.total_lines = 0
        with open(self.path, "rb") as fh:
            for raw in fh:
                self.total_lines += 1
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError:
                    self.skipped_lines += 1
                    continue
                yield from extract_pairs(
                    self.tokenizer(line), self.table, self.predicate_position
                )
        if self.skipped_lines:
            log.warning("skipped %d undecodable lines in %s", self.skipped_lines, self.path)


def stream_corpus(
    path: str | Path,
    table: list[ConnectiveRule],
    predicate_position: str = "last",
    tokenizer: Callable[[str], list[str]] = whitespace_tokenize,
) -> CorpusStream:
    return CorpusStream(path, table, predicate_position, tokenizer)


def pair_to_record(pair: EventPair) -> dict:
    return {
        "former_tokens": list(pair.former.tokens),
        "former_predicate_index": pair.former.predicate_index,
        "latter_tokens": list(pair.latter.tokens),
        "latter_predicate_index": pair.latter.predicate_index,
        "relation": pair.relation.value,
    }


def pair_from_record(record: dict) -> EventPair:
    return EventPair(
        former=Event(tuple(record["former_tokens"]), record["former_predicate_index"]),
        latter=Event(tuple(record["latter_tokens"]), record["latter_predicate_index"]),
        relation=Relation(record["relation"]),
    )


def write_pairs(pairs: Iterable[EventPair], path: str | Path) -> int:
    """Write pairs as JSON Lines; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_record(pair), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_pairs(path: str | Path) -> Iterator[EventPair]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield pair_from_record(json.loads(line))

"""Seed lexicon loading and the predicate-matching rule.

An event carries a seed polarity only when its predicate token is a lexicon
entry and no negation marker appears anywhere in the event.  Negated events
are excluded rather than flipped: the model is expected to pick up negation
on its own from the pair structure, so we keep the automatic labels clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import PolarityPropError
from .events import Event


class MalformedLineError(PolarityPropError):
    """A lexicon or marker line does not parse."""


class ConflictingEntryError(PolarityPropError):
    """A predicate is listed with both polarities."""


@dataclass(frozen=True)
class SeedLexicon:
    entries: dict[str, int]
    negation_markers: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        bad = {k: v for k, v in self.entries.items() if v not in (1, -1)}
        if bad:
            raise ValueError(f"seed polarities must be +1 or -1, got {bad}")

    def __len__(self) -> int:
        return len(self.entries)


def load_negation_markers(path: str | Path) -> frozenset[str]:
    """One marker token per line; '#' comments and blank lines ignored."""
    markers: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if len(line.split()) != 1:
                raise MalformedLineError(f"{path}:{lineno}: expected one token per line")
            markers.add(line)
    return frozenset(markers)


def load_lexicon(path: str | Path, negation_path: str | Path | None = None) -> SeedLexicon:
    """Parse ``predicate<TAB>(+1|-1)`` lines into a lexicon.

    Re-listing an entry with the same polarity is idempotent; listing it
    with both polarities is an error.
    """
    entries: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedLineError(
                    f"{path}:{lineno}: expected predicate<TAB>polarity, got {line!r}"
                )
            predicate, polarity_str = parts[0].strip(), parts[1].strip()
            if not predicate:
                raise MalformedLineError(f"{path}:{lineno}: empty predicate")
            if polarity_str == "+1":
                polarity = 1
            elif polarity_str == "-1":
                polarity = -1
            else:
                raise MalformedLineError(
                    f"{path}:{lineno}: polarity must be +1 or -1, got {polarity_str!r}"
                )
            if predicate in entries and entries[predicate] != polarity:
                raise ConflictingEntryError(
                    f"{path}:{lineno}: {predicate!r} listed with both polarities"
                )
            entries[predicate] = polarity
    markers = load_negation_markers(negation_path) if negation_path else frozenset()
    return SeedLexicon(entries, markers)


def match_seed(event: Event, lexicon: SeedLexicon) -> int | None:
    """Seed polarity of the event's predicate, or None.

    No match when the predicate is absent from the lexicon or when any
    negation marker occurs anywhere in the event.
    """
    if any(tok in lexicon.negation_markers for tok in event.tokens):
        return None
    return lexicon.entries.get(event.predicate)

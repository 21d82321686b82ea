"""Synthetic propagation corpus with known latent polarities.

Builds a vocabulary of event words carrying hidden +1/-1 signs, then emits
cause pairs (same effective sign) and concession pairs (opposite signs) with
a configurable rate of sign-rule violations ("noise") and optional negation:
a marker token that flips an event's effective sign.  A small subset of the
words doubles as the seed lexicon; a disjoint held-out pool never occurs in
any pair that contains a seed word, so a model can only score held-out words
correctly if polarity propagated through the unlabeled pair structure.

Everything is deterministic given the config seed.  ``write_fixtures``
realizes the same data as text files so the CLI pipeline can run on it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import LabeledEvent, save_labeled_events
from .events import Event, EventPair, Relation
from .lexicon import SeedLexicon

NEGATION_MARKER = "not"

CONNECTIVES_TSV = (
    "# pattern\trelation\torder\n"
    "because\tcause\tlatter_first\n"
    "although\tconcession\tformer_first\n"
)


@dataclass(frozen=True)
class SyntheticConfig:
    n_words: int = 200
    n_seed_per_sign: int = 3
    n_cause: int = 5000
    n_concession: int = 5000
    noise: float = 0.05
    seed_latter_rate: float = 0.06
    fronted_rate: float = 0.2
    negation_rate: float = 0.0
    max_event_len: int = 3
    n_dev: int = 200
    n_test: int = 500
    rng_seed: int = 0


@dataclass
class SyntheticData:
    config: SyntheticConfig
    sign_of: dict[str, int]
    seed_words: dict[str, int]
    train_words: list[str]          # non-seed words that may co-occur with seeds
    heldout_words: list[str]        # never co-occur with seed words in any pair
    pairs: list[EventPair]
    sentences: list[str]            # one per pair, extractable via the table
    dev: list[LabeledEvent]
    test: list[LabeledEvent]
    lexicon: SeedLexicon = field(init=False)

    def __post_init__(self) -> None:
        self.lexicon = SeedLexicon(dict(self.seed_words),
                                   frozenset({NEGATION_MARKER}))

    def effective_sign(self, event: Event) -> int:
        """Hidden sign of an event: its predicate's sign, flipped if negated."""
        sign = self.sign_of[event.predicate]
        if NEGATION_MARKER in event.tokens:
            sign = -sign
        return sign


class _Generator:
    def __init__(self, config: SyntheticConfig) -> None:
        self.config = config
        self.rng = np.random.default_rng(config.rng_seed)
        n_half = config.n_words // 2
        words = [f"w{i:03d}" for i in range(config.n_words)]
        order = self.rng.permutation(config.n_words)
        pos_words = [words[i] for i in order[:n_half]]
        neg_words = [words[i] for i in order[n_half:]]
        self.sign_of = {w: 1 for w in pos_words}
        self.sign_of.update({w: -1 for w in neg_words})
        k = config.n_seed_per_sign
        self.seeds = {1: pos_words[:k], -1: neg_words[:k]}
        pos_rest, neg_rest = pos_words[k:], neg_words[k:]
        self.train = {1: pos_rest[: len(pos_rest) // 2], -1: neg_rest[: len(neg_rest) // 2]}
        self.held = {1: pos_rest[len(pos_rest) // 2:], -1: neg_rest[len(neg_rest) // 2:]}
        self.mixed = {s: self.train[s] + self.held[s] for s in (1, -1)}

    def _flip(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def _event(self, sign: int, pool: dict[int, list[str]],
               negated: bool = False, predicate: str | None = None) -> Event:
        """Event whose effective sign is ``sign``; tokens share one base sign."""
        base_sign = -sign if negated else sign
        n_extra = int(self.rng.integers(0, self.config.max_event_len))
        if predicate is None:
            words = list(self.rng.choice(pool[base_sign], size=n_extra + 1, replace=False))
        else:
            words = list(self.rng.choice(pool[base_sign], size=n_extra, replace=False))
            words.append(predicate)
        tokens = ([NEGATION_MARKER] if negated else []) + words
        return Event(tuple(tokens), len(tokens) - 1)

    def _pair(self, relation: Relation) -> tuple[EventPair, str]:
        cfg = self.config
        seeded = self._flip(cfg.seed_latter_rate)
        latter_sign = int(self.rng.choice((1, -1)))
        if seeded:
            predicate = str(self.rng.choice(self.seeds[latter_sign]))
            latter = self._event(latter_sign, self.train, predicate=predicate)
            former_pool = self.train
        else:
            latter = self._event(latter_sign, self.mixed,
                                 negated=self._flip(cfg.negation_rate))
            former_pool = self.mixed
        former_sign = latter_sign if relation is Relation.CAUSE else -latter_sign
        if self._flip(cfg.noise):
            former_sign = -former_sign
        former = self._event(former_sign, former_pool,
                             negated=self._flip(cfg.negation_rate))
        pair = EventPair(former, latter, relation)
        return pair, self._sentence(pair)

    def _sentence(self, pair: EventPair) -> str:
        former = list(pair.former.tokens)
        latter = list(pair.latter.tokens)
        if pair.relation is Relation.CAUSE:
            # table rule: because / cause / latter_first
            if self._flip(self.config.fronted_rate):
                tokens = ["because"] + former + [","] + latter
            else:
                tokens = latter + ["because"] + former
        else:
            # table rule: although / concession / former_first
            if self._flip(self.config.fronted_rate):
                tokens = ["although"] + latter + [","] + former
            else:
                tokens = former + ["although"] + latter
        return " ".join(tokens)

    def _labeled(self, n: int, pool: dict[int, list[str]], negation_rate: float) -> list[LabeledEvent]:
        out = []
        for i in range(n):
            sign = 1 if i % 2 == 0 else -1
            negated = self._flip(negation_rate)
            out.append(LabeledEvent(self._event(sign, pool, negated=negated), sign))
        return out

    def run(self) -> SyntheticData:
        cfg = self.config
        pairs: list[EventPair] = []
        sentences: list[str] = []
        for relation, count in ((Relation.CAUSE, cfg.n_cause),
                                (Relation.CONCESSION, cfg.n_concession)):
            for _ in range(count):
                pair, sentence = self._pair(relation)
                pairs.append(pair)
                sentences.append(sentence)
        dev = self._labeled(cfg.n_dev, self.train, cfg.negation_rate)
        test = self._labeled(cfg.n_test, self.held, 0.0)
        return SyntheticData(
            config=cfg,
            sign_of=dict(self.sign_of),
            seed_words={w: s for s in (1, -1) for w in self.seeds[s]},
            train_words=self.train[1] + self.train[-1],
            heldout_words=self.held[1] + self.held[-1],
            pairs=pairs,
            sentences=sentences,
            dev=dev,
            test=test,
        )


def generate(config: SyntheticConfig = SyntheticConfig()) -> SyntheticData:
    return _Generator(config).run()


def sample_labeled(data: SyntheticData, n: int, rng_seed: int = 0) -> list[LabeledEvent]:
    """Sign-balanced labeled events over train-pool words (small-supervision runs)."""
    gen = _Generator(data.config)
    gen.rng = np.random.default_rng(rng_seed)
    return gen._labeled(n, gen.train, 0.0)


def probe_words(data: SyntheticData, n: int, rng_seed: int = 0) -> list[str]:
    """Non-seed words used to probe plain-vs-negated score flips."""
    rng = np.random.default_rng(rng_seed)
    candidates = sorted(data.train_words + data.heldout_words)
    picked = rng.choice(len(candidates), size=min(n, len(candidates)), replace=False)
    return [candidates[i] for i in np.sort(picked)]


def write_fixtures(data: SyntheticData, out_dir: str | Path) -> dict[str, Path]:
    """Realize the corpus as CLI-consumable files; returns the path map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.txt",
        "connectives": out / "connectives.tsv",
        "lexicon": out / "lexicon.tsv",
        "negations": out / "negations.txt",
        "dev": out / "dev.jsonl",
        "test": out / "test.jsonl",
        "signs": out / "hidden_signs.json",
    }
    paths["corpus"].write_text("\n".join(data.sentences) + "\n", encoding="utf-8")
    paths["connectives"].write_text(CONNECTIVES_TSV, encoding="utf-8")
    paths["lexicon"].write_text(
        "".join(f"{w}\t{'+1' if s == 1 else '-1'}\n" for w, s in data.seed_words.items()),
        encoding="utf-8",
    )
    paths["negations"].write_text(NEGATION_MARKER + "\n", encoding="utf-8")
    save_labeled_events(data.dev, paths["dev"])
    save_labeled_events(data.test, paths["test"])
    paths["signs"].write_text(json.dumps(data.sign_of, indent=0, sort_keys=True),
                              encoding="utf-8")
    return paths

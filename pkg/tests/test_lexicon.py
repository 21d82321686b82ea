import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarity_prop.events import Event
from polarity_prop.lexicon import (
    ConflictingEntryError,
    MalformedLineError,
    SeedLexicon,
    load_lexicon,
    load_negation_markers,
    match_seed,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadLexicon:
    def test_two_entries(self, tmp_path):
        p = write(tmp_path, "lex.tsv", "rejoice\t+1\nget_angry\t-1\n")
        lex = load_lexicon(p)
        assert lex.entries == {"rejoice": 1, "get_angry": -1}

    def test_same_polarity_twice_is_idempotent(self, tmp_path):
        p = write(tmp_path, "lex.tsv", "like\t+1\nlike\t+1\n")
        assert load_lexicon(p).entries == {"like": 1}

    def test_conflicting_entry(self, tmp_path):
        p = write(tmp_path, "lex.tsv", "like\t+1\nlike\t-1\n")
        with pytest.raises(ConflictingEntryError):
            load_lexicon(p)

    @pytest.mark.parametrize("line", ["like +1", "like\t0", "like\t2", "\t+1", "like\t+1\textra"])
    def test_malformed(self, tmp_path, line):
        p = write(tmp_path, "lex.tsv", line + "\n")
        with pytest.raises(MalformedLineError):
            load_lexicon(p)

    def test_comments_and_blanks_skipped(self, tmp_path):
        p = write(tmp_path, "lex.tsv", "# header\n\nbe glad\t+1\n")
        assert load_lexicon(p).entries == {"be glad": 1}

    def test_negation_markers_loaded(self, tmp_path):
        lex_p = write(tmp_path, "lex.tsv", "glad\t+1\n")
        neg_p = write(tmp_path, "neg.txt", "# markers\nnot\nnever\n")
        lex = load_lexicon(lex_p, neg_p)
        assert lex.negation_markers == {"not", "never"}
        assert load_negation_markers(neg_p) == {"not", "never"}

    def test_markers_one_token_per_line(self, tmp_path):
        neg_p = write(tmp_path, "neg.txt", "not at all\n")
        with pytest.raises(MalformedLineError):
            load_negation_markers(neg_p)

    def test_bad_polarity_value_rejected_at_construction(self):
        with pytest.raises(ValueError):
            SeedLexicon({"glad": 0})


LEX = SeedLexicon({"glad": 1, "angry": -1}, frozenset({"not"}))


class TestMatchSeed:
    def test_positive_predicate_matches(self):
        assert match_seed(Event(("be", "glad"), 1), LEX) == 1

    def test_absent_predicate_no_match(self):
        assert match_seed(Event(("be", "confused"), 1), LEX) is None

    def test_negation_excludes_instead_of_flipping(self):
        assert match_seed(Event(("not", "glad"), 1), LEX) is None

    def test_negation_anywhere_blocks(self):
        assert match_seed(Event(("glad", "not"), 0), LEX) is None

    def test_non_predicate_position_does_not_match(self):
        assert match_seed(Event(("glad", "person"), 1), LEX) is None


TOKENS = st.sampled_from(["glad", "angry", "confused", "not", "fine"])
EVENTS = st.builds(
    lambda toks, i: Event(tuple(toks), i % len(toks)),
    st.lists(TOKENS, min_size=1, max_size=4),
    st.integers(min_value=0, max_value=3),
)


@given(EVENTS)
def test_match_range_is_plus_minus_or_none(event):
    assert match_seed(event, LEX) in (1, -1, None)


@given(EVENTS)
def test_negation_marker_forces_no_match(event):
    if any(t in LEX.negation_markers for t in event.tokens):
        assert match_seed(event, LEX) is None


@given(EVENTS, st.sampled_from(["glad", "angry"]))
def test_removing_entry_only_affects_that_predicate(event, removed):
    """Locality: dropping one entry changes matches only for its predicate."""
    smaller = SeedLexicon(
        {k: v for k, v in LEX.entries.items() if k != removed},
        LEX.negation_markers,
    )
    before, after = match_seed(event, LEX), match_seed(event, smaller)
    if event.predicate != removed:
        assert before == after
    else:
        assert after is None

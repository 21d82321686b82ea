import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarity_prop.events import (
    ClauseOrder,
    ConnectiveRule,
    DuplicatePatternError,
    Event,
    MalformedRuleError,
    Relation,
    extract_pairs,
    last_clause,
    load_connective_table,
    pair_from_record,
    pair_to_record,
    read_pairs,
    stream_corpus,
    write_pairs,
)

BECAUSE = ConnectiveRule("because", Relation.CAUSE, ClauseOrder.LATTER_FIRST)
ALTHOUGH = ConnectiveRule("although", Relation.CONCESSION, ClauseOrder.FORMER_FIRST)


def test_event_invariants():
    with pytest.raises(ValueError):
        Event((), 0)
    with pytest.raises(ValueError):
        Event(("a",), 1)
    with pytest.raises(ValueError):
        Event(("a", "b"), -1)
    assert Event(("a", "b"), 1).predicate == "b"


def test_relation_is_closed():
    assert {r.value for r in Relation} == {"cause", "concession"}
    with pytest.raises(ValueError):
        Relation("contrast")


class TestConnectiveTable:
    def test_single_rule(self, tmp_path):
        p = tmp_path / "table.tsv"
        p.write_text("because\tcause\tlatter_first\n")
        rules = load_connective_table(p)
        assert rules == [BECAUSE]

    def test_empty_file_gives_empty_table(self, tmp_path):
        p = tmp_path / "table.tsv"
        p.write_text("# only a comment\n\n")
        assert load_connective_table(p) == []
        assert extract_pairs("anything at all".split(), []) == []

    def test_duplicate_pattern_rejected(self, tmp_path):
        p = tmp_path / "table.tsv"
        p.write_text("but\tcause\tlatter_first\nbut\tconcession\tformer_first\n")
        with pytest.raises(DuplicatePatternError):
            load_connective_table(p)

    @pytest.mark.parametrize("line", [
        "because\tcausal\tlatter_first",
        "because\tcause\tupside_down",
        "because\tcause",
        "\tcause\tlatter_first",
    ])
    def test_malformed_rule(self, tmp_path, line):
        p = tmp_path / "table.tsv"
        p.write_text(line + "\n")
        with pytest.raises(MalformedRuleError):
            load_connective_table(p)


class TestExtractPairs:
    def test_sentence_initial_connective(self):
        # "Because [I] made a serious mistake , [I] got fired"
        sent = "Because [I] made a serious mistake , [I] got fired".split()
        pairs = extract_pairs(sent, [BECAUSE])
        assert len(pairs) == 1
        assert pairs[0].former.tokens == ("[I]", "made", "a", "serious", "mistake")
        assert pairs[0].latter.tokens == ("[I]", "got", "fired")
        assert pairs[0].relation is Relation.CAUSE
        assert pairs[0].former.predicate == "mistake"
        assert pairs[0].latter.predicate == "fired"

    def test_no_connective_yields_nothing(self):
        assert extract_pairs("a plain sentence".split(), [BECAUSE, ALTHOUGH]) == []

    def test_mid_position_concession(self):
        # oracle: hand enumeration of the single occurrence and its split
        sent = "the trip was fun although it rained all day".split()
        pairs = extract_pairs(sent, [ALTHOUGH])
        assert len(pairs) == 1
        assert pairs[0].former.tokens == ("the", "trip", "was", "fun")
        assert pairs[0].latter.tokens == ("it", "rained", "all", "day")
        assert pairs[0].relation is Relation.CONCESSION

    def test_latter_first_mid_position(self):
        pairs = extract_pairs("B1 B2 because A1 A2".split(), [BECAUSE])
        assert len(pairs) == 1
        assert pairs[0].former.tokens == ("A1", "A2")
        assert pairs[0].latter.tokens == ("B1", "B2")

    def test_trailing_connective_yields_nothing(self):
        assert extract_pairs("it rained because".split(), [BECAUSE]) == []

    def test_initial_connective_without_delimiter_yields_nothing(self):
        assert extract_pairs("because it rained hard".split(), [BECAUSE]) == []

    def test_multiple_occurrences_emit_independently(self):
        sent = "A because B because C".split()
        pairs = extract_pairs(sent, [BECAUSE])
        assert len(pairs) == 2
        assert pairs[0].latter.tokens == ("A",)
        assert pairs[0].former.tokens == ("B", "because", "C")
        assert pairs[1].latter.tokens == ("A", "because", "B")
        assert pairs[1].former.tokens == ("C",)

    def test_boundary_punctuation_trimmed(self):
        sent = "he stayed home , because it rained .".split()
        pairs = extract_pairs(sent, [BECAUSE])
        assert len(pairs) == 1
        assert pairs[0].latter.tokens == ("he", "stayed", "home")
        assert pairs[0].former.tokens == ("it", "rained")

    def test_multi_token_pattern(self):
        rule = ConnectiveRule("in spite of", Relation.CONCESSION, ClauseOrder.LATTER_FIRST)
        pairs = extract_pairs("he smiled in spite of the pain".split(), [rule])
        assert len(pairs) == 1
        assert pairs[0].former.tokens == ("the", "pain")
        assert pairs[0].latter.tokens == ("he", "smiled")

    def test_first_token_predicate_heuristic(self):
        pairs = extract_pairs("A1 A2 because B1 B2".split(), [BECAUSE],
                              predicate_position="first")
        assert pairs[0].former.predicate == "B1"
        assert pairs[0].latter.predicate == "A1"

    def test_relation_matches_rule(self):
        for rule in (BECAUSE, ALTHOUGH):
            sent = f"one side {rule.pattern} other side".split()
            for pair in extract_pairs(sent, [BECAUSE, ALTHOUGH]):
                assert pair.relation is rule.relation


WORDS = st.sampled_from(["alpha", "beta", "gamma", "delta", "zeta"])
SENTENCES = st.lists(
    st.one_of(WORDS, st.sampled_from(["because", "although", ","])),
    min_size=0, max_size=12,
)


@given(SENTENCES)
def test_extract_deterministic_and_well_formed(sentence):
    table = [BECAUSE, ALTHOUGH]
    first = extract_pairs(sentence, table)
    second = extract_pairs(sentence, table)
    assert first == second
    for pair in first:
        assert pair.former.tokens and pair.latter.tokens


@given(st.lists(SENTENCES, min_size=0, max_size=8))
@settings(max_examples=40)
def test_stream_matches_per_line_extraction(tmp_path_factory, corpus):
    """Pair count from the stream equals the sum of per-line counts."""
    table = [BECAUSE, ALTHOUGH]
    path = tmp_path_factory.mktemp("corpus") / "corpus.txt"
    path.write_text("\n".join(" ".join(s) for s in corpus) + "\n", encoding="utf-8")
    streamed = list(stream_corpus(path, table))
    per_line = [p for s in corpus for p in extract_pairs(s, table)]
    assert streamed == per_line


def test_stream_skips_undecodable_lines(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_bytes(b"A because B\n\xff\xfe broken \xff\nC although D\n")
    stream = stream_corpus(path, [BECAUSE, ALTHOUGH])
    pairs = list(stream)
    assert len(pairs) == 2
    assert stream.skipped_lines == 1
    assert stream.total_lines == 3


def test_pair_record_round_trip(tmp_path):
    pairs = extract_pairs("A because B".split(), [BECAUSE])
    assert [pair_from_record(pair_to_record(p)) for p in pairs] == pairs
    out = tmp_path / "pairs.jsonl"
    assert write_pairs(pairs, out) == 1
    assert list(read_pairs(out)) == pairs
    record = json.loads(out.read_text().strip())
    assert set(record) == {"former_tokens", "former_predicate_index",
                           "latter_tokens", "latter_predicate_index", "relation"}


def test_last_clause():
    assert last_clause("the food was cheap , the queue was long".split()).tokens \
        == ("the", "queue", "was", "long")
    assert last_clause("no delimiters here".split()).tokens == ("no", "delimiters", "here")
    assert last_clause([","]) is None

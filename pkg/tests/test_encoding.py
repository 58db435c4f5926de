import numpy as np
import pytest

from src import encoding
from src.corpus import ingest
from src.encoding import MergeRule, MergeTable
from src.errors import EmptyCorpus, InvalidGamma, MalformedMarkers


def _rules(table):
    return [(rule.left, rule.right, rule.step) for rule in table]


# ---------------------------------------------------------------------------
# Merge tables
# ---------------------------------------------------------------------------
def test_merge_table_drops_duplicates():
    table = MergeTable("re")
    assert table.add(MergeRule("a", "b", 1, "re"))
    assert not table.add(MergeRule("a", "b", 2, "re"))
    assert len(table) == 1
    assert ("a", "b") in table
    assert table.ranks() == {("a", "b"): 0}


def test_merge_rule_validation():
    with pytest.raises(ValueError):
        MergeRule("", "b", 1, "re")
    with pytest.raises(ValueError):
        MergeRule("a", "b", 1, "wordpiece")
    with pytest.raises(ValueError):
        MergeTable("unigram")


# ---------------------------------------------------------------------------
# BPE
# ---------------------------------------------------------------------------
def test_learn_bpe_hand_trace():
    table = encoding.learn_bpe([["low"]] * 5, 10)
    assert _rules(table) == [("l", "o", 1), ("lo", "w", 2), ("low", encoding.END_OF_WORD, 3)]
    assert encoding.apply_bpe(["low"], table) == ["low"]
    first = MergeTable("bpe", table.rules[:1])
    assert encoding.apply_bpe(["low"], first) == ["lo@@", "w"]


def test_zero_merges_split_characters():
    table = encoding.learn_bpe([["low", "lower"]], 0)
    assert len(table) == 0
    assert encoding.apply_bpe(["low", "a"], table) == ["l@@", "o@@", "w", "a"]


def test_learn_bpe_merges_singletons_by_default():
    table = encoding.learn_bpe([["ab", "cd"]], 10)
    assert _rules(table) == [
        ("a", "b", 1),
        ("ab", encoding.END_OF_WORD, 2),
        ("c", "d", 3),
        ("cd", encoding.END_OF_WORD, 4),
    ]
    assert len(encoding.learn_bpe([["ab", "cd"]], 10, min_frequency=2)) == 0


def test_learn_bpe_stops_at_num_merges_once_counts_reach_one():
    # after "low" is whole, only the single "lowest" keeps pairs to merge
    table = encoding.learn_bpe([["low"]] * 5 + [["lowest"]], 5)
    assert _rules(table)[:3] == [("l", "o", 1), ("lo", "w", 2), ("low", encoding.END_OF_WORD, 3)]
    assert len(table) == 5
    assert encoding.apply_bpe(["lowest"], table) == ["low@@", "est"]


def test_learn_bpe_validation():
    with pytest.raises(EmptyCorpus):
        encoding.learn_bpe([[]], 5)
    with pytest.raises(ValueError):
        encoding.learn_bpe([["a"]], -1)


def test_learn_bpe_is_deterministic(corpus_path):
    corpus = ingest(corpus_path).sequences
    assert _rules(encoding.learn_bpe(corpus, 150)) == _rules(encoding.learn_bpe(corpus, 150))


def test_bpe_round_trip_on_bundled_corpus(corpus_path):
    corpus = ingest(corpus_path).sequences
    table = encoding.learn_bpe(corpus, 300)
    encoded = encoding.apply_bpe_corpus(corpus, table)
    for words, tokens in zip(corpus, encoded):
        assert encoding.strip_bpe(tokens) == words
        assert encoding.detokenize(tokens) == words
        assert not tokens[-1].endswith(encoding.CONTINUATION)
    # re-encoding the surface words is a fixed point
    again = encoding.apply_bpe_corpus([encoding.strip_bpe(t) for t in encoded], table)
    assert again == encoded


def test_strip_bpe_rejects_dangling_marker():
    with pytest.raises(MalformedMarkers):
        encoding.strip_bpe(["de@@"])


# ---------------------------------------------------------------------------
# Rebalanced encoding
# ---------------------------------------------------------------------------
def test_join_tokens_fuses_subwords():
    assert encoding.join_tokens("de@@", "crease") == "decrease"
    assert encoding.join_tokens("involved", "in") == "involved==in"
    assert encoding.join_tokens("a==b", "a==b") == "a==b==a==b"


def test_apply_re_examples():
    def table(*pairs):
        return MergeTable("re", [MergeRule(u, v, 1, "re") for u, v in pairs])

    assert encoding.apply_re(["de@@", "crease"], table(("de@@", "crease"))) == ["decrease"]
    assert encoding.apply_re(["involved", "in"], table(("involved", "in"))) == ["involved==in"]
    assert encoding.apply_re(["x", "x", "x"], table(("x", "x"))) == ["x==x", "x"]
    assert encoding.apply_re(["a", "b", "c"], table(("b", "c"), ("a", "b==c"))) == ["a==b==c"]
    assert encoding.apply_re([], table(("a", "b"))) == []


def test_learn_re_reference_trace():
    result = encoding.learn_re_report(list("ababab"), 2, 0.9)
    assert _rules(result.table) == [("a", "b", 1), ("b", "a", 1), ("a==b", "a==b", 2)]
    assert result.encoded == [["a==b==a==b", "a==b"]]
    assert result.steps_run == 2
    assert not result.converged
    assert encoding.apply_re(list("ababab"), result.table) == ["a==b==a==b", "a==b"]


def test_learn_re_trivial_cases():
    assert len(encoding.learn_re([list("ababab")], 5, 1.0)) == 0
    result = encoding.learn_re_report([["a", "b"], ["a", "c"]], 5, 0.9)
    assert len(result.table) == 0
    assert result.converged
    assert result.steps_run == 0
    for gamma in (0.0, -0.1, 1.5):
        with pytest.raises(InvalidGamma):
            encoding.learn_re([["a", "b"]], 3, gamma)
    with pytest.raises(ValueError):
        encoding.learn_re([["a", "b"]], 0, 0.5)


def test_learn_re_keeps_sentence_boundaries():
    corpus = [["x", "y"], ["z", "x"], ["z", "w"]]
    # y ends its sentence; only the flat stream pairs it with z
    per_sentence = encoding.learn_re(corpus, 1, 0.9)
    assert ("y", "z") not in per_sentence
    flat = encoding.learn_re(corpus, 1, 0.9, flat=True)
    assert ("y", "z") in flat


def test_learn_re_converges_below_gamma(corpus_path):
    corpus = ingest(corpus_path).sequences
    result = encoding.learn_re_report(corpus, 20, 0.5)
    assert result.converged
    assert encoding.transition_max(result.encoded) <= 0.5
    assert encoding.transition_max(encoding.apply_re_corpus(corpus, result.table)) <= 0.5
    again = encoding.learn_re_report(corpus, 20, 0.5)
    assert _rules(again.table) == _rules(result.table)


def test_re_steps_shrink_the_stream(corpus_path):
    corpus = ingest(corpus_path).sequences[:60]
    previous = sum(len(s) for s in corpus)
    for steps in range(1, 6):
        result = encoding.learn_re_report(corpus, steps, 0.3)
        size = sum(len(s) for s in result.encoded)
        if result.steps_run == steps and len(result.table) > 0:
            assert size < previous
        previous = size


def test_re_preserves_surface_form(corpus_path):
    corpus = ingest(corpus_path).sequences
    bpe = encoding.learn_bpe(corpus, 200)
    tokens = encoding.apply_bpe_corpus(corpus, bpe)
    table = encoding.learn_re(tokens, 10, 0.3)
    assert len(table) > 0
    for words, seq in zip(corpus, tokens):
        assert encoding.detokenize(encoding.apply_re(seq, table)) == words


def test_re_preserves_surface_form_on_random_streams():
    rng = np.random.default_rng(8)
    pieces = ["a", "b", "c@@", "d@@", "e"]
    for _ in range(200):
        words = [str(x) for x in rng.choice(pieces, size=int(rng.integers(1, 20)))]
        if words[-1].endswith("@@"):
            words.append("e")
        table = encoding.learn_re([words], 4, float(rng.uniform(0.2, 0.9)))
        assert encoding.detokenize(encoding.apply_re(words, table)) == encoding.detokenize(words)


def test_learn_re_ignores_rare_pairs():
    corpus = [["a", "b"]] * 4 + [["c", "d"]] * 6
    plain = encoding.learn_re_report(corpus, 5, 0.5)
    assert _rules(plain.table) == [("a", "b", 1), ("c", "d", 1)]
    result = encoding.learn_re_report(corpus, 5, 0.5, min_count=5)
    assert _rules(result.table) == [("c", "d", 1)]
    assert result.converged
    assert result.as_dict()["min_count"] == 5
    assert encoding.transition_max(result.encoded, min_count=5) == 0.0
    assert encoding.transition_max(result.encoded) == 1.0
    with pytest.raises(ValueError):
        encoding.learn_re(corpus, 5, 0.5, min_count=0)


def test_apply_re_matches_rule_by_rule_application():
    rng = np.random.default_rng(41)
    alphabet = ["a", "b", "c", "a==b", "b==c", "c==a"]
    for _ in range(300):
        table = MergeTable("re")
        for step in range(1, int(rng.integers(1, 12))):
            u, v = (str(x) for x in rng.choice(alphabet, size=2))
            table.add(MergeRule(u, v, step, "re"))
        tokens = [str(x) for x in rng.choice(alphabet[:3], size=int(rng.integers(0, 25)))]
        expected = list(tokens)
        for rule in table:
            encoding._apply_rule(expected, rule.pair)
        assert encoding.apply_re(tokens, table) == expected


@pytest.mark.slow
def test_bundled_corpus_encodings_round_trip(bundled_corpus_path):
    corpus = ingest(bundled_corpus_path).sequences
    bpe = encoding.learn_bpe(corpus, 10_000)
    tokens = encoding.apply_bpe_corpus(corpus, bpe)
    result = encoding.learn_re_report(tokens, 10, 0.1, min_count=5)
    assert len(result.table) > 0
    assert result.encoded == encoding.apply_re_corpus(tokens, result.table)
    for words, seq in zip(corpus[:300], result.encoded):
        assert encoding.detokenize(seq) == words


# ---------------------------------------------------------------------------
# Detokenization
# ---------------------------------------------------------------------------
def test_detokenize_examples():
    assert encoding.detokenize(["involved==in"]) == ["involved", "in"]
    assert encoding.detokenize(["de@@", "crease"]) == ["decrease"]
    assert encoding.detokenize(["hello"]) == ["hello"]
    assert encoding.detokenize(["the==c@@", "at"]) == ["the", "cat"]
    assert encoding.detokenize([]) == []


def test_detokenize_reports_malformed_markers():
    with pytest.raises(MalformedMarkers):
        encoding.detokenize(["de@@"])
    with pytest.raises(MalformedMarkers):
        encoding.detokenize(["a===="])
    assert encoding.detokenize(["the", "de@@"], strict=False) == ["the", "de"]

"""Edit distance, token classification, and replacement selection.

The full-matrix dynamic-programming oracle below is written independently
of the library implementation; frozen expected values were derived from it
by hand before the library function was tested against it.
"""

from __future__ import annotations

import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialshift.errors import SchemaError
from dialshift.lexicon import (
    ReplacementMode,
    SynonymLexicon,
    VocabStats,
    WordClass,
    build_vocab_stats,
    classify_word,
    is_multi_part,
    is_numeric_token,
    levenshtein,
    load_lexicon,
    load_vocab_stats,
    select_replacement,
    write_lexicon,
    write_vocab_stats,
)

from conftest import make_dialogue


def oracle_levenshtein(a: str, b: str) -> int:
    """Full-matrix DP over unit insert/delete/substitute costs."""
    m, n = len(a), len(b)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        table[i][0] = i
    for j in range(n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[m][n]


# ------------------------------------------------------------- edit distance


@pytest.mark.parametrize(
    "a,b,expected",
    [
        ("kitten", "sitting", 3),
        ("", "abcd", 4),
        ("abcd", "", 4),
        ("flaw", "lawn", 2),
        ("same", "same", 0),
        ("café", "cafe", 1),
        ("ab", "ba", 2),
    ],
)
def test_levenshtein_frozen_values(a, b, expected):
    assert oracle_levenshtein(a, b) == expected
    assert levenshtein(a, b) == expected


@settings(max_examples=150, deadline=None)
@given(st.text(max_size=12), st.text(max_size=12))
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == oracle_levenshtein(a, b)


@settings(max_examples=100, deadline=None)
@given(
    st.text(alphabet="abc", max_size=8),
    st.text(alphabet="abc", max_size=8),
    st.text(alphabet="abc", max_size=8),
)
def test_levenshtein_metric_properties(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert levenshtein(a, a) == 0
    assert levenshtein(a, b) <= levenshtein(a, c) + levenshtein(c, b)
    assert abs(len(a) - len(b)) <= levenshtein(a, b) <= max(len(a), len(b))


# -------------------------------------------------------------- token filters


@pytest.mark.parametrize(
    "token",
    ["2", "3.5", "+7", "-0.5", ".5", "100", "two", "Twenty", "THOUSAND", "ninety", "million"],
)
def test_numeric_tokens(token):
    assert is_numeric_token(token)


@pytest.mark.parametrize("token", ["7up", "none", "dozen", "second", "car", ""])
def test_non_numeric_tokens(token):
    assert not is_numeric_token(token)


@pytest.mark.parametrize("token", ["ice cream", "state-of-the-art", "snake_case", "a b"])
def test_multi_part_tokens(token):
    assert is_multi_part(token)


@pytest.mark.parametrize("token", ["it's", "word", "don’t"])
def test_single_part_tokens(token):
    assert not is_multi_part(token)


# ------------------------------------------------------------ classification


def test_classify_word_boundaries():
    stats = VocabStats(Counter({"known": 5001, "edge": 5000, "rare": 3}))
    assert classify_word("absent", stats) is WordClass.UNKNOWN
    assert classify_word("known", stats) is WordClass.KNOWN
    assert classify_word("edge", stats) is WordClass.OTHER
    assert classify_word("rare", stats) is WordClass.OTHER


def test_classify_word_custom_threshold():
    stats = VocabStats(Counter({"w": 6}))
    assert classify_word("w", stats, known_threshold=5) is WordClass.KNOWN
    assert classify_word("w", stats, known_threshold=6) is WordClass.OTHER


def test_vocab_stats_from_dialogues_counts_all_utterances():
    d = make_dialogue("d0", ["a a b", "a c", "b ."])
    stats = build_vocab_stats([d])
    assert stats.count("a") == 3
    assert stats.count("b") == 2
    assert stats.count("c") == 1
    assert stats.count(".") == 1
    assert stats.count("zzz") == 0
    assert stats.max_count() == 3


def test_vocab_stats_case_sensitive():
    d = make_dialogue("d0", ["Word word", "WORD x"])
    stats = build_vocab_stats([d])
    assert stats.count("Word") == 1
    assert stats.count("word") == 1
    assert stats.count("WORD") == 1


# --------------------------------------------------------- select_replacement


def _unknown_stats(*extra: tuple[str, int]) -> VocabStats:
    return VocabStats(Counter(dict(extra)))


def test_select_replacement_picks_most_distant_unknown():
    lexicon = SynonymLexicon(entries={"car": ("auto", "automobile")})
    stats = _unknown_stats(("car", 50))
    pick = select_replacement("car", lexicon, stats, ReplacementMode.UNKNOWN_WORD)
    assert pick == "automobile"
    assert levenshtein("car", "automobile") > levenshtein("car", "auto")


def test_select_replacement_drops_numeric_and_multipart_and_identity():
    lexicon = SynonymLexicon(
        entries={"car": ("two", "ice cream", "car", "van")}
    )
    stats = _unknown_stats()
    pick = select_replacement("car", lexicon, stats, ReplacementMode.UNKNOWN_WORD)
    assert pick == "van"


def test_select_replacement_lexicographic_tie_break():
    lexicon = SynonymLexicon(entries={"cd": ("ba", "ab")})
    stats = _unknown_stats()
    assert levenshtein("cd", "ab") == levenshtein("cd", "ba") == 2
    pick = select_replacement("cd", lexicon, stats, ReplacementMode.UNKNOWN_WORD)
    assert pick == "ab"


def test_select_replacement_unknown_requires_zero_count():
    lexicon = SynonymLexicon(entries={"car": ("automobile", "wagon")})
    stats = _unknown_stats(("automobile", 1))
    pick = select_replacement("car", lexicon, stats, ReplacementMode.UNKNOWN_WORD)
    assert pick == "wagon"


def test_select_replacement_known_requires_count_above_threshold():
    lexicon = SynonymLexicon(entries={"car": ("automobile", "wagon", "van")})
    stats = VocabStats(Counter({"automobile": 6, "wagon": 5, "van": 0}))
    pick = select_replacement(
        "car", lexicon, stats, ReplacementMode.KNOWN_WORD, known_threshold=5
    )
    assert pick == "automobile"


def test_select_replacement_none_when_no_candidate_survives():
    lexicon = SynonymLexicon(entries={"car": ("two", "ice cream")})
    stats = _unknown_stats()
    assert select_replacement("car", lexicon, stats, ReplacementMode.UNKNOWN_WORD) is None
    assert select_replacement("bike", lexicon, stats, ReplacementMode.UNKNOWN_WORD) is None


# -------------------------------------------------------------------- files


def test_lexicon_file_round_trip(tmp_path):
    path = tmp_path / "lexicon.jsonl"
    lexicon = SynonymLexicon(entries={"car": ("auto", "wagon"), "bike": ("cycle",)})
    write_lexicon(path, lexicon)
    loaded = load_lexicon(path)
    assert loaded.entries == lexicon.entries


def test_lexicon_file_rejects_duplicate_headwords(tmp_path):
    path = tmp_path / "dup.jsonl"
    path.write_text(
        json.dumps({"word": "car", "synonyms": ["auto"]})
        + "\n"
        + json.dumps({"word": "car", "synonyms": ["wagon"]})
        + "\n"
    )
    with pytest.raises(SchemaError, match="car"):
        load_lexicon(path)


def test_lexicon_drops_headword_from_synonyms(tmp_path):
    path = tmp_path / "self.jsonl"
    path.write_text(json.dumps({"word": "car", "synonyms": ["car", "auto"]}) + "\n")
    loaded = load_lexicon(path)
    assert loaded.entries == {"car": ("auto",)}


def test_vocab_file_round_trip(tmp_path):
    path = tmp_path / "vocab.jsonl"
    stats = VocabStats(Counter({"b": 2, "a": 9}))
    write_vocab_stats(path, stats)
    loaded = load_vocab_stats(path)
    assert loaded.count("a") == 9
    assert loaded.count("b") == 2
    first = json.loads(path.read_text().splitlines()[0])
    assert first["word"] == "a"

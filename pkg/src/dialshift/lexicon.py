"""Synonym lexicon, vocabulary statistics, and replacement selection.

Replacement candidates for a word pass through four filters before one is
chosen:

1. numeric candidates are dropped, whether written in digits ("2", "3.5")
   or as common English number words ("two", "Two", "ninety");
2. multi-part candidates are dropped (anything containing a space, hyphen,
   or underscore);
3. the candidate's training-corpus count must fit the mode: zero occurrences
   for unknown-word replacement, or strictly more than the known threshold
   for known-word replacement;
4. among the survivors, the candidate with the largest edit distance from
   the original word wins; ties go to the lexicographically smallest.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .corpus import Dialogue
from .errors import SchemaError
from .jsonl import read_records, write_records

DEFAULT_KNOWN_THRESHOLD = 5000

_NUMBER_WORDS = frozenset(
    [
        "zero", "one", "two", "three", "four", "five", "six", "seven",
        "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen",
        "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
        "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
        "hundred", "thousand", "million",
    ]
)

_DIGIT_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


class WordClass(Enum):
    UNKNOWN = "unknown"
    KNOWN = "known"
    OTHER = "other"


class ReplacementMode(Enum):
    UNKNOWN_WORD = "unknown_word"
    KNOWN_WORD = "known_word"


def is_numeric_token(token: str) -> bool:
    """True for digit/decimal strings and spelled-out number words."""
    return bool(_DIGIT_RE.match(token)) or token.lower() in _NUMBER_WORDS


def is_multi_part(token: str) -> bool:
    return any(sep in token for sep in (" ", "-", "_"))


@dataclass
class VocabStats:
    """Token counts over a training corpus (contexts and responses alike)."""

    counts: Counter = field(default_factory=Counter)

    @property
    def total_tokens(self) -> int:
        return sum(self.counts.values())

    def count(self, token: str) -> int:
        return self.counts.get(token, 0)

    def max_count(self) -> int:
        if not self.counts:
            raise ValueError("vocabulary statistics are empty")
        return max(self.counts.values())


def build_vocab_stats(dialogues: list[Dialogue]) -> VocabStats:
    """Count every token of every utterance. Case-sensitive by design."""
    counts: Counter = Counter()
    for dlg in dialogues:
        for utt in dlg.utterances:
            counts.update(utt.tokens)
    return VocabStats(counts=counts)


def load_vocab_stats(path: str | Path) -> VocabStats:
    counts: Counter = Counter()
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        word = record.get("word")
        count = record.get("count")
        if not isinstance(word, str) or not word:
            raise SchemaError(f"{where}: missing 'word'")
        if not isinstance(count, int) or isinstance(count, bool) or count < 0:
            raise SchemaError(f"{where}: 'count' must be a non-negative integer")
        if word in counts:
            raise SchemaError(f"{where}: duplicate word {word!r}")
        counts[word] = count
    return VocabStats(counts=counts)


def write_vocab_stats(path: str | Path, stats: VocabStats) -> None:
    words = sorted(stats.counts)
    write_records(path, ({"word": w, "count": stats.counts[w]} for w in words))


@dataclass
class SynonymLexicon:
    """Headword to candidate synonyms. A headword never lists itself."""

    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def candidates(self, word: str) -> tuple[str, ...]:
        return self.entries.get(word, ())

    @classmethod
    def from_dict(cls, raw: dict[str, list[str]]) -> "SynonymLexicon":
        entries: dict[str, tuple[str, ...]] = {}
        for word, synonyms in raw.items():
            cleaned = tuple(s for s in synonyms if s and s != word)
            entries[word] = cleaned
        return cls(entries=entries)


def load_lexicon(path: str | Path) -> SynonymLexicon:
    entries: dict[str, tuple[str, ...]] = {}
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        word = record.get("word")
        synonyms = record.get("synonyms")
        if not isinstance(word, str) or not word:
            raise SchemaError(f"{where}: missing 'word'")
        if word in entries:
            raise SchemaError(f"{where}: duplicate headword {word!r}")
        if not isinstance(synonyms, list) or not all(
            isinstance(s, str) and s for s in synonyms
        ):
            raise SchemaError(f"{where}: 'synonyms' must be a list of non-empty strings")
        entries[word] = tuple(s for s in synonyms if s != word)
    return SynonymLexicon(entries=entries)


def write_lexicon(path: str | Path, lexicon: SynonymLexicon) -> None:
    words = sorted(lexicon.entries)
    write_records(
        path, ({"word": w, "synonyms": list(lexicon.entries[w])} for w in words)
    )


def classify_word(
    word: str, stats: VocabStats, known_threshold: int = DEFAULT_KNOWN_THRESHOLD
) -> WordClass:
    """UNKNOWN for words never seen in training; KNOWN only when the count
    strictly exceeds the threshold; everything in between is OTHER."""
    count = stats.count(word)
    if count == 0:
        return WordClass.UNKNOWN
    if count > known_threshold:
        return WordClass.KNOWN
    return WordClass.OTHER


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode code points."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev = curr
    return prev[-1]


def select_replacement(
    word: str,
    lexicon: SynonymLexicon,
    stats: VocabStats,
    mode: ReplacementMode,
    known_threshold: int = DEFAULT_KNOWN_THRESHOLD,
) -> Optional[str]:
    """Pick a replacement for `word`, or None when no candidate survives
    the filters described in the module docstring."""
    survivors: list[str] = []
    for cand in lexicon.candidates(word):
        if cand == word:
            continue
        if is_numeric_token(cand):
            continue
        if is_multi_part(cand):
            continue
        count = stats.count(cand)
        if mode is ReplacementMode.UNKNOWN_WORD and count != 0:
            continue
        if mode is ReplacementMode.KNOWN_WORD and count <= known_threshold:
            continue
        survivors.append(cand)
    if not survivors:
        return None
    best = survivors[0]
    best_dist = levenshtein(word, best)
    for cand in survivors[1:]:
        dist = levenshtein(word, cand)
        if dist > best_dist or (dist == best_dist and cand < best):
            best, best_dist = cand, dist
    return best

"""Bundled synthetic dialogue corpus.

The generator builds topic-coherent dialogues whose responses echo words
from their context, so a lexical-overlap scorer ranks the gold response
well on clean data and degrades as contexts are corrupted. Every
generated content word gets two synonym candidates: a variant that never
occurs in any corpus (for unknown-word replacement) and a high-frequency
filler (for the known-word control).

Word shapes: topic words look like t12w3 (staged dialogues use private
pools shaped like s00042p3), fillers like f7. Unknown variants append
"zz", which no generated word otherwise ends with.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Dialogue, Utterance
from .jsonl import derive_seed
from .lexicon import SynonymLexicon

TOPIC_COUNT = 60
TOPIC_POOL = 12
FILLER_COUNT = 20

_FILLERS = [f"f{i}" for i in range(FILLER_COUNT)]


@dataclass(frozen=True)
class SynthSpec:
    dialogues: int
    seed: int = 0
    prefix: str = "d"
    min_utterances: int = 2
    max_utterances: int = 6


def _topic_pool(topic: int) -> list[str]:
    return [f"t{topic}w{j}" for j in range(TOPIC_POOL)]


def _utterance(tokens: list[str], rng: random.Random) -> Utterance:
    body = list(tokens)
    rng.shuffle(body)
    return Utterance.from_text(" ".join(body) + " .")


def generate_dialogues(spec: SynthSpec) -> list[Dialogue]:
    """Topic-coherent dialogues of 2..6 utterances.

    The opening utterance introduces six topic words; every later
    utterance echoes four topic words already on the table and adds two
    more, so each turn is a strong lexical match for its context.
    """
    dialogues: list[Dialogue] = []
    for i in range(spec.dialogues):
        rng = random.Random(derive_seed(spec.seed, spec.prefix, i))
        topic = rng.randrange(TOPIC_COUNT)
        pool = _topic_pool(topic)
        n_utts = rng.randint(spec.min_utterances, spec.max_utterances)
        mentioned: list[str] = []
        utterances: list[Utterance] = []
        for j in range(n_utts):
            if j == 0:
                topic_words = rng.sample(pool, 6)
            else:
                echo = rng.sample(mentioned, min(4, len(mentioned)))
                topic_words = echo + rng.sample(pool, 2)
            fillers = rng.sample(_FILLERS, 4)
            utterances.append(_utterance(topic_words + fillers, rng))
            for w in topic_words:
                if w not in mentioned:
                    mentioned.append(w)
        dialogues.append(Dialogue(id=f"{spec.prefix}{i:05d}", utterances=tuple(utterances)))
    return dialogues


def generate_staged_dialogues(n: int, seed: int = 0, prefix: str = "s") -> list[Dialogue]:
    """Seven-utterance dialogues whose closing turn takes exactly one word
    from each earlier turn.

    Turn j introduces a private pair of topic words; the final utterance
    echoes one word per turn, so deleting leading turns removes matching
    words one by one. Built for context-deletion experiments on six-turn
    contexts.
    """
    dialogues: list[Dialogue] = []
    for i in range(n):
        rng = random.Random(derive_seed(seed, prefix, i))
        # Private per-dialogue words: responses from other dialogues then
        # overlap a context only through fillers, never through topic words,
        # which keeps distractor scores well below the gold response until
        # deletion has removed most of the genuine matches.
        pool = [f"{prefix}{i:05d}p{j}" for j in range(TOPIC_POOL)]
        utterances: list[Utterance] = []
        echoes: list[str] = []
        for j in range(6):
            pair = [pool[2 * j], pool[2 * j + 1]]
            fillers = rng.sample(_FILLERS, 6)
            utterances.append(_utterance(pair + fillers, rng))
            echoes.append(pair[rng.randrange(2)])
        closing = echoes + rng.sample(_FILLERS, 3)
        utterances.append(_utterance(closing, rng))
        dialogues.append(Dialogue(id=f"{prefix}{i:05d}", utterances=tuple(utterances)))
    return dialogues


def unknown_variant(word: str) -> str:
    return word + "zz"


def known_variant(word: str) -> str:
    """A frequent filler differing from the word itself."""
    pick = _FILLERS[derive_seed("kw-syn", word) % FILLER_COUNT]
    if pick == word:
        pick = _FILLERS[(derive_seed("kw-syn", word) + 1) % FILLER_COUNT]
    return pick


def build_synthetic_lexicon(corpora: list[list[Dialogue]]) -> SynonymLexicon:
    """One entry per content word across the given corpora: an unseen
    variant plus a frequent filler. Punctuation gets no entry."""
    words: set[str] = set()
    for dialogues in corpora:
        for dlg in dialogues:
            for utt in dlg.utterances:
                words.update(t for t in utt.tokens if t != ".")
    entries = {w: (unknown_variant(w), known_variant(w)) for w in sorted(words)}
    return SynonymLexicon(entries=entries)

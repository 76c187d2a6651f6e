"""Dialogue corpus model: utterances, ranking instances, candidate sets.

A dialogue with n utterances expands into n-1 ranking instances: the
instance at turn j+1 pairs context u_1..u_j with response u_{j+1}. Each
instance later receives a candidate set of k responses (one gold, k-1
negatives drawn from other instances) for recall-at-1 evaluation.
"""

from __future__ import annotations

import random
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .errors import SchemaError
from .jsonl import derive_seed, read_records, write_records


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Split on whitespace, then peel leading/trailing punctuation into
    separate tokens. No case folding. Interior punctuation (contractions,
    hyphenated compounds) stays attached.

    Joining the result with single spaces re-tokenizes to the same list.
    """
    tokens: list[str] = []
    for chunk in text.split():
        i, j = 0, len(chunk)
        lead: list[str] = []
        trail: list[str] = []
        while i < j and _is_punct(chunk[i]):
            lead.append(chunk[i])
            i += 1
        while j > i and _is_punct(chunk[j - 1]):
            trail.append(chunk[j - 1])
            j -= 1
        tokens.extend(lead)
        if i < j:
            tokens.append(chunk[i:j])
        tokens.extend(reversed(trail))
    return tokens


@dataclass(frozen=True)
class Utterance:
    text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> "Utterance":
        toks = tokenize(text)
        if not toks:
            raise SchemaError("utterance text has no tokens")
        return cls(text=text, tokens=tuple(toks))

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Utterance":
        return cls(text=" ".join(tokens), tokens=tuple(tokens))


@dataclass(frozen=True)
class Dialogue:
    id: str
    utterances: tuple[Utterance, ...]

    def __post_init__(self) -> None:
        if len(self.utterances) < 2:
            raise SchemaError(f"dialogue {self.id!r} needs at least 2 utterances")


@dataclass
class Provenance:
    source_dialogue_id: str
    response_turn_index: int
    shift_tag: str = "source"
    replaced_count: int = 0
    deleted_count: int = 0

    def to_record(self) -> dict[str, Any]:
        return {
            "source_dialogue_id": self.source_dialogue_id,
            "response_turn_index": self.response_turn_index,
            "shift_tag": self.shift_tag,
            "replaced_count": self.replaced_count,
            "deleted_count": self.deleted_count,
        }


@dataclass
class Instance:
    id: str
    context: tuple[Utterance, ...]
    response: Utterance
    provenance: Provenance

    def context_tokens(self) -> list[str]:
        out: list[str] = []
        for utt in self.context:
            out.extend(utt.tokens)
        return out

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "context": [u.text for u in self.context],
            "response": self.response.text,
            "provenance": self.provenance.to_record(),
        }


@dataclass
class CandidateSet:
    instance_id: str
    candidates: tuple[Utterance, ...]
    gold_index: int

    def __post_init__(self) -> None:
        if len(self.candidates) < 2:
            raise SchemaError(
                f"candidate set {self.instance_id!r} needs at least 2 candidates"
            )
        if not 0 <= self.gold_index < len(self.candidates):
            raise SchemaError(
                f"candidate set {self.instance_id!r}: gold index {self.gold_index} "
                f"out of range for {len(self.candidates)} candidates"
            )

    def to_record(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "candidates": [c.text for c in self.candidates],
            "gold_index": self.gold_index,
        }


# ===== Loading =====


def load_dialogues(path: str | Path) -> list[Dialogue]:
    """Read dialogues from a JSONL file of {"id", "utterances"} records."""
    dialogues: list[Dialogue] = []
    seen: set[str] = set()
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        did = record.get("id")
        if not isinstance(did, str) or not did:
            raise SchemaError(f"{where}: missing or empty 'id'")
        if did in seen:
            raise SchemaError(f"{where}: duplicate dialogue id {did!r}")
        seen.add(did)
        utts = record.get("utterances")
        if not isinstance(utts, list):
            raise SchemaError(f"{where}: missing 'utterances' list")
        if len(utts) < 2:
            raise SchemaError(f"{where}: dialogue {did!r} has fewer than 2 utterances")
        parsed = []
        for pos, text in enumerate(utts):
            if not isinstance(text, str) or not tokenize(text):
                raise SchemaError(f"{where}: utterance {pos} is not non-blank text")
            parsed.append(Utterance.from_text(text))
        dialogues.append(Dialogue(id=did, utterances=tuple(parsed)))
    return dialogues


def _provenance_from_record(rec: dict[str, Any], where: str) -> Provenance:
    required = {
        "source_dialogue_id": str,
        "response_turn_index": int,
        "shift_tag": str,
        "replaced_count": int,
        "deleted_count": int,
    }
    for key, typ in required.items():
        if not isinstance(rec.get(key), typ) or isinstance(rec.get(key), bool):
            raise SchemaError(f"{where}: provenance field {key!r} missing or mistyped")
    return Provenance(**{k: rec[k] for k in required})


def load_instances(path: str | Path) -> list[Instance]:
    instances: list[Instance] = []
    seen: set[str] = set()
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        iid = record.get("id")
        if not isinstance(iid, str) or not iid:
            raise SchemaError(f"{where}: missing or empty 'id'")
        if iid in seen:
            raise SchemaError(f"{where}: duplicate instance id {iid!r}")
        seen.add(iid)
        context = record.get("context")
        response = record.get("response")
        prov = record.get("provenance")
        if not isinstance(context, list) or not context:
            raise SchemaError(f"{where}: 'context' must be a non-empty list")
        if not isinstance(response, str):
            raise SchemaError(f"{where}: missing 'response' text")
        if not isinstance(prov, dict):
            raise SchemaError(f"{where}: missing 'provenance' object")
        try:
            ctx = tuple(Utterance.from_text(t) for t in context)
            resp = Utterance.from_text(response)
        except (SchemaError, TypeError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        instances.append(
            Instance(
                id=iid,
                context=ctx,
                response=resp,
                provenance=_provenance_from_record(prov, where),
            )
        )
    return instances


def write_instances(path: str | Path, instances: list[Instance]) -> None:
    write_records(path, (inst.to_record() for inst in instances))


def load_candidate_sets(path: str | Path, k: int | None = None) -> list[CandidateSet]:
    sets: list[CandidateSet] = []
    seen: set[str] = set()
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        iid = record.get("instance_id")
        cands = record.get("candidates")
        gold = record.get("gold_index")
        if not isinstance(iid, str) or not iid:
            raise SchemaError(f"{where}: missing 'instance_id'")
        if iid in seen:
            raise SchemaError(f"{where}: duplicate instance id {iid!r}")
        seen.add(iid)
        if not isinstance(cands, list) or not all(isinstance(c, str) for c in cands):
            raise SchemaError(f"{where}: 'candidates' must be a list of strings")
        if k is not None and len(cands) != k:
            raise SchemaError(f"{where}: expected {k} candidates, found {len(cands)}")
        if not isinstance(gold, int) or isinstance(gold, bool) or not 0 <= gold < len(cands):
            raise SchemaError(f"{where}: 'gold_index' out of range")
        sets.append(
            CandidateSet(
                instance_id=iid,
                candidates=tuple(Utterance.from_text(c) for c in cands),
                gold_index=gold,
            )
        )
    return sets


def write_candidate_sets(path: str | Path, sets: list[CandidateSet]) -> None:
    write_records(path, (cs.to_record() for cs in sets))


# ===== Operations =====


def expand_instances(dialogues: list[Dialogue]) -> list[Instance]:
    """Expand each n-utterance dialogue into n-1 context/response instances."""
    instances: list[Instance] = []
    for dlg in dialogues:
        for j in range(1, len(dlg.utterances)):
            turn = j + 1  # 1-based position of the response in the dialogue
            instances.append(
                Instance(
                    id=f"{dlg.id}:{turn}",
                    context=dlg.utterances[:j],
                    response=dlg.utterances[j],
                    provenance=Provenance(
                        source_dialogue_id=dlg.id,
                        response_turn_index=turn,
                    ),
                )
            )
    return instances


def filter_by_context_length(instances: list[Instance], turns: int) -> list[Instance]:
    """Keep instances whose context has exactly `turns` utterances."""
    if turns < 1:
        raise ValueError(f"turns must be >= 1, got {turns}")
    return [inst for inst in instances if len(inst.context) == turns]


def build_candidate_sets(
    instances: list[Instance], k: int = 10, seed: int = 0
) -> list[CandidateSet]:
    """Attach k response candidates to every instance.

    The gold response lands at a seeded-random index; the k-1 negatives are
    sampled uniformly without replacement from the other instances'
    responses, skipping any response text equal to the gold. Duplicate
    negative texts may appear only when they come from distinct instances.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    distinct = {inst.response.text for inst in instances}
    if len(distinct) < k:
        raise SchemaError(
            f"need at least {k} distinct response texts to build candidate sets, "
            f"found {len(distinct)}"
        )
    out: list[CandidateSet] = []
    for idx, inst in enumerate(instances):
        pool = [
            j
            for j in range(len(instances))
            if j != idx and instances[j].response.text != inst.response.text
        ]
        if len(pool) < k - 1:
            raise SchemaError(
                f"instance {inst.id!r}: only {len(pool)} usable negatives, need {k - 1}"
            )
        rng = random.Random(derive_seed(seed, inst.id, "candidates"))
        negatives = [instances[j].response for j in rng.sample(pool, k - 1)]
        gold_index = rng.randrange(k)
        candidates = negatives[:gold_index] + [inst.response] + negatives[gold_index:]
        out.append(
            CandidateSet(instance_id=inst.id, candidates=tuple(candidates), gold_index=gold_index)
        )
    return out


def copy_with_tag(instance: Instance, shift_tag: str) -> Instance:
    """Shallow copy with a new provenance shift tag."""
    prov = replace(instance.provenance, shift_tag=shift_tag)
    return Instance(
        id=instance.id, context=instance.context, response=instance.response, provenance=prov
    )

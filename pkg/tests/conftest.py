"""Shared builders for the test suite."""

from __future__ import annotations

from dialshift.corpus import CandidateSet, Dialogue, Instance, Provenance, Utterance


def utt(text: str) -> Utterance:
    return Utterance.from_text(text)


def make_dialogue(dialogue_id: str, texts: list[str]) -> Dialogue:
    return Dialogue(id=dialogue_id, utterances=tuple(utt(t) for t in texts))


def make_instance(
    instance_id: str,
    context_texts: list[str],
    response_text: str,
    shift_tag: str = "source",
) -> Instance:
    return Instance(
        id=instance_id,
        context=tuple(utt(t) for t in context_texts),
        response=utt(response_text),
        provenance=Provenance(
            source_dialogue_id=instance_id.split(":")[0],
            response_turn_index=len(context_texts) + 1,
            shift_tag=shift_tag,
        ),
    )


def make_candidate_set(
    instance_id: str, candidate_texts: list[str], gold_index: int
) -> CandidateSet:
    return CandidateSet(
        instance_id=instance_id,
        candidates=tuple(utt(t) for t in candidate_texts),
        gold_index=gold_index,
    )

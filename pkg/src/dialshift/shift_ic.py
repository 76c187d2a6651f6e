"""Context-deletion shifts and genuinely short control sets.

Incomplete-context shifting removes a prefix of the context utterances,
leaving the utterances nearest the response untouched. Ratios are exact
fractions k/n of a homogeneous context length n, so every instance in a
run loses the same number of turns. The matching control keeps genuine
instances whose contexts were short to begin with.
"""

from __future__ import annotations

from dataclasses import replace as dc_replace
from fractions import Fraction

from .corpus import Instance, copy_with_tag
from .errors import ConfigError
from .shift_uw import ShiftStats

MAX_SR_TURNS = 6


def parse_ic_ratio(text: str) -> Fraction:
    """Parse a deletion ratio written as a fraction, e.g. '2/6'."""
    try:
        ratio = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad deletion ratio {text!r}: {exc}") from exc
    if not 0 <= ratio < 1:
        raise ConfigError(f"deletion ratio must be in [0, 1), got {text!r}")
    return ratio


def apply_ic(instance: Instance, delete_count: int, shift_tag: str | None = None) -> Instance:
    """Delete the first `delete_count` context utterances.

    The remaining context is exactly a suffix of the original, so deleting
    j turns and then i more equals deleting i+j at once.
    """
    if delete_count < 0:
        raise ConfigError(f"delete_count must be >= 0, got {delete_count}")
    if delete_count >= len(instance.context):
        raise ConfigError(
            f"instance {instance.id!r}: cannot delete {delete_count} of "
            f"{len(instance.context)} context utterances"
        )
    tag = shift_tag if shift_tag is not None else f"ic:d={delete_count}"
    prov = dc_replace(instance.provenance, shift_tag=tag, deleted_count=delete_count)
    return Instance(
        id=instance.id,
        context=instance.context[delete_count:],
        response=instance.response,
        provenance=prov,
    )


def shift_dataset_ic(
    instances: list[Instance], ratio: Fraction
) -> tuple[list[Instance], ShiftStats]:
    """Delete round(ratio * n) leading turns from every instance.

    All contexts must share one length n and the ratio must be an exact
    multiple of 1/n; both conditions are validated up front.
    """
    if not instances:
        return [], ShiftStats(kept=0, dropped=0, avg_replacements=0.0)
    lengths = {len(inst.context) for inst in instances}
    if len(lengths) > 1:
        raise ConfigError(
            f"context lengths are mixed ({sorted(lengths)}); filter to one "
            "length before deletion shifting"
        )
    n = lengths.pop()
    scaled = ratio * n
    if scaled.denominator != 1:
        raise ConfigError(
            f"ratio {ratio} is not a multiple of 1/{n} for {n}-turn contexts"
        )
    delete_count = int(scaled)
    if delete_count >= n:
        raise ConfigError(f"ratio {ratio} would delete all {n} context turns")
    tag = f"ic:r={delete_count}/{n}"
    shifted = [apply_ic(inst, delete_count, shift_tag=tag) for inst in instances]
    return shifted, ShiftStats(kept=len(shifted), dropped=0, avg_replacements=0.0)


def build_sr_sets(instances: list[Instance], turns: int) -> list[Instance]:
    """Genuine short-context control: keep instances whose context really
    has `turns` utterances and tag them sr:t=<turns>."""
    if not 1 <= turns <= MAX_SR_TURNS:
        raise ConfigError(f"turns must be in 1..{MAX_SR_TURNS}, got {turns}")
    tag = f"sr:t={turns}"
    return [
        copy_with_tag(inst, tag) for inst in instances if len(inst.context) == turns
    ]

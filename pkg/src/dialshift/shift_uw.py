"""Word-replacement shifts over instance contexts.

Two flavours share the machinery: unknown-word replacement swaps context
tokens for synonyms never seen in training, and known-word replacement
(the control) swaps them for high-frequency synonyms. Responses are never
touched. Ratio mode walks token positions in seeded-random order until a
target count of replacements lands, dropping the instance when the target
cannot be met. Bucket mode replaces every eligible position inside one
importance quintile and keeps the instance when at least one replacement
lands.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace as dc_replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Optional

from .corpus import Instance, Provenance, Utterance
from .errors import ConfigError
from .importance import BUCKET_COUNT, ImportanceMap, bucketize
from .jsonl import derive_seed
from .lexicon import (
    DEFAULT_KNOWN_THRESHOLD,
    ReplacementMode,
    SynonymLexicon,
    VocabStats,
    select_replacement,
)

BUCKET_RATIO = 0.20


@dataclass(frozen=True)
class UwConfig:
    mode: ReplacementMode
    ratio: float
    bucket: Optional[int] = None
    seed: int = 0
    known_threshold: int = DEFAULT_KNOWN_THRESHOLD

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio <= 1.0:
            raise ConfigError(f"ratio must be in (0, 1], got {self.ratio}")
        if self.bucket is not None:
            if not 1 <= self.bucket <= BUCKET_COUNT:
                raise ConfigError(f"bucket must be in 1..{BUCKET_COUNT}, got {self.bucket}")
            if self.ratio != BUCKET_RATIO:
                raise ConfigError(
                    f"bucket mode fixes the ratio at {BUCKET_RATIO}, got {self.ratio}"
                )

    def shift_tag(self) -> str:
        prefix = "uw" if self.mode is ReplacementMode.UNKNOWN_WORD else "kw"
        if self.bucket is not None:
            return f"{prefix}:b={self.bucket}"
        return f"{prefix}:r={self.ratio:.2f}"


@dataclass
class ShiftStats:
    kept: int
    dropped: int
    avg_replacements: float

    def to_record(self) -> dict[str, Any]:
        return {
            "kept": self.kept,
            "dropped": self.dropped,
            "avg_replacements": self.avg_replacements,
        }


def required_targets(instance: Instance, ratio: float) -> int:
    """Number of context tokens to replace: ratio times the context token
    count, rounded half up. Half-up is computed in decimal so values such
    as 0.35 * 10 land on 4 rather than drifting under binary floats."""
    total = len(instance.context_tokens())
    product = Decimal(str(ratio)) * Decimal(total)
    return int(product.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def _rebuild(
    instance: Instance,
    per_utt_tokens: list[list[str]],
    touched: set[int],
    shift_tag: str,
    replaced_count: int,
) -> Instance:
    context = []
    for ui, utt in enumerate(instance.context):
        if ui in touched:
            context.append(Utterance.from_tokens(per_utt_tokens[ui]))
        else:
            context.append(utt)
    prov = dc_replace(
        instance.provenance, shift_tag=shift_tag, replaced_count=replaced_count
    )
    return Instance(
        id=instance.id,
        context=tuple(context),
        response=instance.response,
        provenance=prov,
    )


def apply_uw(
    instance: Instance,
    config: UwConfig,
    lexicon: SynonymLexicon,
    stats: VocabStats,
    importance: Optional[list[float]] = None,
) -> Optional[Instance]:
    """Shift one instance; returns None when the instance must be dropped.

    Ratio mode: positions are visited in an order drawn from config.seed;
    each position gets one replacement attempt; the instance survives only
    when the required target count is reached (a zero target also drops).
    Bucket mode: all positions inside the requested importance quintile are
    attempted in position order; one success suffices to keep the instance.
    """
    per_utt_tokens = [list(u.tokens) for u in instance.context]
    flat: list[tuple[int, int]] = []
    for ui, toks in enumerate(per_utt_tokens):
        for ti in range(len(toks)):
            flat.append((ui, ti))
    total = len(flat)

    if config.bucket is None:
        need = required_targets(instance, config.ratio)
        if need == 0:
            return None
        order = list(range(total))
        random.Random(config.seed).shuffle(order)
        eligible = order
        stop_at = need
    else:
        if importance is None:
            raise ConfigError("bucket mode needs importance scores")
        if len(importance) != total:
            raise ConfigError(
                f"instance {instance.id!r}: {len(importance)} importance scores "
                f"for {total} context tokens"
            )
        eligible = sorted(bucketize(importance, config.bucket))
        stop_at = None

    touched: set[int] = set()
    replaced = 0
    for pos in eligible:
        if stop_at is not None and replaced == stop_at:
            break
        ui, ti = flat[pos]
        replacement = select_replacement(
            per_utt_tokens[ui][ti],
            lexicon,
            stats,
            config.mode,
            known_threshold=config.known_threshold,
        )
        if replacement is None:
            continue
        per_utt_tokens[ui][ti] = replacement
        touched.add(ui)
        replaced += 1

    if config.bucket is None:
        if replaced < stop_at:
            return None
    elif replaced == 0:
        return None
    return _rebuild(instance, per_utt_tokens, touched, config.shift_tag(), replaced)


def _instance_config(config: UwConfig, instance_id: str) -> UwConfig:
    return dc_replace(config, seed=derive_seed(config.seed, instance_id, "uw"))


def shift_dataset_uw(
    instances: list[Instance],
    config: UwConfig,
    lexicon: SynonymLexicon,
    stats: VocabStats,
    importance: Optional[ImportanceMap] = None,
    intersect_buckets: bool = False,
) -> tuple[list[Instance], ShiftStats]:
    """Shift a whole instance list; per-instance seeds derive from
    (config.seed, instance id) so output is independent of chunking.

    With intersect_buckets, bucket mode restricts the output to instances
    that survive every one of the five buckets, so per-bucket metric rows
    describe the same population.
    """
    if config.bucket is not None and importance is None:
        raise ConfigError("bucket mode needs an importance map")

    survivors_everywhere: Optional[set[str]] = None
    if intersect_buckets:
        if config.bucket is None:
            raise ConfigError("--intersect-buckets only applies to bucket mode")
        survivors_everywhere = set(inst.id for inst in instances)
        for b in range(1, BUCKET_COUNT + 1):
            trial = dc_replace(config, bucket=b)
            kept_ids = set()
            for inst in instances:
                shifted = apply_uw(
                    inst,
                    _instance_config(trial, inst.id),
                    lexicon,
                    stats,
                    importance=importance.for_instance(inst),
                )
                if shifted is not None:
                    kept_ids.add(inst.id)
            survivors_everywhere &= kept_ids

    kept: list[Instance] = []
    dropped = 0
    replaced_total = 0
    for inst in instances:
        if survivors_everywhere is not None and inst.id not in survivors_everywhere:
            dropped += 1
            continue
        scores = importance.for_instance(inst) if config.bucket is not None else None
        shifted = apply_uw(
            inst, _instance_config(config, inst.id), lexicon, stats, importance=scores
        )
        if shifted is None:
            dropped += 1
            continue
        kept.append(shifted)
        replaced_total += shifted.provenance.replaced_count
    avg = replaced_total / len(kept) if kept else 0.0
    return kept, ShiftStats(kept=len(kept), dropped=dropped, avg_replacements=avg)

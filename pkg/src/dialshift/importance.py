"""Per-token importance scores and quintile bucketing.

Scores live in [0, 1], one per context token of an instance. When no
externally computed scores are available, a rarity fallback derived from
training counts stands in: rare tokens score high, frequent tokens low,
unseen tokens highest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Instance
from .errors import SchemaError
from .jsonl import read_records, write_records
from .lexicon import VocabStats

BUCKET_COUNT = 5
BUCKET_WIDTH = 100 // BUCKET_COUNT


@dataclass
class ImportanceMap:
    """Instance id to score list, one score per context token."""

    scores: dict[str, list[float]] = field(default_factory=dict)

    def for_instance(self, instance: Instance) -> list[float]:
        got = self.scores.get(instance.id)
        if got is None:
            raise SchemaError(f"no importance scores for instance {instance.id!r}")
        expected = len(instance.context_tokens())
        if len(got) != expected:
            raise SchemaError(
                f"instance {instance.id!r}: {len(got)} scores for {expected} context tokens"
            )
        return got


def load_importance(path: str | Path) -> ImportanceMap:
    scores: dict[str, list[float]] = {}
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        iid = record.get("id")
        vals = record.get("scores")
        if not isinstance(iid, str) or not iid:
            raise SchemaError(f"{where}: missing 'id'")
        if iid in scores:
            raise SchemaError(f"{where}: duplicate id {iid!r}")
        if not isinstance(vals, list) or not vals:
            raise SchemaError(f"{where}: 'scores' must be a non-empty list")
        parsed: list[float] = []
        for pos, v in enumerate(vals):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{where}: score {pos} is not a number")
            v = float(v)
            if not 0.0 <= v <= 1.0:
                raise SchemaError(f"{where}: score {pos} = {v} outside [0, 1]")
            parsed.append(v)
        scores[iid] = parsed
    return ImportanceMap(scores=scores)


def write_importance(path: str | Path, imap: ImportanceMap) -> None:
    write_records(
        path, ({"id": iid, "scores": vals} for iid, vals in imap.scores.items())
    )


def fallback_importance(instance: Instance, stats: VocabStats) -> list[float]:
    """Rarity proxy: score = 1 - count(token)/max_count, clamped to [0, 1].

    Tokens absent from the training counts score 1.0.
    """
    peak = stats.max_count()
    out: list[float] = []
    for token in instance.context_tokens():
        count = stats.count(token)
        score = 1.0 - count / peak
        out.append(min(1.0, max(0.0, score)))
    return out


def fallback_importance_map(instances: list[Instance], stats: VocabStats) -> ImportanceMap:
    return ImportanceMap(
        scores={inst.id: fallback_importance(inst, stats) for inst in instances}
    )


def bucket_bounds(bucket: int) -> tuple[int, int]:
    """Percentile interval [lo, hi) covered by a bucket, 1-based buckets."""
    if not 1 <= bucket <= BUCKET_COUNT:
        raise ValueError(f"bucket must be in 1..{BUCKET_COUNT}, got {bucket}")
    return BUCKET_WIDTH * (bucket - 1), BUCKET_WIDTH * bucket


def bucketize(scores: list[float], bucket: int) -> set[int]:
    """Positions whose rank percentile falls inside the bucket's interval.

    Ranks come from a stable ascending sort on (score, position), so equal
    scores resolve by position. Bucket 1 holds the least important fifth,
    bucket 5 the most important. Over all five buckets the positions
    partition exactly and bucket sizes differ by at most one.
    """
    lo, hi = bucket_bounds(bucket)
    n = len(scores)
    if n == 0:
        return set()
    order = sorted(range(n), key=lambda i: (scores[i], i))
    selected: set[int] = set()
    for rank, pos in enumerate(order):
        pct = 100.0 * rank / n
        if lo <= pct < hi:
            selected.add(pos)
    return selected

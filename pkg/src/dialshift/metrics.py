"""Ranking accuracy, Brier score, and expected calibration error.

All three consume probability vectors over a candidate set plus the gold
index. Recall@1 counts a hit only when the gold candidate holds the
lowest-index maximum, so exact ties never inflate accuracy. ECE bins
predictions by top-1 confidence into equal-width bins over [0, 1] (last
bin closed on the right) and sums bin-weighted |accuracy - confidence|
gaps; a per-candidate variant instead bins every candidate probability
against its binary gold label.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, Union

from .corpus import CandidateSet
from .errors import ConfigError, SchemaError
from .harness import AggregatedPrediction, ScoreVector
from .jsonl import read_records, write_records

ECE_MODES = ("top1", "percandidate")


@dataclass(frozen=True)
class EceBinning:
    bins: int = 10
    mode: str = "top1"

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ConfigError(f"bins must be >= 1, got {self.bins}")
        if self.mode not in ECE_MODES:
            raise ConfigError(f"mode must be one of {ECE_MODES}, got {self.mode!r}")

    def edges(self) -> list[float]:
        return [j / self.bins for j in range(self.bins + 1)]


@dataclass
class MetricsRow:
    method: str
    shift_tag: str
    n: int
    acc: float
    brier: float
    ece: float

    def to_record(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "shift_tag": self.shift_tag,
            "n": self.n,
            "acc": self.acc,
            "brier": self.brier,
            "ece": self.ece,
        }


def _check_probs(probs: Sequence[float], gold_index: int) -> list[float]:
    values = [float(p) for p in probs]
    if not values:
        raise ValueError("empty probability vector")
    if not 0 <= gold_index < len(values):
        raise ValueError(f"gold index {gold_index} out of range for {len(values)} candidates")
    return values


def recall_at_1(probs: Sequence[float], gold_index: int) -> int:
    """1 when the gold candidate is the argmax; ties break to the lowest
    index, so gold only wins a tie it leads."""
    values = _check_probs(probs, gold_index)
    return int(values.index(max(values)) == gold_index)


def brier(probs: Sequence[float], gold_index: int) -> float:
    """Squared error against the one-hot gold vector, summed over candidates."""
    values = _check_probs(probs, gold_index)
    return sum(
        (p - (1.0 if i == gold_index else 0.0)) ** 2 for i, p in enumerate(values)
    )


def _bin_index(confidence: float, bins: int) -> int:
    for j in range(1, bins):
        if confidence < j / bins:
            return j - 1
    return bins - 1


def _binned_gap(pairs: Sequence[tuple[float, float]], bins: int) -> float:
    """Weighted |mean outcome - mean confidence| over equal-width bins.

    `pairs` holds (confidence, outcome) rows; empty bins contribute zero.
    """
    if not pairs:
        raise ValueError("cannot bin an empty prediction set")
    count = [0] * bins
    conf_sum = [0.0] * bins
    outcome_sum = [0.0] * bins
    for confidence, outcome in pairs:
        b = _bin_index(confidence, bins)
        count[b] += 1
        conf_sum[b] += confidence
        outcome_sum[b] += outcome
    total = len(pairs)
    gap = 0.0
    for b in range(bins):
        if count[b] == 0:
            continue
        acc_b = outcome_sum[b] / count[b]
        conf_b = conf_sum[b] / count[b]
        gap += (count[b] / total) * abs(acc_b - conf_b)
    return gap


def ece(
    predictions: Sequence[tuple[Sequence[float], int]],
    binning: EceBinning = EceBinning(),
) -> float:
    """Expected calibration error over (probs, gold_index) pairs."""
    pairs: list[tuple[float, float]] = []
    if binning.mode == "top1":
        for probs, gold in predictions:
            values = _check_probs(probs, gold)
            pairs.append((max(values), float(recall_at_1(values, gold))))
    else:
        for probs, gold in predictions:
            values = _check_probs(probs, gold)
            for i, p in enumerate(values):
                pairs.append((p, 1.0 if i == gold else 0.0))
    return _binned_gap(pairs, binning.bins)


Prediction = Union[ScoreVector, AggregatedPrediction]


def prediction_probs(prediction: Prediction) -> list[float]:
    if isinstance(prediction, AggregatedPrediction):
        return prediction.mean_probs
    return prediction.probs


def evaluate(
    predictions: Sequence[Prediction],
    candidate_sets: Sequence[CandidateSet],
    method: str,
    shift_tag: str,
    binning: EceBinning = EceBinning(),
) -> MetricsRow:
    """Join predictions with their candidate sets and compute one row of
    accuracy, mean Brier score, and ECE."""
    if not predictions:
        raise SchemaError("no predictions to evaluate")
    gold_by_id: dict[str, int] = {}
    for cs in candidate_sets:
        if cs.instance_id in gold_by_id:
            raise SchemaError(f"duplicate candidate set for instance {cs.instance_id!r}")
        gold_by_id[cs.instance_id] = cs.gold_index
    seen: set[str] = set()
    scored: list[tuple[list[float], int]] = []
    for pred in predictions:
        if pred.instance_id in seen:
            raise SchemaError(f"duplicate prediction for instance {pred.instance_id!r}")
        seen.add(pred.instance_id)
        gold = gold_by_id.get(pred.instance_id)
        if gold is None:
            raise SchemaError(f"no candidate set for instance {pred.instance_id!r}")
        scored.append((prediction_probs(pred), gold))
    n = len(scored)
    acc = sum(recall_at_1(p, g) for p, g in scored) / n
    mean_brier = sum(brier(p, g) for p, g in scored) / n
    return MetricsRow(
        method=method,
        shift_tag=shift_tag,
        n=n,
        acc=acc,
        brier=mean_brier,
        ece=ece(scored, binning),
    )


# ===== Metric row files =====


def load_metric_rows(path: str | Path) -> list[MetricsRow]:
    rows: list[MetricsRow] = []
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        method = record.get("method")
        shift_tag = record.get("shift_tag")
        n = record.get("n")
        if not isinstance(method, str) or not method:
            raise SchemaError(f"{where}: missing 'method'")
        if not isinstance(shift_tag, str) or not shift_tag:
            raise SchemaError(f"{where}: missing 'shift_tag'")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise SchemaError(f"{where}: 'n' must be a positive integer")
        metrics: dict[str, float] = {}
        for key in ("acc", "brier", "ece"):
            v = record.get(key)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{where}: missing metric {key!r}")
            metrics[key] = float(v)
        rows.append(MetricsRow(method=method, shift_tag=shift_tag, n=n, **metrics))
    return rows


def write_metric_rows(path: str | Path, rows: Sequence[MetricsRow]) -> None:
    write_records(path, (row.to_record() for row in rows))

"""Scoring harness: candidate scoring, multi-pass and ensemble aggregation.

Scorers assign one real-valued score per (context, candidate) pair; the
harness stacks those into logit vectors, converts to probabilities with a
softmax, and aggregates repeated stochastic passes or ensemble members by
averaging in probability space. Prediction files persist logits only;
probabilities are always recomputed on load.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Protocol, Sequence

import numpy as np

from .corpus import CandidateSet, Utterance
from .errors import SchemaError
from .jsonl import derive_seed, read_records, write_records


def softmax(logits: Sequence[float]) -> list[float]:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return (e / e.sum()).tolist()


@dataclass
class ScoreVector:
    """Logits and derived probabilities for one candidate set.

    method/member/pass_index mirror the optional prediction-file fields
    used to group records before aggregation.
    """

    instance_id: str
    logits: list[float]
    probs: list[float] = field(default_factory=list)
    method: Optional[str] = None
    member: Optional[int] = None
    pass_index: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.logits:
            raise SchemaError(f"instance {self.instance_id!r}: empty logits")
        if not all(math.isfinite(x) for x in self.logits):
            raise SchemaError(f"instance {self.instance_id!r}: non-finite logit")
        if not self.probs:
            self.probs = softmax(self.logits)

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "instance_id": self.instance_id,
            "logits": self.logits,
            "method": self.method or "vanilla",
        }
        if self.member is not None:
            record["member"] = self.member
        if self.pass_index is not None:
            record["pass"] = self.pass_index
        return record


@dataclass
class AggregatedPrediction:
    """Mean and population variance of member probabilities."""

    instance_id: str
    mean_probs: list[float]
    var_probs: list[float]
    n_members: int


class Scorer(Protocol):
    stochastic: bool

    def score(self, context: Sequence[Utterance], candidate: Utterance) -> float: ...

    def reseed(self, seed: int) -> None: ...


def _context_token_set(context: Sequence[Utterance]) -> set[str]:
    out: set[str] = set()
    for utt in context:
        out.update(utt.tokens)
    return out


def _base_token_weight(token: str, spread: float) -> float:
    """Fixed pseudo-random weight in [1 - spread, 1 + spread] derived from
    the token text alone. Every scorer in this family shares these weights,
    so distinct token sets almost never sum to exactly equal scores and
    ranking ties are broken the same way for every method."""
    if spread == 0.0:
        return 1.0
    u = random.Random(derive_seed("overlap-w", token)).random()
    return 1.0 + spread * (2.0 * u - 1.0)


class OverlapScorer:
    """Deterministic toy scorer: weighted token overlap between context and
    candidate, scaled by 1/(1 + |candidate tokens|). With spread 0 every
    weight is 1.0 and the score reduces to plain set-overlap counting."""

    stochastic = False

    def __init__(self, spread: float = 0.25) -> None:
        if not 0 <= spread < 1:
            raise ValueError(f"spread must be in [0, 1), got {spread}")
        self.spread = spread
        self._weights: dict[str, float] = {}

    def _weight(self, token: str) -> float:
        cached = self._weights.get(token)
        if cached is None:
            cached = _base_token_weight(token, self.spread)
            self._weights[token] = cached
        return cached

    def score(self, context: Sequence[Utterance], candidate: Utterance) -> float:
        cand = set(candidate.tokens)
        shared = _context_token_set(context) & cand
        # Summation order must not depend on set iteration order, which
        # varies with per-process string hashing.
        return sum(self._weight(t) for t in sorted(shared)) / (1 + len(cand))

    def reseed(self, seed: int) -> None:
        pass


class NoisyOverlapScorer:
    """Overlap score plus seeded Gaussian noise of configurable magnitude.

    Reseeding resets the noise stream, so repeated passes under the same
    seed reproduce byte-identical logits.
    """

    stochastic = True

    def __init__(self, noise: float = 0.05, seed: int = 0, spread: float = 0.25) -> None:
        if noise < 0:
            raise ValueError(f"noise must be >= 0, got {noise}")
        self.noise = noise
        self._base = OverlapScorer(spread)
        self._rng = random.Random(seed)

    def score(self, context: Sequence[Utterance], candidate: Utterance) -> float:
        return self._base.score(context, candidate) + self._rng.gauss(0.0, self.noise)

    def reseed(self, seed: int) -> None:
        self._rng = random.Random(seed)


class PerturbedOverlapScorer:
    """Deterministic ensemble member: the shared per-token base weights are
    scaled by a member-specific factor in [1 - jitter, 1 + jitter], so each
    member deviates around the same base ranking instead of around flat
    counts."""

    stochastic = False

    def __init__(self, member_seed: int, jitter: float = 0.35, spread: float = 0.25) -> None:
        if not 0 <= jitter < 1:
            raise ValueError(f"jitter must be in [0, 1), got {jitter}")
        if not 0 <= spread < 1:
            raise ValueError(f"spread must be in [0, 1), got {spread}")
        self.member_seed = member_seed
        self.jitter = jitter
        self.spread = spread
        self._weights: dict[str, float] = {}

    def _weight(self, token: str) -> float:
        cached = self._weights.get(token)
        if cached is None:
            u = random.Random(derive_seed(self.member_seed, token, "w")).random()
            factor = 1.0 + self.jitter * (2.0 * u - 1.0)
            cached = _base_token_weight(token, self.spread) * factor
            self._weights[token] = cached
        return cached

    def score(self, context: Sequence[Utterance], candidate: Utterance) -> float:
        cand = set(candidate.tokens)
        shared = _context_token_set(context) & cand
        # Summation order must not depend on set iteration order, which
        # varies with per-process string hashing.
        return sum(self._weight(t) for t in sorted(shared)) / (1 + len(cand))

    def reseed(self, seed: int) -> None:
        pass


def predict_probs(
    scorer: Scorer, candidate_set: CandidateSet, context: Sequence[Utterance]
) -> ScoreVector:
    """Score every candidate and wrap the results as one logit vector."""
    logits: list[float] = []
    for idx, cand in enumerate(candidate_set.candidates):
        value = float(scorer.score(context, cand))
        if not math.isfinite(value):
            raise SchemaError(
                f"instance {candidate_set.instance_id!r}: scorer returned a "
                f"non-finite value for candidate {idx}"
            )
        logits.append(value)
    return ScoreVector(instance_id=candidate_set.instance_id, logits=logits)


def aggregate_probability_vectors(
    instance_id: str, prob_vectors: Sequence[Sequence[float]]
) -> AggregatedPrediction:
    """Mean and population variance over per-member probability vectors."""
    if not prob_vectors:
        raise ValueError(f"instance {instance_id!r}: nothing to aggregate")
    first = list(prob_vectors[0])
    if any(len(v) != len(first) for v in prob_vectors):
        raise ValueError(f"instance {instance_id!r}: ragged probability vectors")
    if all(list(v) == first for v in prob_vectors):
        # Averaging identical vectors must return that vector bit for bit;
        # summing then dividing can drift by an ulp and break the identity.
        return AggregatedPrediction(
            instance_id=instance_id,
            mean_probs=first,
            var_probs=[0.0] * len(first),
            n_members=len(prob_vectors),
        )
    matrix = np.asarray(prob_vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"instance {instance_id!r}: ragged probability vectors")
    return AggregatedPrediction(
        instance_id=instance_id,
        mean_probs=matrix.mean(axis=0).tolist(),
        var_probs=matrix.var(axis=0).tolist(),
        n_members=matrix.shape[0],
    )


def mc_aggregate(
    scorer: Scorer,
    candidate_set: CandidateSet,
    context: Sequence[Utterance],
    n_passes: int,
    seed: int = 0,
) -> AggregatedPrediction:
    """Run n_passes stochastic forward passes and average the probabilities.

    Pass p reseeds the scorer from (seed, instance id, p), so results do
    not depend on the order instances are processed in.
    """
    if n_passes < 1:
        raise ValueError(f"n_passes must be >= 1, got {n_passes}")
    vectors: list[list[float]] = []
    for p in range(n_passes):
        scorer.reseed(derive_seed(seed, candidate_set.instance_id, "pass", p))
        vectors.append(predict_probs(scorer, candidate_set, context).probs)
    return aggregate_probability_vectors(candidate_set.instance_id, vectors)


def ensemble_aggregate(
    scorers: Sequence[Scorer],
    candidate_set: CandidateSet,
    context: Sequence[Utterance],
) -> AggregatedPrediction:
    """Average member probabilities (not logits) across distinct scorers."""
    if not scorers:
        raise ValueError("ensemble needs at least one member")
    vectors = [predict_probs(s, candidate_set, context).probs for s in scorers]
    return aggregate_probability_vectors(candidate_set.instance_id, vectors)


# ===== Prediction files =====


def load_predictions(path: str | Path, k: int | None = None) -> list[ScoreVector]:
    """Read prediction records, recomputing probabilities from logits.

    Records are keyed by (instance_id, member, pass); duplicates and
    inconsistent logit lengths are rejected.
    """
    out: list[ScoreVector] = []
    seen: set[tuple[str, Optional[int], Optional[int]]] = set()
    width = k
    for lineno, record in read_records(path):
        where = f"{path}:{lineno}"
        iid = record.get("instance_id")
        logits = record.get("logits")
        method = record.get("method")
        if not isinstance(iid, str) or not iid:
            raise SchemaError(f"{where}: missing 'instance_id'")
        if not isinstance(logits, list) or not logits:
            raise SchemaError(f"{where}: 'logits' must be a non-empty list")
        values: list[float] = []
        for pos, v in enumerate(logits):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{where}: logit {pos} is not a number")
            v = float(v)
            if not math.isfinite(v):
                raise SchemaError(f"{where}: logit {pos} is not finite")
            values.append(v)
        if width is None:
            width = len(values)
        if len(values) != width:
            raise SchemaError(
                f"{where}: expected {width} logits, found {len(values)}"
            )
        if not isinstance(method, str) or not method:
            raise SchemaError(f"{where}: missing 'method'")
        member = record.get("member")
        pass_index = record.get("pass")
        for name, val in (("member", member), ("pass", pass_index)):
            if val is not None and (isinstance(val, bool) or not isinstance(val, int)):
                raise SchemaError(f"{where}: '{name}' must be an integer")
        key = (iid, member, pass_index)
        if key in seen:
            raise SchemaError(f"{where}: duplicate prediction for {key}")
        seen.add(key)
        out.append(
            ScoreVector(
                instance_id=iid,
                logits=values,
                method=method,
                member=member,
                pass_index=pass_index,
            )
        )
    return out


def write_predictions(path: str | Path, predictions: Sequence[ScoreVector]) -> None:
    write_records(path, (sv.to_record() for sv in predictions))


def group_predictions(
    predictions: Sequence[ScoreVector],
) -> list[AggregatedPrediction]:
    """Collapse multi-member or multi-pass records into one aggregated
    prediction per instance, preserving first-seen instance order."""
    grouped: dict[str, list[ScoreVector]] = {}
    order: list[str] = []
    for sv in predictions:
        if sv.instance_id not in grouped:
            grouped[sv.instance_id] = []
            order.append(sv.instance_id)
        grouped[sv.instance_id].append(sv)
    return [
        aggregate_probability_vectors(iid, [sv.probs for sv in grouped[iid]])
        for iid in order
    ]

"""Post-hoc temperature scaling.

A single scalar T divides every logit before the softmax. T is fit by
golden-section search on mean negative log-likelihood of the gold
candidate over a validation set; dividing by a constant never changes the
argmax, so scaled predictions keep exactly the accuracy of the raw ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, SchemaError
from .harness import ScoreVector, softmax
from .jsonl import atomic_write_text

T_MIN = 0.05
T_MAX = 10.0
FIT_TOLERANCE = 1e-4

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class Temperature:
    value: float
    nll_at_fit: float
    fit_iterations: int

    def to_record(self) -> dict[str, Any]:
        return {"temperature": self.value, "nll": self.nll_at_fit}


def mean_nll(
    predictions: Sequence[ScoreVector], gold_indices: Sequence[int], temperature: float
) -> float:
    """Mean negative log-likelihood of the gold candidates at the given T."""
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    matrix = np.asarray([sv.logits for sv in predictions], dtype=np.float64)
    gold = np.asarray(gold_indices, dtype=np.int64)
    z = matrix / temperature
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(gold)), gold]))


def fit_temperature(
    predictions: Sequence[ScoreVector],
    gold_indices: Sequence[int],
    lo: float = T_MIN,
    hi: float = T_MAX,
    tol: float = FIT_TOLERANCE,
) -> Temperature:
    """Golden-section search for the T minimising validation NLL.

    The search interval shrinks below `tol` before the midpoint is taken;
    when an endpoint beats the interior optimum (NLL monotone over the
    whole range) that endpoint is returned exactly.
    """
    if not predictions:
        raise SchemaError("cannot fit a temperature on an empty prediction set")
    if len(predictions) != len(gold_indices):
        raise SchemaError(
            f"{len(predictions)} predictions but {len(gold_indices)} gold indices"
        )
    for sv, g in zip(predictions, gold_indices):
        if not 0 <= g < len(sv.logits):
            raise SchemaError(f"instance {sv.instance_id!r}: gold index {g} out of range")

    def f(t: float) -> float:
        return mean_nll(predictions, gold_indices, t)

    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while b - a > tol:
        iterations += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    best_t = (a + b) / 2.0
    best_nll = f(best_t)
    # Snap to a bound when the optimum sits there.
    for endpoint in (lo, hi):
        nll = f(endpoint)
        if nll <= best_nll:
            best_t, best_nll = endpoint, nll
    # Scaling must never fit worse than the identity temperature.
    if lo <= 1.0 <= hi:
        identity = f(1.0)
        if identity < best_nll:
            best_t, best_nll = 1.0, identity
    return Temperature(value=best_t, nll_at_fit=best_nll, fit_iterations=iterations)


def apply_temperature(sv: ScoreVector, temperature: float) -> ScoreVector:
    """Divide logits by T and recompute probabilities."""
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    scaled = [x / temperature for x in sv.logits]
    return ScoreVector(
        instance_id=sv.instance_id,
        logits=scaled,
        probs=softmax(scaled),
        method=sv.method,
        member=sv.member,
        pass_index=sv.pass_index,
    )


def write_temperature(path: str | Path, temp: Temperature) -> None:
    atomic_write_text(path, json.dumps(temp.to_record(), sort_keys=True) + "\n")


def load_temperature(path: str | Path) -> Temperature:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    value = payload.get("temperature")
    nll = payload.get("nll")
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
        raise SchemaError(f"{path}: 'temperature' must be a positive number")
    if isinstance(nll, bool) or not isinstance(nll, (int, float)):
        raise SchemaError(f"{path}: missing 'nll'")
    return Temperature(value=float(value), nll_at_fit=float(nll), fit_iterations=0)

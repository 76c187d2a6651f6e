"""Scorers, softmax, multi-pass and ensemble aggregation, prediction files."""

from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialshift.errors import SchemaError
from dialshift.harness import (
    AggregatedPrediction,
    NoisyOverlapScorer,
    OverlapScorer,
    PerturbedOverlapScorer,
    ScoreVector,
    aggregate_probability_vectors,
    ensemble_aggregate,
    group_predictions,
    load_predictions,
    mc_aggregate,
    predict_probs,
    softmax,
    write_predictions,
)
from dialshift.jsonl import derive_seed

from conftest import make_candidate_set, utt


# -------------------------------------------------------------------- softmax


def test_softmax_frozen_example():
    probs = softmax([math.log(2.0), 0.0])
    assert abs(probs[0] - 2.0 / 3.0) < 1e-12
    assert abs(probs[1] - 1.0 / 3.0) < 1e-12


def test_softmax_handles_extreme_logits():
    probs = softmax([1000.0, 0.0, -1000.0])
    assert all(math.isfinite(p) for p in probs)
    assert abs(sum(probs) - 1.0) < 1e-12
    assert probs[0] > 0.999


@settings(max_examples=150, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=12
    ),
    st.floats(min_value=-30, max_value=30, allow_nan=False),
)
def test_softmax_sums_to_one_and_shift_invariant(logits, shift):
    probs = softmax(logits)
    assert abs(sum(probs) - 1.0) < 1e-9
    assert all(p >= 0 for p in probs)
    shifted = softmax([x + shift for x in logits])
    for a, b in zip(probs, shifted):
        assert abs(a - b) < 1e-9


# -------------------------------------------------------------------- scorers


def ctx(*texts: str):
    return tuple(utt(t) for t in texts)


def test_overlap_scorer_spread_zero_is_plain_counting():
    scorer = OverlapScorer(spread=0.0)
    # Context tokens {a, b, c}; candidate tokens {a, b, x}: 2 shared tokens
    # against 3 candidate tokens gives 2 / (1 + 3).
    score = scorer.score(ctx("a b", "c"), utt("a b x"))
    assert score == 2.0 / 4.0
    assert scorer.score(ctx("a b"), utt("z z z")) == 0.0


def test_overlap_scorer_duplicate_candidate_tokens_count_once():
    scorer = OverlapScorer(spread=0.0)
    # Candidate {a}: one shared token, denominator 1 + 1 distinct token.
    assert scorer.score(ctx("a b"), utt("a a a")) == 1.0 / 2.0


def test_overlap_scorer_default_spread_matches_weight_oracle():
    scorer = OverlapScorer()
    shared = ["alpha", "beta"]
    expected = 0.0
    for token in shared:
        u = random.Random(derive_seed("overlap-w", token)).random()
        expected += 1.0 + 0.25 * (2.0 * u - 1.0)
    expected /= 1 + 3  # candidate has 3 distinct tokens
    got = scorer.score(ctx("alpha beta gamma"), utt("alpha beta zeta"))
    assert abs(got - expected) < 1e-12


def test_overlap_scorer_is_deterministic_across_instances():
    a = OverlapScorer()
    b = OverlapScorer()
    context = ctx("alpha beta gamma", "delta")
    cand = utt("alpha delta epsilon")
    assert a.score(context, cand) == b.score(context, cand)


def test_overlap_scorer_validates_spread():
    with pytest.raises(ValueError):
        OverlapScorer(spread=1.0)
    with pytest.raises(ValueError):
        OverlapScorer(spread=-0.1)


def test_noisy_scorer_reseed_reproduces_stream():
    scorer = NoisyOverlapScorer(noise=0.1, seed=5)
    context = ctx("a b c")
    cand = utt("a b")
    first = [scorer.score(context, cand) for _ in range(3)]
    scorer.reseed(5)
    second = [scorer.score(context, cand) for _ in range(3)]
    assert first == second
    assert len(set(first)) == 3


def test_noisy_scorer_zero_noise_equals_base():
    base = OverlapScorer()
    noisy = NoisyOverlapScorer(noise=0.0, seed=1)
    context = ctx("a b c")
    cand = utt("a c z")
    assert noisy.score(context, cand) == base.score(context, cand)


def test_noisy_scorer_validates_noise():
    with pytest.raises(ValueError):
        NoisyOverlapScorer(noise=-0.01)


def test_perturbed_scorer_deviation_bounded_by_jitter():
    base = OverlapScorer()
    member = PerturbedOverlapScorer(member_seed=3, jitter=0.05)
    context = ctx("alpha beta gamma delta")
    cand = utt("alpha beta")
    b = base.score(context, cand)
    m = member.score(context, cand)
    assert m != b
    assert abs(m - b) <= 0.05 * b + 1e-12


def test_perturbed_scorer_members_differ_but_reproduce():
    context = ctx("alpha beta gamma")
    cand = utt("alpha gamma x")
    s1 = PerturbedOverlapScorer(member_seed=1).score(context, cand)
    s2 = PerturbedOverlapScorer(member_seed=2).score(context, cand)
    s1_again = PerturbedOverlapScorer(member_seed=1).score(context, cand)
    assert s1 != s2
    assert s1 == s1_again


def test_perturbed_scorer_zero_jitter_equals_base():
    base = OverlapScorer()
    member = PerturbedOverlapScorer(member_seed=9, jitter=0.0)
    context = ctx("alpha beta gamma")
    cand = utt("beta gamma")
    assert member.score(context, cand) == base.score(context, cand)


# ------------------------------------------------------------- predict_probs


def test_predict_probs_shapes_and_ranking():
    cs = make_candidate_set("d0:2", ["a b", "z z", "a q"], gold_index=0)
    sv = predict_probs(OverlapScorer(spread=0.0), cs, ctx("a b c"))
    assert sv.instance_id == "d0:2"
    assert len(sv.logits) == 3
    assert len(sv.probs) == 3
    assert abs(sum(sv.probs) - 1.0) < 1e-12
    assert max(range(3), key=lambda i: sv.probs[i]) == 0


def test_predict_probs_rejects_non_finite_scores():
    class BrokenScorer:
        stochastic = False

        def score(self, context, candidate):
            return float("nan")

        def reseed(self, seed):
            pass

    cs = make_candidate_set("d0:2", ["a", "b"], gold_index=0)
    with pytest.raises(SchemaError, match="non-finite"):
        predict_probs(BrokenScorer(), cs, ctx("a"))


def test_score_vector_validation_and_default_probs():
    sv = ScoreVector(instance_id="x", logits=[0.0, 0.0])
    assert sv.probs == softmax([0.0, 0.0])
    with pytest.raises(SchemaError, match="empty"):
        ScoreVector(instance_id="x", logits=[])
    with pytest.raises(SchemaError, match="non-finite"):
        ScoreVector(instance_id="x", logits=[0.0, float("inf")])


# ---------------------------------------------------------------- aggregation


def test_aggregate_frozen_mean_and_variance():
    agg = aggregate_probability_vectors("d0:2", [[0.4, 0.6], [0.6, 0.4]])
    assert agg.mean_probs == [0.5, 0.5]
    assert agg.var_probs == pytest.approx([0.01, 0.01], abs=1e-12)
    assert agg.n_members == 2


def test_aggregate_single_vector_is_identity_with_zero_variance():
    agg = aggregate_probability_vectors("d0:2", [[0.7, 0.3]])
    assert agg.mean_probs == [0.7, 0.3]
    assert agg.var_probs == [0.0, 0.0]
    assert agg.n_members == 1


def test_aggregate_rejects_empty_and_ragged():
    with pytest.raises(ValueError, match="nothing to aggregate"):
        aggregate_probability_vectors("d0:2", [])
    with pytest.raises(ValueError, match="ragged"):
        aggregate_probability_vectors("d0:2", [[0.5, 0.5], [1.0]])


def test_identical_deterministic_members_collapse_exactly():
    cs = make_candidate_set("d0:2", ["a b", "c d", "a e"], gold_index=0)
    context = ctx("a b e")
    members = [OverlapScorer() for _ in range(5)]
    single = predict_probs(members[0], cs, context)
    agg = ensemble_aggregate(members, cs, context)
    assert agg.mean_probs == single.probs
    assert agg.var_probs == [0.0, 0.0, 0.0]
    assert agg.n_members == 5


def test_ensemble_mean_frozen_example():
    class FixedScorer:
        stochastic = False

        def __init__(self, logits):
            self._logits = logits
            self._i = 0

        def score(self, context, candidate):
            value = self._logits[self._i]
            self._i += 1
            return value

        def reseed(self, seed):
            pass

    cs = make_candidate_set("d0:2", ["a", "b"], gold_index=0)
    # Two members with probability vectors [0.8, 0.2] and [0.6, 0.4].
    m1 = FixedScorer([math.log(0.8), math.log(0.2)])
    m2 = FixedScorer([math.log(0.6), math.log(0.4)])
    agg = ensemble_aggregate([m1, m2], cs, ctx("a"))
    assert abs(agg.mean_probs[0] - 0.7) < 1e-12
    assert abs(agg.mean_probs[1] - 0.3) < 1e-12


def test_ensemble_requires_members():
    cs = make_candidate_set("d0:2", ["a", "b"], gold_index=0)
    with pytest.raises(ValueError, match="at least one member"):
        ensemble_aggregate([], cs, ctx("a"))


def test_mc_aggregate_reproducible_and_order_independent():
    cs1 = make_candidate_set("d0:2", ["a b", "c"], gold_index=0)
    cs2 = make_candidate_set("d1:2", ["a", "b c"], gold_index=1)
    context = ctx("a b c")

    def run(order):
        scorer = NoisyOverlapScorer(noise=0.05, seed=0)
        return {
            cs.instance_id: mc_aggregate(scorer, cs, context, n_passes=4, seed=7)
            for cs in order
        }

    forward = run([cs1, cs2])
    backward = run([cs2, cs1])
    for iid in ("d0:2", "d1:2"):
        assert forward[iid].mean_probs == backward[iid].mean_probs
        assert forward[iid].var_probs == backward[iid].var_probs


def test_mc_aggregate_zero_noise_has_zero_variance():
    cs = make_candidate_set("d0:2", ["a b", "c"], gold_index=0)
    agg = mc_aggregate(NoisyOverlapScorer(noise=0.0), cs, ctx("a"), n_passes=5)
    assert agg.var_probs == [0.0, 0.0]
    assert agg.n_members == 5


def test_mc_aggregate_validates_passes():
    cs = make_candidate_set("d0:2", ["a", "b"], gold_index=0)
    with pytest.raises(ValueError, match="n_passes"):
        mc_aggregate(NoisyOverlapScorer(), cs, ctx("a"), n_passes=0)


# ---------------------------------------------------------- prediction files


def test_predictions_round_trip(tmp_path):
    path = tmp_path / "preds.jsonl"
    preds = [
        ScoreVector(instance_id="d0:2", logits=[0.5, 0.25], method="vanilla"),
        ScoreVector(
            instance_id="d0:2", logits=[0.4, 0.3], method="ensemble", member=1
        ),
        ScoreVector(
            instance_id="d1:2", logits=[0.1, 0.2], method="dropout", pass_index=0
        ),
    ]
    write_predictions(path, preds)
    loaded = load_predictions(path)
    assert [sv.instance_id for sv in loaded] == ["d0:2", "d0:2", "d1:2"]
    assert loaded[0].logits == [0.5, 0.25]
    assert loaded[0].method == "vanilla"
    assert loaded[1].member == 1
    assert loaded[2].pass_index == 0
    assert loaded[0].probs == softmax([0.5, 0.25])


def test_load_predictions_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.jsonl"
    row = json.dumps({"instance_id": "d0:2", "logits": [0.1, 0.2], "method": "vanilla"})
    path.write_text(row + "\n" + row + "\n")
    with pytest.raises(SchemaError, match="duplicate prediction"):
        load_predictions(path)


def test_load_predictions_allows_same_instance_different_members(tmp_path):
    path = tmp_path / "members.jsonl"
    rows = [
        {"instance_id": "d0:2", "logits": [0.1, 0.2], "method": "ensemble", "member": m}
        for m in range(3)
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    assert len(load_predictions(path)) == 3


def test_load_predictions_rejects_ragged_widths(tmp_path):
    path = tmp_path / "ragged.jsonl"
    rows = [
        {"instance_id": "d0:2", "logits": [0.1, 0.2], "method": "vanilla"},
        {"instance_id": "d1:2", "logits": [0.1, 0.2, 0.3], "method": "vanilla"},
    ]
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    with pytest.raises(SchemaError, match="expected 2 logits, found 3"):
        load_predictions(path)


def test_load_predictions_enforces_requested_width(tmp_path):
    path = tmp_path / "narrow.jsonl"
    path.write_text(
        json.dumps({"instance_id": "d0:2", "logits": [0.1, 0.2], "method": "vanilla"})
        + "\n"
    )
    with pytest.raises(SchemaError, match="expected 3 logits"):
        load_predictions(path, k=3)
    assert len(load_predictions(path, k=2)) == 1


def test_load_predictions_rejects_bad_fields(tmp_path):
    cases = [
        ({"logits": [0.1], "method": "vanilla"}, "instance_id"),
        ({"instance_id": "a", "logits": [], "method": "v"}, "non-empty"),
        ({"instance_id": "a", "logits": [0.1, "x"], "method": "v"}, "not a number"),
        ({"instance_id": "a", "logits": [0.1]}, "method"),
        (
            {"instance_id": "a", "logits": [0.1], "method": "v", "member": "x"},
            "'member' must be an integer",
        ),
    ]
    for i, (record, needle) in enumerate(cases):
        path = tmp_path / f"bad{i}.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(SchemaError, match=needle):
            load_predictions(path)


def test_group_predictions_first_seen_order():
    preds = [
        ScoreVector(instance_id="b", logits=[0.0, 1.0], member=0),
        ScoreVector(instance_id="a", logits=[1.0, 0.0], member=0),
        ScoreVector(instance_id="b", logits=[1.0, 0.0], member=1),
    ]
    grouped = group_predictions(preds)
    assert [g.instance_id for g in grouped] == ["b", "a"]
    assert grouped[0].n_members == 2
    assert grouped[1].n_members == 1
    expected = [
        (x + y) / 2
        for x, y in zip(softmax([0.0, 1.0]), softmax([1.0, 0.0]))
    ]
    assert grouped[0].mean_probs == pytest.approx(expected, abs=1e-15)
    assert isinstance(grouped[0], AggregatedPrediction)

"""Context-deletion shifts and the genuine short-context control."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialshift.errors import ConfigError
from dialshift.shift_ic import (
    MAX_SR_TURNS,
    apply_ic,
    build_sr_sets,
    parse_ic_ratio,
    shift_dataset_ic,
)

from conftest import make_instance


def six_turn_instance(instance_id: str = "d0:7") -> "Instance":
    texts = [f"turn {i} words" for i in range(6)]
    return make_instance(instance_id, texts, "the response")


# ------------------------------------------------------------ ratio parsing


@pytest.mark.parametrize(
    "text,expected",
    [
        ("2/6", Fraction(1, 3)),
        ("0/6", Fraction(0)),
        ("5/6", Fraction(5, 6)),
        ("1/2", Fraction(1, 2)),
    ],
)
def test_parse_ic_ratio_accepts_fractions(text, expected):
    assert parse_ic_ratio(text) == expected


@pytest.mark.parametrize("text", ["6/6", "7/6", "-1/6", "abc", "1/0"])
def test_parse_ic_ratio_rejects_bad_input(text):
    with pytest.raises(ConfigError):
        parse_ic_ratio(text)


# ------------------------------------------------------------------ apply_ic


def test_apply_ic_keeps_an_exact_suffix():
    inst = six_turn_instance()
    out = apply_ic(inst, 2)
    assert out.context == inst.context[2:]
    assert out.response == inst.response
    assert out.id == inst.id
    assert out.provenance.shift_tag == "ic:d=2"
    assert out.provenance.deleted_count == 2


def test_apply_ic_zero_is_a_tagged_copy():
    inst = six_turn_instance()
    out = apply_ic(inst, 0)
    assert out.context == inst.context
    assert out.provenance.deleted_count == 0


def test_apply_ic_custom_tag():
    inst = six_turn_instance()
    out = apply_ic(inst, 1, shift_tag="ic:r=1/6")
    assert out.provenance.shift_tag == "ic:r=1/6"


def test_apply_ic_bounds():
    inst = six_turn_instance()
    with pytest.raises(ConfigError, match="delete_count"):
        apply_ic(inst, -1)
    with pytest.raises(ConfigError, match="cannot delete 6 of 6"):
        apply_ic(inst, 6)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=3),
    st.integers(min_value=0, max_value=2),
)
def test_apply_ic_composes(first, second):
    inst = six_turn_instance()
    stepwise = apply_ic(apply_ic(inst, first), second)
    direct = apply_ic(inst, first + second)
    assert stepwise.context == direct.context
    assert stepwise.provenance.deleted_count == second
    assert direct.provenance.deleted_count == first + second


# ---------------------------------------------------------------- datasets


def test_shift_dataset_ic_deletes_uniformly():
    insts = [six_turn_instance(f"d{i}:7") for i in range(4)]
    shifted, stats = shift_dataset_ic(insts, Fraction(2, 6))
    assert stats.kept == 4 and stats.dropped == 0
    for before, after in zip(insts, shifted):
        assert after.context == before.context[2:]
        assert after.provenance.shift_tag == "ic:r=2/6"
        assert after.provenance.deleted_count == 2


def test_shift_dataset_ic_zero_ratio_tags_without_deleting():
    insts = [six_turn_instance(f"d{i}:7") for i in range(3)]
    shifted, _ = shift_dataset_ic(insts, Fraction(0))
    for before, after in zip(insts, shifted):
        assert after.context == before.context
        assert after.provenance.shift_tag == "ic:r=0/6"


def test_shift_dataset_ic_rejects_mixed_lengths():
    insts = [
        six_turn_instance("d0:7"),
        make_instance("d1:3", ["one", "two"], "r"),
    ]
    with pytest.raises(ConfigError, match="mixed"):
        shift_dataset_ic(insts, Fraction(1, 6))


def test_shift_dataset_ic_rejects_non_integer_deletions():
    insts = [six_turn_instance(f"d{i}:7") for i in range(2)]
    with pytest.raises(ConfigError, match="not a multiple"):
        shift_dataset_ic(insts, Fraction(1, 4))


def test_shift_dataset_ic_rejects_total_deletion():
    insts = [make_instance("d0:4", ["a", "b", "c"], "r")]
    with pytest.raises(ConfigError, match="delete all"):
        shift_dataset_ic(insts, Fraction(1))


def test_shift_dataset_ic_empty_input():
    shifted, stats = shift_dataset_ic([], Fraction(1, 6))
    assert shifted == []
    assert stats.kept == 0 and stats.dropped == 0


def test_shift_dataset_ic_max_legal_ratio_keeps_one_turn():
    insts = [six_turn_instance(f"d{i}:7") for i in range(2)]
    shifted, _ = shift_dataset_ic(insts, Fraction(5, 6))
    for inst in shifted:
        assert len(inst.context) == 1
        assert inst.context[0] == insts[0].context[5]


# ----------------------------------------------------- short-context control


def test_build_sr_sets_filters_by_exact_length():
    insts = [
        make_instance("d0:2", ["a"], "r"),
        make_instance("d1:4", ["a", "b", "c"], "r"),
        make_instance("d2:4", ["a", "b", "c"], "r"),
    ]
    out = build_sr_sets(insts, 3)
    assert [i.id for i in out] == ["d1:4", "d2:4"]
    for inst in out:
        assert inst.provenance.shift_tag == "sr:t=3"
        assert len(inst.context) == 3


def test_build_sr_sets_leaves_content_unchanged():
    insts = [make_instance("d0:3", ["a b", "c d"], "resp")]
    out = build_sr_sets(insts, 2)
    assert out[0].context == insts[0].context
    assert out[0].response == insts[0].response
    assert insts[0].provenance.shift_tag == "source"


def test_build_sr_sets_validates_turns():
    with pytest.raises(ConfigError, match="turns"):
        build_sr_sets([], 0)
    with pytest.raises(ConfigError, match="turns"):
        build_sr_sets([], MAX_SR_TURNS + 1)
    assert build_sr_sets([], MAX_SR_TURNS) == []

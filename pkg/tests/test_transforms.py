from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlprobe.data import Example
from mdlprobe.errors import AnnotationMissingError, ConfigError, NotApplicableError
from mdlprobe.transforms import (
    MASK,
    Transform,
    apply,
    apply_all,
    masked_count,
    matched_control_for,
    transform_from_dict,
)

EX = Example(("the", "cat", "sat", "down"), 1,
             annotations={"pos": ("DT", "NN", "VB", "RB"), "rationale": (0, 1, 1, 0)},
             auxiliary={"oracle": ("c1=2",)}, index=3)


@pytest.mark.parametrize("t,want", [
    (Transform("identity"), ("the", "cat", "sat", "down")),
    (Transform("append_auxiliary", (("field", "oracle"),)), ("the", "cat", "sat", "down", ">c1=2")),
    (Transform("mask_by_wordlist", (("words", ["cat", "down"]),)), ("the", MASK, "sat", MASK)),
    (Transform("mask_by_tag", (("tags", ["NN"]),)), ("the", MASK, "sat", "down")),
    (Transform("length_only"), ("len=4",)),
    (Transform("keep_marked_only"), (MASK, "cat", "sat", MASK)),
    (Transform("mask_marked"), ("the", MASK, MASK, "down")),
    (Transform("pattern_only"), (MASK, "*", "*", MASK)),
    (Transform("surround_marked"), ("the", "*", "cat", "*", "*", "sat", "*", "down")),
    (Transform("duplicate_tokens"), ("the", "cat", "sat", "down") * 2),
])
def test_hand_examples(t, want):
    out = apply(t, EX, seed=0)
    assert out.tokens == want and out.label == EX.label and out.index == EX.index


def test_masks_keep_annotations_aligned():
    out = apply(Transform("mask_by_wordlist", (("words", ["cat"]),)), EX)
    assert out.annotations == EX.annotations


def test_missing_annotation_names_example():
    bare = Example(("a", "b"), 0, index=17)
    with pytest.raises(AnnotationMissingError, match="example 17"):
        apply(Transform("mask_marked"), bare)
    with pytest.raises(AnnotationMissingError, match="example 17"):
        apply(Transform("append_auxiliary", (("field", "oracle"),)), bare)


def test_validation():
    with pytest.raises(ConfigError):
        Transform("rot13")
    with pytest.raises(ConfigError):
        Transform("mask_random", (("rate", 1.5),))
    with pytest.raises(NotApplicableError):
        matched_control_for(Transform("shuffle_tokens"))
    with pytest.raises(NotApplicableError):
        masked_count(Transform("identity"), EX)


def test_mask_random_rate():
    out = apply(Transform("mask_random", (("rate", 0.5),)), EX, seed=1)
    assert out.tokens.count(MASK) == 2
    assert out == apply(Transform("mask_random", (("rate", 0.5),)), EX, seed=1)


def test_from_dict_nested_match():
    t = transform_from_dict({"kind": "mask_random", "match": {"kind": "mask_by_tag", "tags": ["NN"]}})
    assert t == matched_control_for(Transform("mask_by_tag", (("tags", ["NN"]),)))


words = st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), min_size=1, max_size=15)


@settings(max_examples=100, deadline=None)
@given(words, st.integers(0, 1000), st.integers(0, 50))
def test_matched_control_masks_same_count(tokens, seed, index):
    ex = Example(tuple(tokens), 0, index=index)
    ref = Transform("mask_by_wordlist", (("words", ["a", "c"]),))
    ctrl = matched_control_for(ref)
    assert apply(ctrl, ex, seed).tokens.count(MASK) == apply(ref, ex, seed).tokens.count(MASK)


@settings(max_examples=100, deadline=None)
@given(words, st.integers(0, 1000))
def test_shuffle_is_permutation_and_deterministic(tokens, seed):
    ex = Example(tuple(tokens), 0, index=2)
    t = Transform("shuffle_tokens")
    out = apply(t, ex, seed)
    assert sorted(out.tokens) == sorted(tokens) and out == apply(t, ex, seed)


@settings(max_examples=50, deadline=None)
@given(st.lists(words, min_size=1, max_size=5), st.integers(0, 100))
def test_apply_all_is_per_example(token_lists, seed):
    exs = [Example(tuple(t), 0, index=i) for i, t in enumerate(token_lists)]
    t = Transform("mask_random", (("rate", 0.3),))
    assert apply_all(t, exs, seed) == [apply(t, e, seed) for e in exs]


def test_length_only_seven_tokens():
    e = Example(tuple("abcdefg"), 0)
    assert apply(Transform("length_only"), e).tokens == ("len=7",)


def test_control_masks_nothing_when_reference_masks_nothing():
    e = Example(("x", "y"), 0, index=4)
    ctrl = matched_control_for(Transform("mask_by_wordlist", (("words", ["zzz"]),)))
    assert apply(ctrl, e, 9).tokens == ("x", "y")


def test_matched_control_counts_over_corpus():
    from mdlprobe.synthetic import gen_wordlist_bias_task

    ds = gen_wordlist_bias_task(1000, ["a0", "a1"], ["b0"], seed=0)
    ref = Transform("mask_by_wordlist", (("words", ["a0", "a1", "f3"]),))
    ctrl = matched_control_for(ref)
    for e in ds.examples:
        assert abs(apply(ctrl, e, 1).tokens.count(MASK) - apply(ref, e, 1).tokens.count(MASK)) <= 1


@settings(max_examples=100, deadline=None)
@given(words, st.sets(st.sampled_from("abcde")), st.sets(st.sampled_from("abcde")))
def test_disjoint_wordlist_masks_commute(tokens, a, b):
    b = b - a
    ex = Example(tuple(tokens), 0)
    ta = Transform("mask_by_wordlist", (("words", sorted(a)),))
    tb = Transform("mask_by_wordlist", (("words", sorted(b)),))
    assert apply(ta, apply(tb, ex)).tokens == apply(tb, apply(ta, ex)).tokens


@settings(max_examples=50, deadline=None)
@given(words, st.integers(0, 100))
def test_labels_never_change(tokens, seed):
    e = Example(tuple(tokens), 1, annotations={"rationale": tuple(i % 2 for i in range(len(tokens)))})
    for kind in ("shuffle_tokens", "length_only", "keep_marked_only", "pattern_only", "duplicate_tokens"):
        assert apply(Transform(kind), e, seed).label == 1

from __future__ import annotations

import math

import pytest

from mdlprobe.codelength import BoundedContinuous, Categorical
from mdlprobe.data import Dataset, Example
from mdlprobe.engine import (
    compare_conditions,
    delta_from_totals,
    ensemble_overhead,
    run_condition,
)
from mdlprobe.errors import ConfigError, IncomparableResultsError
from mdlprobe.learners import make_spec
from mdlprobe.schedule import make_schedule
from mdlprobe.synthetic import gen_count_comparison
from mdlprobe.transforms import Transform

ID = Transform("identity")


@pytest.fixture(scope="module")
def small():
    return gen_count_comparison(300, seed=0)


@pytest.fixture(scope="module")
def small_result(small):
    roster = [make_spec("prior"), make_spec("naive_bayes")]
    return run_condition(small, ID, roster, [0, 1], num_blocks=4, first_block=40)


def test_paired_delta_hand_values():
    d = delta_from_totals("a", "b", [110, 109, 110, 110, 109], [100] * 5)
    assert d.deltas == (10, 9, 10, 10, 9)
    assert d.delta_mean == pytest.approx(9.6)
    assert d.delta_stderr == pytest.approx(math.sqrt(0.3 / 5))
    assert d.verdict == "inconclusive"
    assert delta_from_totals("a", "b", [90, 91, 90, 90, 91], [100] * 5).verdict == "helpful"
    # a shorter code by less than two standard errors is not enough
    assert delta_from_totals("a", "b", [99, 101, 98, 102, 99], [100] * 5).verdict == "inconclusive"


def test_ensemble_overhead():
    assert ensemble_overhead(9, 1) == 0.0
    assert ensemble_overhead(9, 4) == 16.0


def test_first_block_and_totals(small_result):
    for run in small_result.runs:
        b0 = run.blocks[0]
        assert b0.chosen is None and b0.bits == 40 * math.log2(2)
        assert run.overhead_bits == 3.0
        assert run.total_bits == math.fsum(b.bits for b in run.blocks) + 3.0
        for b in run.blocks[1:]:
            assert b.bits == min(b.model_bits)
    assert small_result.mdl_stderr is not None


def test_second_seed_reuses_hyperparameters(small_result):
    a, b = small_result.runs
    for ba, bb in zip(a.blocks[1:], b.blocks[1:]):
        assert [f["hparams"] for f in ba.fits] == [f["hparams"] for f in bb.fits]


def test_single_seed_has_no_stderr(small):
    r = run_condition(small, ID, [make_spec("prior")], [3], num_blocks=3, first_block=100)
    assert r.mdl_stderr is None and r.runs[0].overhead_bits == 0.0


def test_validation(small):
    with pytest.raises(ConfigError):
        run_condition(small, ID, [make_spec("prior")], [0, 0])
    with pytest.raises(ConfigError):
        run_condition(small, ID, [make_spec("prior"), make_spec("prior")], [0])
    with pytest.raises(ConfigError):
        run_condition(small, ID, [], [0])
    with pytest.raises(ConfigError):
        run_condition(small, ID, [make_spec("prior")], [0], schedule=make_schedule(200, 3, 50))


def test_incomparable(small, small_result):
    other = run_condition(small, ID, [make_spec("prior"), make_spec("naive_bayes")], [0, 2],
                          num_blocks=4, first_block=40)
    with pytest.raises(IncomparableResultsError):
        compare_conditions(small_result, other)
    other = run_condition(small, ID, [make_spec("prior"), make_spec("naive_bayes")], [0, 1],
                          num_blocks=3, first_block=40)
    with pytest.raises(IncomparableResultsError):
        compare_conditions(small_result, other)


def test_self_comparison_is_zero(small_result):
    d = compare_conditions(small_result, small_result)
    assert d.deltas == (0.0, 0.0) and d.verdict == "inconclusive"


def test_parallel_matches_serial(small, small_result):
    roster = [make_spec("prior"), make_spec("naive_bayes")]
    par = run_condition(small, ID, roster, [0, 1], num_blocks=4, first_block=40, jobs=2)
    assert par.to_dict() == small_result.to_dict()


def test_roster_order_does_not_change_learner_fits(small):
    a = run_condition(small, ID, [make_spec("prior"), make_spec("naive_bayes")], [0], num_blocks=3, first_block=60)
    b = run_condition(small, ID, [make_spec("naive_bayes"), make_spec("prior")], [0], num_blocks=3, first_block=60)
    assert a.runs[0].total_bits == b.runs[0].total_bits


def test_every_continuous_block_is_finite():
    ds = Dataset(tuple(Example(("x",) * (i % 3 + 1), float(i % 5), index=i) for i in range(200)),
                 BoundedContinuous(0.0, 5.0))
    r = run_condition(ds, ID, [make_spec("prior")], [0], num_blocks=3, first_block=50)
    assert r.runs[0].blocks[0].bits == pytest.approx(50 * math.log2(5), rel=1e-15)
    assert all(math.isfinite(b.bits) for b in r.runs[0].blocks)


def test_half_half_model_hand_total():
    # labels arranged so the first 64 examples in seed-0 order are exactly balanced
    from mdlprobe.data import shuffle_order

    perm = shuffle_order(128, 0)
    labels = [0] * 128
    for pos, idx in enumerate(perm):
        labels[idx] = pos % 2
    ds = Dataset(tuple(Example(("t",), labels[i], index=i) for i in range(128)), Categorical(2))
    r = run_condition(ds, ID, [make_spec("prior")], [0], schedule=make_schedule(128, 2, 64))
    assert r.cuts == (0, 64, 128) and r.runs[0].total_bits == 128.0


def test_duplicated_tokens_change_nothing_for_naive_bayes(small):
    roster = [make_spec("naive_bayes")]
    a = run_condition(small, ID, roster, [0, 1], num_blocks=4, first_block=40)
    b = run_condition(small, Transform("duplicate_tokens"), roster, [0, 1], num_blocks=4, first_block=40)
    assert max(abs(x) for x in compare_conditions(a, b).deltas) < 1e-9


def test_shuffle_changes_nothing_for_bag_learners(small):
    roster = [make_spec("naive_bayes"), make_spec("logistic", features={"ngram": 1})]
    a = run_condition(small, ID, roster, [0, 1], num_blocks=4, first_block=40)
    b = run_condition(small, Transform("shuffle_tokens"), roster, [0, 1], num_blocks=4, first_block=40)
    assert max(abs(x) for x in compare_conditions(a, b).deltas) < 1e-9

import pytest

from ctxmine.contextdb import SequenceDatabase
from ctxmine.model import Concrete, Context, Generalized, MiningParams, Pattern
from ctxmine.oracle import InstanceTooLarge, brute_force_mine, oracle_count
from ctxmine.seqminer import frequency_threshold, mine

from randdb import random_db

SUBJECT = "resource.subject"
F1_PARAMS = MiningParams(minsup_seq=0.6, minsup_ctx=2, max_context_size=3, max_pattern_len=4)


def single_event_db():
    return SequenceDatabase.from_records(
        {"s1": ["R-1"]}, {"s1": {}},
        {"R-1": {SUBJECT: "Mathematics", "resource.type": None}}, (), (SUBJECT, "resource.type"))


def test_f1_oracle_equals_miner(f1_db):
    assert brute_force_mine(f1_db, F1_PARAMS) == mine(f1_db, F1_PARAMS)


def test_empty_db():
    db = SequenceDatabase.from_records({}, {}, {}, (), ())
    assert brute_force_mine(db, MiningParams()) == []


@pytest.mark.parametrize("mode", ["fallback", "always", "off"])
def test_single_event(mode):
    # the generalized item has count 1, equal to its frequent member R-1, so always
    # mode prunes it as adding no coverage; fallback never reaches it
    params = MiningParams(minsup_seq=1.0, minsup_ctx=1, generalization_mode=mode)
    expected = [Pattern(Context(), (Concrete("R-1"),), 1, 1)]
    assert brute_force_mine(single_event_db(), params) == expected
    assert mine(single_event_db(), params) == expected


def test_always_mode_keeps_generalization_that_adds_coverage():
    db = SequenceDatabase.from_records(
        {"a": ["R-1"], "b": ["R-2"]}, {"a": {}, "b": {}},
        {"R-1": {SUBJECT: "Mathematics"}, "R-2": {SUBJECT: "Mathematics"}}, (), (SUBJECT,))
    params = MiningParams(minsup_seq=1.0, minsup_ctx=1, max_context_size=0,
                          generalization_mode="always")
    expected = [Pattern(Context(), (Generalized(SUBJECT, "Mathematics"),), 2, 2)]
    assert brute_force_mine(db, params) == expected == mine(db, params)


def test_guard_rails():
    big = SequenceDatabase.from_records(
        {f"s{i}": ["R-1"] for i in range(9)}, {f"s{i}": {} for i in range(9)}, {}, (), ())
    with pytest.raises(InstanceTooLarge):
        brute_force_mine(big, MiningParams())
    long = SequenceDatabase.from_records({"s": ["R-1"] * 7}, {"s": {}}, {}, (), ())
    with pytest.raises(InstanceTooLarge):
        brute_force_mine(long, MiningParams())
    assert brute_force_mine(long, MiningParams(minsup_ctx=1, max_pattern_len=1), max_events=7)


@pytest.mark.parametrize("seed", range(40))
def test_oracle_output_is_sound(seed):
    db = random_db(seed)
    params = MiningParams(minsup_seq=0.5, minsup_ctx=1, max_context_size=2, max_pattern_len=3,
                          generalization_mode="always")
    for p in brute_force_mine(db, params):
        students = [s for s, seq in db.sequences.items()
                    if all(v in seq.context.get(k, ()) for k, v in p.context.predicates)]
        assert p.cover == len(students)
        assert p.count == oracle_count(db, students, p.items, params)
        assert p.count >= frequency_threshold(params.minsup_seq, p.cover)

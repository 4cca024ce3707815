import pytest
from hypothesis import given, strategies as st

from clausenet.central import (ALL_VARS, Candidate, LearnedClause, ProtocolError, Trail, Vsids,
                               absorb_implications, backtrack, compute_backtrack_level, decide,
                               lbd, luby, reduce_db, select_conflict)
from clausenet.cnf import mklit
from clausenet.noc import messages as M

X = [mklit(v) for v in range(10)]
NX = [mklit(v, False) for v in range(10)]


def pl(lit, level, node=0, addr=0):
    return M.prop_lit(lit, level, net=node, clause=addr)


# -- trail -------------------------------------------------------------------------------

def test_trail_levels_and_truncate():
    t = Trail()
    t.decide(X[0])
    t.imply(X[1], 2, (0, 1))
    t.decide(X[2])
    assert t.level == 2 and t.level_of(1) == 1
    assert t.value(NX[1]) is False and t.value(X[5]) is None
    assert t.is_reason((0, 1))
    gone = t.truncate(0)
    assert [e.lit for e in gone] == [X[0], X[1], X[2]]
    assert not t.is_reason((0, 1)) and t.level == 0
    t.decide(X[3])
    with pytest.raises(ProtocolError):
        t.imply(NX[3], 1, (0, 2))


# -- absorption ---------------------------------------------------------------------------

def test_absorb_sorts_and_flags_duplicates():
    t = Trail()
    t.decide(X[0])
    res = absorb_implications(t, [pl(X[2], 3, 0, 2), pl(X[1], 2, 0, 1), pl(X[1], 3, 1, 7)])
    assert [e.lit for e in res.accepted] == [X[1], X[2]]
    assert res.not_reason == [(1, 7)]
    assert not res.candidates


def test_absorb_cutoff_at_first_candidate():
    t = Trail()
    t.decide(X[0])
    res = absorb_implications(t, [pl(NX[3], 2, 0, 1), pl(X[3], 4, 0, 2), pl(X[4], 4, 0, 3),
                                  pl(NX[3], 5, 0, 4), pl(X[5], 6, 0, 5)])
    assert [e.lit for e in res.accepted] == [NX[3], X[4]]
    assert [(c.level, c.var) for c in res.candidates] == [(4, 3)]
    assert [m.clause for m in res.discarded] == [4, 5]


def test_absorb_ties_keep_arrival_order():
    t = Trail()
    res = absorb_implications(t, [(3, 0, pl(X[1], 3, 0, 1)), (3, 1, pl(NX[1], 3, 0, 2))])
    assert res.accepted[0].reason == (0, 1)
    assert res.candidates[0].source == (0, 2)


def test_select_conflict_lowest_level_then_variable():
    cs = [Candidate(3, 5, X[5], (0, 0)), Candidate(3, 2, X[2], (0, 1)), Candidate(4, 0, X[0], (0, 2))]
    assert select_conflict(cs).var == 2
    with pytest.raises(ValueError):
        select_conflict([])


def test_backtrack_level_and_lbd():
    assert compute_backtrack_level([3, 1, 3, 2]) == 2
    assert compute_backtrack_level([3]) == 0
    assert compute_backtrack_level([3, 3]) == 0
    assert lbd([1, 1, 2, 5]) == 3


# -- backtracking messages ---------------------------------------------------------------------

def three_levels():
    t = Trail()
    for d, i in ((X[0], X[1]), (X[2], X[3]), (X[4], X[5])):
        t.decide(d)
        t.imply(i, 1, (0, d))
    return t


def cancels(msgs):
    return [m.var for m in msgs]


def test_backtrack_one_level_is_one_message():
    t = three_levels()
    assert cancels(backtrack(t, 2)) == [ALL_VARS]
    assert t.level == 2


def test_backtrack_two_levels():
    t = three_levels()
    assert cancels(backtrack(t, 1)) == [2, 3, ALL_VARS]


def test_backtrack_without_current_bit():
    t = three_levels()
    assert cancels(backtrack(t, 1, cancel_current=False)) == [2, 3, 4, 5, ALL_VARS]


def test_backtrack_older_entries_of_top_level():
    t = three_levels()
    backtrack(t, 2)            # current segment restarts after x2, x3
    t.imply(X[6], 1, (0, 9))   # new implication at level 2
    assert cancels(backtrack(t, 1)) == [2, 3, ALL_VARS]


def test_backtrack_extra_vars_only_without_current_bit():
    t = three_levels()
    assert cancels(backtrack(t, 2, extra_vars=[7])) == [ALL_VARS]
    t = three_levels()
    assert cancels(backtrack(t, 2, cancel_current=False, extra_vars=[7, 1])) == [4, 5, 7, ALL_VARS]


def test_backtrack_must_go_down():
    with pytest.raises(ValueError):
        backtrack(three_levels(), 3)


# -- heuristics --------------------------------------------------------------------------------

def test_vsids_ties_lowest_var_negative_first():
    v = Vsids(4)
    t = Trail()
    assert decide(v, t) == NX[0]
    t.decide(NX[0])
    assert decide(v, t) == NX[1]


def test_vsids_bump_and_decay():
    v = Vsids(4, decay=0.5)
    v.bump_clause([X[2], NX[3]])
    assert v.pick({}) == X[2]
    v.decay()
    v.bump_clause([NX[3]])
    assert v.pick({}) == NX[3]
    assert v.pick({3: None, 2: None}) == NX[0]


@given(st.lists(st.integers(0, 1000), min_size=6, max_size=6), st.floats(0.1, 100))
def test_vsids_choice_invariant_under_scaling(acts, k):
    a = Vsids(3, init=acts)
    b = Vsids(3, init=[x * k for x in acts])
    if len(set(acts)) == len(acts):
        assert a.pick({}) == b.pick({})


def test_luby():
    assert [luby(i) for i in range(1, 16)] == [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]
    assert [2 * luby(i) for i in range(1, 8)] == [2, 2, 4, 2, 2, 4, 8]
    with pytest.raises(ValueError):
        luby(0)


def test_reduce_db_half_worst_lbd_with_reason_exemption():
    cls = [LearnedClause(i, (X[i],), l, 0) for i, l in enumerate([2, 5, 3, 5, 4, 2, 6, 3])]
    picked = reduce_db(cls, lambda c: False)
    assert [c.cid for c in picked] == [6, 1, 3, 4]
    picked = reduce_db(cls, lambda c: c.cid == 1)
    assert [c.cid for c in picked] == [6, 3, 4, 2]

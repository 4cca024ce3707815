import itertools

import pytest
from hypothesis import given, settings, strategies as st

from clausenet.clause_unit import (ClauseCommandError, ClauseUnit, Command, CommandKind,
                                   exchange_connectors)
from clausenet.cnf import mklit


def unit(lits, width=8, contexts=2, ctx=0, links=(False, False)):
    u = ClauseUnit(width, contexts)
    for i, l in enumerate(lits):
        u.setvar(i, l)
    u.validate(ctx, links)
    return u


X0, X1, X2, X3 = (mklit(v) for v in range(4))
NX0, NX1, NX2, NX3 = (mklit(v, False) for v in range(4))


def test_unit_propagation_in_one_clause():
    # x0 | ~x1 | ~x2 under ~x0, x1 implies ~x2
    u = unit([X0, NX1, NX2])
    u.provar(0, NX0)
    assert not u.prop_pending[0]
    u.provar(0, X1)
    assert u.prop_pending[0] and not u.conflict[0]
    assert u.getpro(0) == NX2
    assert u.reason[0] and not u.prop_pending[0]


def test_satisfied_clause_stays_quiet():
    u = unit([X0, X1, X2])
    u.provar(0, X0)
    u.provar(0, NX1)
    assert not u.prop_pending[0] and not u.conflict[0]


def test_conflict_reports_completing_literal():
    u = unit([X0, X1])
    u.provar(0, NX1)
    u.provar(0, NX0)
    assert u.conflict[0]
    assert u.getpro(0) == X0


def test_unmatched_and_invalid():
    u = unit([X0, X1])
    assert not u.provar(0, X3)
    assert not u.provar(1, X0)  # context 1 never validated
    with pytest.raises(ClauseCommandError):
        u.getpro(0)


def test_flags_exhaustive():
    """Every assignment of a 3-literal clause: flags equal the textbook rule."""
    lits = [X0, NX1, X2]
    for vals in itertools.product([None, False, True], repeat=3):
        u = unit(lits)
        for v, val in enumerate(vals):
            if val is not None:
                u.provar(0, mklit(v, val))
        truth = [None if val is None else (val == (l & 1 == 0)) for l, val in zip(lits, vals)]
        sat = any(t is True for t in truth)
        free = sum(1 for t in truth if t is None)
        assert u.prop_pending[0] == (not sat and free == 1)
        assert u.conflict[0] == (not sat and free == 0)
        assert (u.prop_pending[0], u.conflict[0]) == u.expected_flags(0)


def test_clearvar_current_level_and_single():
    u = unit([X0, X1, X2])
    u.provar(0, NX0, current=False)
    u.provar(0, NX1)
    u.getpro(0)
    assert u.getlvlbits(0) == 0b110
    u.clearvar(0, None)
    assert u.slot_value(0, 0) is False
    assert u.slot_value(0, 1) is None and u.slot_value(0, 2) is None
    assert not u.reason[0]
    u.clearvar(0, 0)
    assert u.slot_value(0, 0) is None


def test_completedl_freezes_level():
    u = unit([X0, X1, X2])
    u.provar(0, NX0)
    u.completedl(0)
    u.clearvar(0, None)
    assert u.slot_value(0, 0) is False


def test_repeated_value_keeps_older_level():
    u = unit([X0, X1, X2])
    u.provar(0, NX0)
    u.completedl(0)
    u.provar(0, NX0)  # duplicate broadcast in a later level
    assert u.getlvlbits(0) == 0
    u.clearvar(0, None)
    assert u.slot_value(0, 0) is False
    u.provar(0, X0)   # a flipped value is a new assignment
    assert u.getlvlbits(0) == 0b001


def test_contexts_are_isolated():
    u = unit([X0, X1, X2])
    u.validate(1)
    u.provar(0, NX0)
    u.provar(0, NX1)
    assert u.prop_pending[0] and not u.prop_pending[1]
    assert u.slot_value(1, 0) is None
    u.provar(1, X0)
    assert u.getpro(0) == X2
    assert u.slot_value(1, 2) is None


def test_chkres_copies_clause_to_other_context():
    u = unit([X0, X1])
    assert not u.valid[1]
    u.chkres(1)
    assert u.valid[1]


def test_validate_clear_invalidates():
    u = unit([X0, X1])
    u.provar(0, NX0)
    u.validate(0, clear=True)
    assert not u.valid[0] and u.assigned[0] == 0


def test_getreason():
    u = unit([X0, X1])
    u.provar(0, NX0)
    lit = u.getpro(0)
    assert u.getreason(0, lit)
    assert not u.getreason(0, X0)
    u.clearreason(0)
    assert not u.getreason(0, lit)


def test_strengthening_removes_implied_literal():
    # reason ~x1 | x2 implied x2; a learned clause holding ~x1 and ~x2 can drop ~x2
    r = unit([NX1, X2])
    r.provar(0, X1)
    assert r.getpro(0) == X2
    r.copystr(0)
    assert not r.strprovar(0, X3)
    assert r.strprovar(0, NX1)
    assert r.strgetpro(0) == NX2


@settings(max_examples=100)
@given(st.permutations([NX0, NX1, NX2, NX3]), st.integers(1, 4))
def test_strengthening_never_empties_reason(order, k):
    r = unit([NX0, NX1, NX2, X3])
    for l in (X0, X1, X2):
        r.provar(0, l)
    assert r.getpro(0) == X3
    r.copystr(0)
    for l in order[:k]:
        r.strprovar(0, l)
    assert r.str_present[0] & (1 << 3)
    assert r.strengthen[0] == ({NX0, NX1, NX2} <= set(order[:k]))


def test_execute_dispatch():
    u = ClauseUnit(4, 1)
    for i, l in enumerate([X0, X1]):
        u.execute(Command(CommandKind.SETVAR, slot=i, lit=l))
    u.execute(Command(CommandKind.VALIDATE))
    out = u.execute(Command(CommandKind.PROVAR, lit=NX0))
    assert out.prop_flag
    out = u.execute(Command(CommandKind.GETPRO))
    assert out.read_data == X1
    assert u.execute(Command(CommandKind.GETVAR, slot=1)).read_data == (True, 1, True)
    assert u.execute(Command(CommandKind.GETREASON, lit=X1)).reason_match
    with pytest.raises(ClauseCommandError):
        u.execute(Command(CommandKind.NOP, context=3))


def test_setvar_out_of_range():
    with pytest.raises(ClauseCommandError):
        ClauseUnit(3, 1).setvar(3, X0)


# -- connectors -------------------------------------------------------------------------------

C = mklit(4)


def chain():
    left = unit([X0, X1, C], width=3, contexts=1, links=(False, True))
    right = unit([C ^ 1, X2, X3], width=3, contexts=1, links=(True, False))
    return left, right


def test_connector_propagates_to_neighbour():
    left, right = chain()
    left.provar(0, NX0)
    left.provar(0, NX1)
    assert left.getpro(0) == C
    assert exchange_connectors(left, right, 0)
    assert right.slot_value(0, 0) is False
    right.provar(0, NX2)
    assert right.getpro(0) == X3


def test_connector_race_double_conflict():
    left, right = chain()
    for l in (NX0, NX1):
        left.provar(0, l)
    for l in (NX2, NX3):
        right.provar(0, l)
    assert (left.getpro(0), right.getpro(0)) == (C, C ^ 1)
    assert exchange_connectors(left, right, 0)
    assert left.conflict[0] and right.conflict[0]


def test_exchange_requires_wiring():
    a = unit([X0, X1], width=3, contexts=1)
    with pytest.raises(ClauseCommandError):
        exchange_connectors(a, a, 0)

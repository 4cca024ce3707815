import pytest

from clausenet.bank import PIPELINE_DEPTH, BankError, BankFull, ClauseBank
from clausenet.cnf import mklit
from clausenet.noc import messages as M
from clausenet.noc import Network, Topology

X = [mklit(v) for v in range(8)]
NX = [mklit(v, False) for v in range(8)]


def setup(clauses, size=16):
    net = Network(Topology("mesh", 1), num_contexts=1)
    bank = ClauseBank(0, size, width=4, num_contexts=1)
    for i, c in enumerate(clauses):
        bank.load_clause(M.add_clause(0, i, c))
    return bank, net


def run(bank, net, t=0, cycles=40):
    """Clock bank and fabric; return (cycle, lit, level) for PropLits reaching central."""
    out = []
    for _ in range(cycles):
        t += 1
        bank.step(t, net)
        net.step(t)
        while (m := net.pop_central()) is not None:
            if m.kind == M.Kind.PROP_LIT:
                out.append((t, m.lits[0], m.level))
    return out


def test_scan_siblings_leave_on_consecutive_cycles():
    bank, net = setup([(NX[0], X[1]), (NX[0], X[2])])
    bank.accept(M.prop_lit(X[0], 3), 1)
    got = run(bank, net, t=1)
    # both are stamped 4 by the scan; the first one's loopback pushes the second past it
    assert [(l, lv) for _, l, lv in got] == [(X[1], 4), (X[2], 5)]
    assert got[1][0] - got[0][0] == 1


def test_chained_implication_gets_a_higher_level():
    bank, net = setup([(NX[0], X[1]), (NX[1], X[3])])
    bank.accept(M.prop_lit(X[0], 3), 1)
    got = run(bank, net, t=1)
    assert [(l, lv) for _, l, lv in got] == [(X[1], 4), (X[3], 5)]
    assert bank.idle(0)


def test_emission_waits_for_pipeline():
    bank, net = setup([(NX[0], X[1])])
    bank.accept(M.prop_lit(X[0], 0), 1)
    assert not bank.idle(0)
    first = run(bank, net, t=1)[0][0]
    assert first >= 1 + PIPELINE_DEPTH - 1


def test_level_bumped_past_absorbed():
    bank, net = setup([(NX[0], X[1])])
    bank.accept(M.prop_lit(X[0], 2), 1)
    bank.accept(M.prop_lit(X[5], 9), 2)  # unrelated, but raises the level horizon
    got = run(bank, net, t=2)
    assert got[0][1:] == (X[1], 10)


def test_conflict_stops_bank_until_cancel():
    bank, net = setup([(NX[0], X[1]), (NX[0], NX[1])])
    bank.accept(M.prop_lit(X[0], 1), 1)
    run(bank, net, t=1)
    assert bank.stopped[0]
    bank.accept(M.cancel_var(M.ALL_VARS), 50)
    assert not bank.stopped[0]


def test_capacity_and_address_reuse():
    bank, _ = setup([(X[0], X[1]), (X[2], X[3])], size=3)
    bank.load_clause(M.add_clause(0, M.NO_ADDR, (X[4], X[5])))
    with pytest.raises(BankFull):
        bank.load_clause(M.add_clause(0, M.NO_ADDR, (X[6], X[7])))
    bank.accept(M.add_clause(0, 1, ()), 1)  # delete
    assert bank.free_addresses() == [1]
    assert bank.load_clause(M.add_clause(0, M.NO_ADDR, (X[6], X[7]))) == 1


def test_width_and_occupancy_errors():
    bank, _ = setup([(X[0], X[1])])
    with pytest.raises(BankError):
        bank.load_clause(M.add_clause(0, 0, (X[2], X[3])))
    with pytest.raises(BankError):
        bank.load_clause(M.add_clause(0, 5, tuple(X[:5])))

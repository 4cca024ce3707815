import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from clausenet.cnf import Formula, mklit, pigeonhole, random_ksat
from clausenet.oracle import (CONFLICT, OracleError, SequentialCDCL, bcp_fixpoint, brute_force,
                              implies, sequential_cdcl)


def models(f):
    for bits in itertools.product([False, True], repeat=f.num_vars):
        if f.satisfied_by(bits):
            yield list(bits)


def test_brute_force_returns_smallest_model():
    f = Formula.from_dimacs_clauses(3, [[1, 2], [-1, 3], [2, 3]])
    # lexicographic with x0 most significant, false first
    assert brute_force(f).model == [False, True, False]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_brute_force_against_enumeration(seed):
    f = random_ksat(8, 34, rng=random.Random(seed))
    ms = list(models(f))
    r = brute_force(f)
    assert r.verdict == ("SAT" if ms else "UNSAT")
    if ms:
        assert r.model == ms[0]


def test_brute_force_limit():
    with pytest.raises(OracleError):
        brute_force(Formula(26, [(0,)]))


def test_bcp_fixpoint_chain_and_conflict():
    f = Formula.from_dimacs_clauses(4, [[-1, 2], [-2, 3], [-3, -4]])
    assert bcp_fixpoint(f, [mklit(0)]) == {0, 2, 4, 7}
    assert bcp_fixpoint(f, [mklit(0), mklit(3)]) == CONFLICT
    assert bcp_fixpoint(f, [mklit(0), mklit(0, False)]) == CONFLICT
    assert bcp_fixpoint(f, []) == set()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_implies_modes_agree(seed):
    rng = random.Random(seed)
    f = random_ksat(7, 20, rng=rng)
    clause = tuple(mklit(v, rng.random() < .5) for v in rng.sample(range(7), 2))
    truth = all(any(m[l >> 1] == (l & 1 == 0) for l in clause) for m in models(f))
    assert implies(f, clause, "brute") == truth
    assert implies(f, clause, "search") == truth
    assert implies(f, clause) == truth
    if implies(f, clause, "rup"):
        assert truth


def test_implies_bad_mode():
    with pytest.raises(ValueError):
        implies(Formula(1, [(0,)]), (0,), "magic")


def test_implies_unsat_formula_implies_anything():
    assert implies(pigeonhole(3, 2), (mklit(0),), "search")


def test_sequential_learning_example():
    f = Formula.from_dimacs_clauses(4, [[1, 2, 3], [2, -4], [-3, 4]])
    recs = sequential_cdcl(f, [mklit(0, False), mklit(1, False)])
    r = recs[1]
    assert r.learned == [(mklit(1), mklit(0))]
    assert r.backtrack_levels == [1]


def test_analyze_first_literal_is_asserting():
    s = SequentialCDCL(Formula.from_dimacs_clauses(3, [[1, -2, -3], [1, -2, 3]]).clauses)
    s.decide(mklit(0, False))
    assert s.propagate() is None
    s.decide(mklit(1))
    confl = s.propagate()
    assert confl is not None
    clause, bt = s.analyze(s.clauses[confl])
    assert clause == (mklit(1, False), mklit(0)) and bt == 1


def test_sequential_decision_on_assigned():
    f = Formula.from_dimacs_clauses(2, [[-1, 2]])
    with pytest.raises(OracleError):
        sequential_cdcl(f, [mklit(0), mklit(1)])

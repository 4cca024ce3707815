import random

import pytest
from hypothesis import given, settings, strategies as st

from clausenet.cnf import (DEFAULT_PERCENTILES, CapacityError, DimacsError, Formula, characterize,
                           from_dimacs, mklit, neg, parse_dimacs, pigeonhole, random_ksat,
                           split_clause, split_clauses, to_dimacs, write_dimacs)
from clausenet.oracle import brute_force


def test_literal_codes():
    assert mklit(3) == 6 and mklit(3, False) == 7
    assert from_dimacs(4) == 6 and from_dimacs(-4) == 7
    assert to_dimacs(7) == -4
    assert neg(6) == 7


def test_parse_basic():
    f = parse_dimacs("c hi\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n")
    assert f.num_vars == 3
    assert f.clauses == [(0, 3), (2, 4, 1)]


def test_parse_percent_terminator():
    f = parse_dimacs(b"p cnf 2 1\n1 2 0\n%\n0\n")
    assert f.clauses == [(0, 2)]


def test_tautologies_dropped_and_duplicates_merged():
    f = parse_dimacs("p cnf 3 3\n1 -1 2 0\n2 2 3 0\n-3 0\n")
    assert f.clauses == [(2, 4), (5,)]
    assert f.raw_clause_count == 3


@pytest.mark.parametrize("text", [
    "1 2 0\n",                       # no header
    "p cnf 2 1\np cnf 2 1\n1 0\n",   # duplicate header
    "p cnf 2 1\n1 3 0\n",            # variable out of range
    "p cnf 2 2\n1 0\n",              # clause count
    "p cnf 2 1\n1 2\n",              # missing trailing 0
    "p cnf 2 1\n1 x 0\n",
    "p cnf 2 1\n0\n",                # empty clause
    "p dnf 2 1\n1 0\n",
])
def test_parse_errors(text):
    with pytest.raises(DimacsError):
        parse_dimacs(text)


def test_too_many_variables():
    with pytest.raises(CapacityError):
        parse_dimacs(f"p cnf {1 << 20} 0\n")


clauses = st.lists(st.lists(st.integers(1, 6).flatmap(lambda v: st.sampled_from([v, -v])),
                            min_size=1, max_size=5), max_size=12)


@given(clauses)
def test_write_parse_round_trip(cls):
    f = Formula.from_dimacs_clauses(6, cls)
    g = parse_dimacs(write_dimacs(f, comment="round trip"))
    assert g.num_vars == f.num_vars and g.clauses == f.clauses


# -- splitting ----------------------------------------------------------------

def test_split_four_literals_width_three():
    pieces, conns = split_clause([mklit(0), mklit(1), mklit(2), mklit(3)], 3, next_var=4)
    assert pieces == [(0, 2, 8), (9, 4, 6)]
    assert conns == [4]


def test_split_twenty_literals_width_eight():
    lits = [mklit(v) for v in range(20)]
    pieces, conns = split_clause(lits, 8, next_var=20)
    assert len(pieces) == 3 and conns == [20, 21]
    assert all(len(p) <= 8 for p in pieces)
    payload = [l for p in pieces for l in p if l >> 1 < 20]
    assert payload == lits


def test_short_clause_untouched():
    assert split_clause([1, 2, 5], 3, 10) == ([(1, 2, 5)], [])


def test_split_width_must_leave_room():
    with pytest.raises(ValueError):
        split_clause([0, 2, 4, 6], 2, 4)


def test_split_formula_links():
    f = Formula.from_dimacs_clauses(6, [[1, 2, 3, 4, 5, 6], [1, -2]])
    s = split_clauses(f, 3)
    assert s.base.num_vars == 9 and s.connector_vars == {6, 7, 8}
    assert s.chains() == [[0, 1, 2, 3], [4]]
    assert s.links == [(0, 1, 6), (1, 2, 7), (2, 3, 8)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([3, 4]))
def test_split_is_equisatisfiable(seed, width):
    f = random_ksat(7, 6, k=5, rng=random.Random(seed))
    s = split_clauses(f, width)
    a, b = brute_force(f), brute_force(s.base)
    assert a.verdict == b.verdict
    if b.model is not None:
        assert f.satisfied_by(b.model[:f.num_vars])


# -- characterization -----------------------------------------------------------

def nearest_rank(values, p):
    """Smallest value whose cumulative share reaches p."""
    n = len(values)
    for v in sorted(set(values)):
        if sum(1 for x in values if x <= v) >= p * n - 1e-9:
            return v


def test_characterize_small():
    f = Formula.from_dimacs_clauses(4, [[1, 2], [1, -3, 4], [-1, 2, 3, 4], [1]])
    cs = characterize(f, (0.5, 1.0))
    assert cs.clause_length_percentiles == {0.5: 2, 1.0: 4}
    # occurrences: x0 4, x1 2, x2 2, x3 2
    assert cs.var_popularity_percentiles == {0.5: 2, 1.0: 4}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_characterize_matches_rank_oracle(seed):
    rng = random.Random(seed)
    f = Formula(12, [tuple(mklit(v, rng.random() < .5) for v in rng.sample(range(12), rng.randint(1, 8)))
                     for _ in range(rng.randint(1, 40))])
    cs = characterize(f)
    lengths = [len(c) for c in f.clauses]
    pops = [sum(1 for c in f.clauses for l in c if l >> 1 == v) for v in range(12)]
    for p in DEFAULT_PERCENTILES:
        assert cs.clause_length_percentiles[p] == nearest_rank(lengths, p)
        assert cs.var_popularity_percentiles[p] == nearest_rank(pops, p)


def test_characterize_csv_and_errors():
    f = Formula.from_dimacs_clauses(2, [[1, 2]])
    assert characterize(f).to_csv().splitlines()[0] == "percentile,clause_length,var_popularity"
    with pytest.raises(ValueError):
        characterize(Formula(2, []))
    with pytest.raises(ValueError):
        characterize(f, (1.5,))


# -- generators ------------------------------------------------------------------

def test_random_ksat_shape():
    f = random_ksat(10, 40, rng=random.Random(1))
    assert len(f.clauses) == 40
    assert all(len({l >> 1 for l in c}) == 3 for c in f.clauses)


def test_pigeonhole_counts():
    f = pigeonhole(4, 3)
    assert f.num_vars == 12
    assert len(f.clauses) == 4 + 3 * 6
    assert brute_force(f).verdict == "UNSAT"
    assert brute_force(pigeonhole(3, 3)).verdict == "SAT"

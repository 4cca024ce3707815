"""Ground-truth engines used to check the simulator.

Everything here is sequential and deliberately plain: counter-based unit
propagation, exhaustive search, and a textbook 1-UIP learner that walks the
trail backwards.  None of it shares code with the distributed machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cnf import Formula, lit_positive, lit_var

BRUTE_FORCE_LIMIT = 25

CONFLICT = "CONFLICT"


class OracleError(Exception):
    pass


@dataclass
class OracleResult:
    verdict: str  # "SAT" | "UNSAT"
    model: list[bool] | None = None


def brute_force(f: Formula) -> OracleResult:
    """Exhaustive search in lexicographic order (x0 first, false before true).

    Partial assignments that already falsify a clause are pruned, so the
    first model found is the lexicographically smallest one.
    """
    n = f.num_vars
    if n > BRUTE_FORCE_LIMIT:
        raise OracleError(f"brute force limited to {BRUTE_FORCE_LIMIT} variables, got {n}")
    # clauses indexed by their highest variable: checkable once it is assigned
    by_last: list[list[tuple[int, ...]]] = [[] for _ in range(n)]
    for c in f.clauses:
        by_last[max(lit_var(l) for l in c)].append(c)
    assign = [False] * n

    def ok(v):
        for c in by_last[v]:
            for l in c:
                if assign[lit_var(l)] == lit_positive(l):
                    break
            else:
                return False
        return True

    # iterative DFS
    v = 0
    tried = [0] * (n + 1)  # 0: nothing yet, 1: false tried, 2: both tried
    if n == 0:
        return OracleResult("SAT", [])
    while True:
        if v == n:
            return OracleResult("SAT", list(assign))
        if tried[v] == 2:
            tried[v] = 0
            v -= 1
            if v < 0:
                return OracleResult("UNSAT")
            continue
        assign[v] = tried[v] == 1
        tried[v] += 1
        if ok(v):
            v += 1


def _value(assign, lit):
    a = assign.get(lit_var(lit))
    if a is None:
        return None
    return a == lit_positive(lit)


def bcp_fixpoint(clauses, assumptions) -> set[int] | str:
    """Least fixed point of unit propagation, or ``CONFLICT``.

    ``clauses`` is a Formula or an iterable of literal tuples.  Returns the
    set of true literals (assumptions included).
    """
    if isinstance(clauses, Formula):
        clauses = clauses.clauses
    clauses = list(clauses)
    assign: dict[int, bool] = {}
    for lit in assumptions:
        v = lit_var(lit)
        if assign.get(v, lit_positive(lit)) != lit_positive(lit):
            return CONFLICT
        assign[v] = lit_positive(lit)
    occurs: dict[int, list[int]] = {}
    for i, c in enumerate(clauses):
        for l in c:
            occurs.setdefault(lit_var(l), []).append(i)
    queue = list(range(len(clauses)))
    queued = [True] * len(clauses)
    while queue:
        i = queue.pop()
        queued[i] = False
        c = clauses[i]
        unassigned = None
        n_unassigned = 0
        sat = False
        for l in c:
            val = _value(assign, l)
            if val is True:
                sat = True
                break
            if val is None:
                n_unassigned += 1
                unassigned = l
        if sat:
            continue
        if n_unassigned == 0:
            return CONFLICT
        if n_unassigned == 1:
            assign[lit_var(unassigned)] = lit_positive(unassigned)
            for j in occurs.get(lit_var(unassigned), ()):
                if not queued[j]:
                    queued[j] = True
                    queue.append(j)
    return {2 * v + (0 if val else 1) for v, val in assign.items()}


def _dpll(clauses, assign: dict[int, bool], num_vars: int) -> bool:
    fp = bcp_fixpoint(clauses, [2 * v + (0 if b else 1) for v, b in assign.items()])
    if fp == CONFLICT:
        return False
    assigned = {lit_var(l) for l in fp}
    for c in clauses:
        for l in c:
            if lit_var(l) not in assigned:
                v = lit_var(l)
                for val in (False, True):
                    a = {lit_var(x): lit_positive(x) for x in fp}
                    a[v] = val
                    if _dpll(clauses, a, num_vars):
                        return True
                return False
    return True


def implies(f, clause, mode: str = "auto") -> bool:
    """True iff every model of ``f`` satisfies ``clause``.

    ``auto`` first tries a unit-propagation refutation of f and the
    negated clause, then falls back to search (brute force for small
    formulas).  ``rup`` is the propagation test alone, ``brute`` forces
    exhaustive enumeration and ``search`` forces the DPLL refutation.
    """
    if mode not in ("auto", "rup", "brute", "search"):
        raise ValueError(f"unknown implication mode {mode!r}")
    clauses = f.clauses if isinstance(f, Formula) else list(f)
    num_vars = f.num_vars if isinstance(f, Formula) else 1 + max(
        (lit_var(l) for c in clauses for l in c), default=-1)
    negated = [l ^ 1 for l in clause]
    if mode in ("auto", "rup"):
        if bcp_fixpoint(clauses, negated) == CONFLICT:
            return True
        if mode == "rup":
            return False
    if mode == "brute" or (mode == "auto" and num_vars <= BRUTE_FORCE_LIMIT):
        if num_vars > BRUTE_FORCE_LIMIT:
            raise OracleError("formula too large for brute-force implication check")
        extra = [(l,) for l in negated]
        return brute_force(Formula(max(num_vars, 1), list(clauses) + extra)).verdict == "UNSAT"
    a = {}
    for l in negated:
        if a.get(lit_var(l), lit_positive(l)) != lit_positive(l):
            return True
        a[lit_var(l)] = lit_positive(l)
    return not _dpll(clauses, a, num_vars)


# -- sequential CDCL -----------------------------------------------------------

@dataclass
class DecisionRecord:
    decision: int
    implications: list[int] = field(default_factory=list)
    conflicts: list[tuple[int, ...]] = field(default_factory=list)
    learned: list[tuple[int, ...]] = field(default_factory=list)
    backtrack_levels: list[int] = field(default_factory=list)
    unsat: bool = False


class SequentialCDCL:
    """Single-threaded CDCL state: counter-based BCP, reverse-trail 1-UIP.

    Clauses are keyed by caller-chosen ids so the lock-step harness can
    mirror additions and deletions made by the simulator.
    """

    def __init__(self, clauses=None):
        self.clauses: dict = {}
        self.assign: dict[int, bool] = {}
        self.level: dict[int, int] = {}
        self.reason: dict[int, object] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self._next_id = 0
        for c in clauses or ():
            self.add_clause(c)

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def add_clause(self, lits, cid=None):
        if cid is None:
            cid = ("o", self._next_id)
            self._next_id += 1
        self.clauses[cid] = tuple(lits)
        return cid

    def remove_clause(self, cid):
        del self.clauses[cid]

    def value(self, lit):
        return _value(self.assign, lit)

    def _enqueue(self, lit, reason):
        v = lit_var(lit)
        self.assign[v] = lit_positive(lit)
        self.level[v] = self.decision_level
        self.reason[v] = reason
        self.trail.append(lit)

    def decide(self, lit):
        if lit_var(lit) in self.assign:
            raise OracleError(f"decision on assigned variable {lit_var(lit)}")
        self.trail_lim.append(len(self.trail))
        self._enqueue(lit, None)

    def propagate(self, reason_hints=None):
        """Run BCP to fixpoint.  Returns the conflicting clause id or None.

        ``reason_hints`` maps var -> clause id; when the hinted clause is unit
        for that var it is preferred as the reason, so the implication graph
        can be pinned to the one the simulator built.
        """
        hints = reason_hints or {}
        while True:
            units = {}
            conflict = None
            for cid, c in self.clauses.items():
                free = None
                nfree = 0
                for l in c:
                    val = self.value(l)
                    if val is True:
                        break
                    if val is None:
                        nfree += 1
                        free = l
                else:
                    if nfree == 0:
                        conflict = cid
                        break
                    if nfree == 1:
                        v = lit_var(free)
                        if v not in units or hints.get(v) == cid:
                            units[v] = (free, cid)
            if conflict is not None:
                return conflict
            if not units:
                return None
            for v, (lit, cid) in sorted(units.items()):
                if self.value(lit) is None:
                    self._enqueue(lit, cid)
            # a later unit may now clash with an earlier one; loop re-checks

    def analyze(self, conflict_lits) -> tuple[tuple[int, ...], int]:
        """1-UIP learning from a falsified clause.  Returns (clause, backtrack level).

        The asserting literal comes first.  Literals fixed at level 0 are dropped.
        """
        dl = self.decision_level
        seen = set()
        learned = []
        counter = 0
        lits = list(conflict_lits)
        idx = len(self.trail) - 1
        uip = None
        while True:
            for l in lits:
                v = lit_var(l)
                if v in seen:
                    continue
                if self.value(l) is not False:
                    raise OracleError(f"literal {l} in reason/conflict is not false")
                seen.add(v)
                lv = self.level[v]
                if lv == dl:
                    counter += 1
                elif lv > 0:
                    learned.append(l)
            while lit_var(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                uip = p
                break
            r = self.reason[lit_var(p)]
            lits = [l for l in self.clauses[r] if l != p]
        clause = (uip ^ 1,) + tuple(learned)
        bt = max((self.level[lit_var(l)] for l in learned), default=0)
        return clause, bt

    def backtrack(self, level):
        if level >= self.decision_level:
            return
        start = self.trail_lim[level]
        for lit in self.trail[start:]:
            v = lit_var(lit)
            del self.assign[v], self.level[v], self.reason[v]
        del self.trail[start:]
        del self.trail_lim[level:]

    def assigned_lits(self) -> set[int]:
        return set(self.trail)


def sequential_cdcl(f: Formula, decisions, conflicts=None) -> list[DecisionRecord]:
    """Replay a decision trace with sequential CDCL.

    After each decision, BCP runs to fixpoint; each conflict is analysed with
    1-UIP, the learned clause is added, and the solver backjumps and
    propagates again.  ``conflicts`` optionally supplies, per conflict in
    order, the falsified clause to learn from (injected conflict pair); it
    must be falsified in the current state.
    """
    s = SequentialCDCL(f.clauses)
    injected = list(conflicts or [])
    records = []
    if s.propagate() is not None:
        raise OracleError("formula is refuted by unit propagation at level 0")
    for d in decisions:
        if s.value(d) is not None:
            raise OracleError(f"decision {d} on an already-assigned variable")
        rec = DecisionRecord(d)
        start = len(s.trail)
        s.decide(d)
        confl = s.propagate()
        rec.implications = s.trail[start + 1:]
        while confl is not None:
            lits = injected.pop(0) if injected else s.clauses[confl]
            rec.conflicts.append(tuple(lits))
            if s.decision_level == 0:
                rec.unsat = True
                break
            learned, bt = s.analyze(lits)
            rec.learned.append(learned)
            rec.backtrack_levels.append(bt)
            s.backtrack(bt)
            s.add_clause(learned)
            confl = s.propagate()
        records.append(rec)
        if rec.unsat:
            break
    return records

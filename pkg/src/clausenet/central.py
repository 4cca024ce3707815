"""Central controller: trail, decisions, conflict learning and clause management.

The central unit never evaluates clauses itself.  It only sees the
messages the banks send it and acts at idle points:

* **search**: at idle, the buffered implications are sorted by level and
  absorbed into the trail.  With no clash it decides (or declares SAT);
  with a clash the earliest conflicting pair is selected and learning begins.
* **learn**: reason queries go out in waves, one wave per idle.  Replies
  name the true literals that forced each queried implication; current-level
  ones join the pending set, earlier ones go into the learned clause.  When
  a single current-level variable remains it is the first UIP.
* after learning: strengthening marks go out, the trail is cut back, and
  the learned clause is installed with its falsified literals synced, so it
  asserts its remaining literal by itself.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .cnf import SplitFormula, lit_var, split_clause
from .noc import messages as M
from .noc.messages import ALL_VARS, COPYSTR_LIT, NO_ADDR

SYNC_ALL = 2 * ALL_VARS  # addressed PropLit with this literal runs chkres


class ProtocolError(Exception):
    pass


class CapacityExceeded(Exception):
    pass


# -- trail -----------------------------------------------------------------------------

@dataclass
class TrailEntry:
    lit: int
    decision_level: int
    implication_level: int
    reason: tuple[int, int] | None
    position: int


class Trail:
    def __init__(self):
        self.entries: list[TrailEntry] = []
        self.by_var: dict[int, TrailEntry] = {}
        self.lim: list[int] = []  # trail index of each decision
        self.current_start = 0  # first entry whose current bit is set bank-side
        self.reason_refs: dict[tuple[int, int], int] = {}

    @property
    def level(self) -> int:
        return len(self.lim)

    def value(self, lit: int) -> bool | None:
        e = self.by_var.get(lit >> 1)
        if e is None:
            return None
        return e.lit == lit

    def level_of(self, var: int) -> int:
        return self.by_var[var].decision_level

    def _push(self, lit, ilevel, reason):
        v = lit >> 1
        if v in self.by_var:
            raise ProtocolError(f"variable {v} already on the trail")
        e = TrailEntry(lit, self.level, ilevel, reason, len(self.entries))
        self.entries.append(e)
        self.by_var[v] = e
        if reason is not None:
            self.reason_refs[reason] = self.reason_refs.get(reason, 0) + 1
        return e

    def decide(self, lit: int) -> TrailEntry:
        self.lim.append(len(self.entries))
        self.current_start = len(self.entries)
        return self._push(lit, 0, None)

    def imply(self, lit: int, ilevel: int, reason) -> TrailEntry:
        return self._push(lit, ilevel, reason)

    def truncate(self, to_level: int) -> list[TrailEntry]:
        if to_level >= self.level:
            return []
        start = self.lim[to_level]
        gone = self.entries[start:]
        for e in gone:
            del self.by_var[e.lit >> 1]
            if e.reason is not None:
                n = self.reason_refs[e.reason] - 1
                if n:
                    self.reason_refs[e.reason] = n
                else:
                    del self.reason_refs[e.reason]
        del self.entries[start:]
        del self.lim[to_level:]
        self.current_start = len(self.entries)
        return gone

    def lits(self) -> set[int]:
        return {e.lit for e in self.entries}

    def decisions(self) -> list[int]:
        return [self.entries[i].lit for i in self.lim]

    def is_reason(self, addr) -> bool:
        return addr in self.reason_refs


# -- implication absorption ----------------------------------------------------------------

@dataclass
class Candidate:
    """An implication that clashes with the trail."""
    level: int
    var: int
    lit: int
    source: tuple[int, int]


@dataclass
class AbsorbResult:
    accepted: list[TrailEntry] = field(default_factory=list)
    not_reason: list[tuple[int, int]] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    discarded: list[M.Message] = field(default_factory=list)


def absorb_implications(trail: Trail, incoming) -> AbsorbResult:
    """Merge buffered PropLits (``(level, arrival, msg)`` or messages) into the trail.

    Sorted by implication level, ties by arrival.  The first implication of a
    variable is kept; later same-polarity ones are told they are not the
    reason.  Opposite-polarity ones become conflict candidates; once the
    first candidate level is known, implications above it are discarded,
    since they may descend from the rejected literal.
    """
    items = []
    for i, x in enumerate(incoming):
        if isinstance(x, M.Message):
            items.append((x.level, i, x))
        else:
            items.append(x)
    items.sort(key=lambda x: (x[0], x[1]))
    res = AbsorbResult()
    cutoff = None
    for level, _, msg in items:
        if cutoff is not None and level > cutoff:
            res.discarded.append(msg)
            continue
        lit = msg.lits[0]
        src = (msg.net, msg.clause)
        have = trail.value(lit)
        if have is None:
            res.accepted.append(trail.imply(lit, level, src))
        elif have:
            res.not_reason.append(src)
        else:
            res.candidates.append(Candidate(level, lit >> 1, lit, src))
            if cutoff is None:
                cutoff = level
    return res


def select_conflict(candidates) -> Candidate:
    """Lowest implication level, ties to the lowest variable index."""
    if not candidates:
        raise ValueError("no conflict candidates")
    return min(candidates, key=lambda c: (c.level, c.var))


def compute_backtrack_level(levels) -> int:
    """Second-highest distinct decision level of a learned clause (0 for a unit)."""
    distinct = sorted(set(levels), reverse=True)
    return distinct[1] if len(distinct) > 1 else 0


def lbd(levels) -> int:
    return len(set(levels))


def backtrack(trail: Trail, to_level: int, ctx: int = 0, cancel_current: bool = True,
              extra_vars=()) -> list[M.Message]:
    """Cut the trail back to ``to_level`` and build the cancellation messages.

    With ``cancel_current`` one broadcast clears every bank-side current bit
    (the entries since the last decision or backtrack); older entries above
    the target are cancelled one by one, ahead of the catch-all.  ``extra_vars`` are assigned
    bank-side but absent from the trail (discarded implications); they only
    need individual cancels when the one-message cancel is off.
    """
    if to_level >= trail.level:
        raise ValueError(f"backtrack to {to_level} from level {trail.level}")
    cs = trail.current_start
    gone = trail.truncate(to_level)
    msgs = []
    if cancel_current:
        msgs += [M.cancel_var(e.lit >> 1, ctx) for e in gone if e.position < cs]
    else:
        seen = set()
        # discarded implications whose variable survives on the trail stay put
        extra = [v for v in extra_vars if v not in trail.by_var]
        for v in [e.lit >> 1 for e in gone] + extra:
            if v not in seen:
                seen.add(v)
                msgs.append(M.cancel_var(v, ctx))
    # Banks stay stopped until the catch-all arrives, so it goes last: a bank
    # released early would rescan units still holding doomed assignments.
    msgs.append(M.cancel_var(ALL_VARS, ctx))
    return msgs


# -- heuristics ----------------------------------------------------------------------------

class Vsids:
    """Per-literal decaying activity.  Ties go to the lowest variable, negative first."""

    def __init__(self, num_vars: int, decay: float = 0.95, bump: float = 1.0, init=None):
        self.num_vars = num_vars
        self.decay_factor = decay
        self.inc = bump
        self.activity = list(init) if init is not None else [0.0] * (2 * num_vars)

    def bump_clause(self, lits):
        for l in lits:
            if l >> 1 < self.num_vars:
                self.activity[l] += self.inc

    def decay(self):
        self.inc /= self.decay_factor
        if self.inc > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.inc *= 1e-100

    def pick(self, assigned) -> int | None:
        best, best_act = None, -1.0
        act = self.activity
        for v in range(self.num_vars):
            if v in assigned:
                continue
            for lit in (2 * v + 1, 2 * v):
                if act[lit] > best_act:
                    best, best_act = lit, act[lit]
        return best


def decide(vsids: Vsids, trail: Trail) -> int | None:
    return vsids.pick(trail.by_var)


def luby(i: int) -> int:
    """i-th term (1-based) of 1,1,2,1,1,2,4,..."""
    if i < 1:
        raise ValueError("luby index starts at 1")
    while True:
        k = 1
        while (1 << k) - 1 < i:
            k += 1
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1


@dataclass
class SolverPolicy:
    restart_unit: int = 100
    reduce_first: int = 2000
    reduce_inc: int = 300
    reduce_fraction: float = 0.5
    decay: float = 0.95
    bump: float = 1.0
    cancel_current: bool = True
    strengthen: bool = True
    restarts: bool = True
    finish_all: bool = False  # with two contexts, run until both reach a verdict


@dataclass
class LearnedClause:
    cid: int
    lits: tuple[int, ...]
    lbd: int
    installer: int
    pieces: list[tuple[int, int, tuple[int, ...]]] = field(default_factory=list)
    valid: set[int] = field(default_factory=set)
    install_epoch: int = 0
    share_to: set[int] = field(default_factory=set)
    doomed: bool = False

    @property
    def addrs(self):
        return [(n, a) for n, a, _ in self.pieces]


def reduce_db(clauses, is_reason, fraction: float = 0.5) -> list:
    """Pick clauses to delete: the worst ``fraction`` by LBD, older first on ties.

    ``is_reason(clause)`` exempts clauses currently justifying a trail entry;
    the next-worst clause is taken instead.
    """
    live = [c for c in clauses if not c.doomed]
    quota = int(len(live) * fraction)
    order = sorted(live, key=lambda c: (-c.lbd, c.cid))
    out = []
    for c in order:
        if len(out) >= quota:
            break
        if not is_reason(c):
            out.append(c)
    return out


# -- per-context controller -------------------------------------------------------------------

@dataclass
class LearnSession:
    conflict: Candidate
    stage: str = "conflict"  # conflict -> waves
    conflict_clause: tuple[int, ...] = ()
    learned: set[int] = field(default_factory=set)
    pending: set[int] = field(default_factory=set)
    seen: set[int] = field(default_factory=set)
    queried: dict[int, int] = field(default_factory=dict)  # var -> replies
    uip: int | None = None
    waves: int = 0
    queried_now: list[int] = field(default_factory=list)
    discarded_vars: set[int] = field(default_factory=set)


@dataclass
class StrengthenSession:
    clause: LearnedClause
    asserting: int
    remaining: set[int]
    marked: set[int]
    levels: dict[int, int]


class Context:
    def __init__(self, cid: int, num_vars: int, policy: SolverPolicy, seed: int):
        self.cid = cid
        self.trail = Trail()
        init = None
        if seed or cid:
            rng = random.Random(seed * 7919 + cid)
            init = [rng.random() * 1e-3 for _ in range(2 * num_vars)]
        self.vsids = Vsids(num_vars, policy.decay, policy.bump, init)
        self.outq: deque = deque()
        self.inbox: list = []
        self.arrivals = 0
        self.replies: list = []
        self.phase = "wait"
        self.session: LearnSession | None = None
        self.strengthen: StrengthenSession | None = None
        self.epoch = 0
        self.conflicts = 0
        self.conflicts_since_restart = 0
        self.restart_index = 1
        self.bcp_start: int | None = None
        self.last_proplit = None
        self.verdict: str | None = None
        self.model = None
        # per backtrack: (entries above the target below the top level,
        # top-level entries older than the current segment, cancels sent)
        self.backtrack_log: list[tuple[int, int, int]] = []
        self.stats = dict(decisions=0, implications=0, conflicts=0, learned=0,
                          not_reason=0, discarded=0, proplits_received=0, cancel_messages=0,
                          backtracks=0, restarts=0, strengthened=0, literals_removed=0,
                          strengthen_indirect=0, reason_queries=0, bcp_cycles=0,
                          fallback_backtracks=0, duplicates=0, candidates=0)


class Central:
    """Drives all contexts.  ``step`` is called once per cycle after the network."""

    def __init__(self, split: SplitFormula, net, num_banks: int, bank_size: int,
                 width: int = 8, num_contexts: int = 1, policy: SolverPolicy | None = None,
                 seed: int = 0, max_conflicts: int | None = None, recorder=None):
        self.split = split
        self.net = net
        self.num_banks = num_banks
        self.bank_size = bank_size
        self.width = width
        self.policy = policy or SolverPolicy()
        self.max_conflicts = max_conflicts
        self.recorder = recorder  # optional object with on_idle / on_conflict hooks
        self.num_orig = split.original_num_vars
        self.next_var = split.base.num_vars
        self.free = [list(range(bank_size)) for _ in range(num_banks)]
        self.rr = 0
        self.addr_lits: dict[tuple[int, int], tuple[int, ...]] = {}
        self.addr_owner: dict[tuple[int, int], int] = {}  # learned clause id
        self.learned: dict[int, LearnedClause] = {}
        self._cid = 0
        self.ctxs = [Context(c, self.num_orig, self.policy, seed) for c in range(num_contexts)]
        self.total_conflicts = 0
        self.next_reduce = self.policy.reduce_first
        self.reductions = 0
        self.deleted = 0
        self.inject_rr = 0
        self.verdict: str | None = None
        self.winner: int | None = None
        self.diagnostics: list[str] = []
        # below this many free slots a reduction runs at the next decision
        self.reserve = num_banks * bank_size // 16
        self._load_originals()

    # -- placement ---------------------------------------------------------------------------

    def _alloc(self, k: int) -> tuple[int, list[int]]:
        """k contiguous free addresses in one bank, banks visited round-robin."""
        for i in range(self.num_banks):
            b = (self.rr + i) % self.num_banks
            free = self.free[b]
            if len(free) < k:
                continue
            if k == 1:
                a = free.pop(0)
                self.rr = (b + 1) % self.num_banks
                return b, [a]
            run = 1
            for j in range(1, len(free)):
                run = run + 1 if free[j] == free[j - 1] + 1 else 1
                if run == k:
                    addrs = free[j - k + 1:j + 1]
                    del free[j - k + 1:j + 1]
                    self.rr = (b + 1) % self.num_banks
                    return b, addrs
        raise CapacityExceeded(
            f"no bank has {k} contiguous free clause slots "
            f"({self.num_banks} banks x {self.bank_size})")

    def free_slots(self) -> int:
        return sum(len(f) for f in self.free)

    def _release(self, b, a):
        import bisect
        bisect.insort(self.free[b], a)
        self.addr_lits.pop((b, a), None)
        self.addr_owner.pop((b, a), None)

    def _load_originals(self):
        ctx0 = self.ctxs[0]
        clauses = self.split.base.clauses
        for chain in self.split.chains():
            b, addrs = self._alloc(len(chain))
            for j, (ci, a) in enumerate(zip(chain, addrs)):
                lits = clauses[ci]
                links = (j > 0, j < len(chain) - 1)
                self.addr_lits[(b, a)] = lits
                ctx0.outq.append(M.add_clause(b, a, lits, 0, links))
        ctx0.phase = "load"
        for c in self.ctxs[1:]:
            c.phase = "wait_load"

    def clause_at(self, addr) -> tuple[int, ...]:
        return self.addr_lits[addr]

    def clauses_valid_in(self, ctx: int) -> list[tuple[int, ...]]:
        """Clause database currently valid for ``ctx`` (split form)."""
        out = list(self.split.base.clauses)
        for lc in self.learned.values():
            if ctx in lc.valid:
                out += [p for _, _, p in lc.pieces]
        return out

    # -- installing learned clauses ------------------------------------------------------------

    def _sync_msgs(self, ctx, b, a, lits):
        trail = self.ctxs[ctx].trail
        out = []
        for l in lits:
            e = trail.by_var.get(l >> 1)
            if e is not None:
                out.append(M.prop_lit(e.lit, 0, ctx, b, a, routing=0))
        return out

    def _install(self, ctx: Context, lits, levels) -> LearnedClause:
        pieces, conns = split_clause(lits, self.width, self.next_var)
        self.next_var += len(conns)
        if self.next_var >= ALL_VARS:
            raise CapacityExceeded("connector variables exhausted the 20-bit variable field")
        b, addrs = self._alloc(len(pieces))
        self._cid += 1
        lc = LearnedClause(self._cid, tuple(lits), lbd(levels), ctx.cid)
        for j, (p, a) in enumerate(zip(pieces, addrs)):
            lc.pieces.append((b, a, p))
            self.addr_lits[(b, a)] = p
            self.addr_owner[(b, a)] = lc.cid
            links = (j > 0, j < len(pieces) - 1)
            ctx.outq.append(M.add_clause(b, a, p, ctx.cid, links))
        for b_, a, p in lc.pieces:
            ctx.outq.extend(self._sync_msgs(ctx.cid, b_, a, p))
        lc.valid.add(ctx.cid)
        lc.install_epoch = ctx.epoch
        lc.share_to = {c.cid for c in self.ctxs if c.cid != ctx.cid and c.verdict is None}
        self.learned[lc.cid] = lc
        return lc

    def _is_reason_anywhere(self, lc: LearnedClause) -> bool:
        return any(c.trail.is_reason(addr) for c in self.ctxs for addr in lc.addrs)

    # -- main step -------------------------------------------------------------------------------

    def step(self, t: int, idle: list[bool]):
        msg = self.net.pop_central()
        if msg is not None:
            self._receive(t, msg)
        for c in self.ctxs:
            if self.verdict is not None:
                break
            if idle[c.cid] and not c.outq and c.phase not in ("done", "wait_load"):
                try:
                    self._on_idle(t, c)
                except CapacityExceeded as e:
                    # learned clauses no longer fit even after reduction
                    self.diagnostics.append(f"cycle {t}: {e}")
                    self.verdict = "UNKNOWN"
        self._inject()

    def _inject(self):
        n = len(self.ctxs)
        for i in range(n):
            c = self.ctxs[(self.inject_rr + i) % n]
            if c.outq:
                if self.net.inject(c.outq[0], self.net.center, from_central=True):
                    c.outq.popleft()
                    self.inject_rr = (c.cid + 1) % n
                return

    def _receive(self, t, msg):
        c = self.ctxs[msg.ctx]
        k = msg.kind
        if k == M.Kind.PROP_LIT:
            c.stats["proplits_received"] += 1
            c.arrivals += 1
            c.inbox.append((msg.level, c.arrivals, msg))
            c.last_proplit = t
        elif k == M.Kind.REASON:
            c.replies.append(msg.lits)
        elif k == M.Kind.STRENGTHEN:
            self._on_strengthen(c, msg.lits[0])
        elif k == M.Kind.CONFLICT:
            pass  # the clashing PropLit carries what central needs
        else:
            raise ProtocolError(f"central received unexpected {msg.name}")

    # -- idle-driven control ------------------------------------------------------------------------

    def _on_idle(self, t, c: Context):
        c.epoch += 1
        if c.phase == "load":
            c.phase = "search"
            c.bcp_start = t
            for o in self.ctxs[1:]:
                if o.phase == "wait_load":
                    o.outq.append(M.complete_dl(ALL_VARS, o.cid))
                    o.phase = "search"
                    o.bcp_start = t
            return
        if c.phase == "search":
            self._absorb(t, c)
        elif c.phase == "learn":
            self._learn_step(t, c)

    def _absorb(self, t, c: Context):
        if c.bcp_start is not None:
            end = c.last_proplit if c.last_proplit is not None and c.last_proplit >= c.bcp_start else t
            c.stats["bcp_cycles"] += end - c.bcp_start
            c.bcp_start = None
        res = absorb_implications(c.trail, c.inbox)
        c.inbox = []
        c.stats["implications"] += len(res.accepted)
        c.stats["discarded"] += len(res.discarded)
        c.stats["duplicates"] += len(res.not_reason)
        c.stats["candidates"] += len(res.candidates)
        # discarded implications still hold a reason flag bank-side; clear it
        srcs = res.not_reason + [(m.net, m.clause) for m in res.discarded]
        for src in srcs:
            c.outq.append(M.not_reason(src[0], src[1], c.cid))
        c.stats["not_reason"] += len(srcs)
        if res.candidates:
            self._start_learning(t, c, res)
            return
        if self.recorder is not None:
            self.recorder.on_idle(self, c)
        self._decision_boundary(t, c)

    def _finish(self, c, verdict, model=None):
        c.verdict = verdict
        c.model = model
        c.phase = "done"
        if self.winner is None:
            self.winner = c.cid
        if not self.policy.finish_all or all(o.verdict is not None for o in self.ctxs):
            self.verdict = self.ctxs[self.winner].verdict

    def _decision_boundary(self, t, c: Context):
        lit = decide(c.vsids, c.trail)
        if lit is None:
            self._finish(c, "SAT", [c.trail.value(2 * v) for v in range(self.num_orig)])
            return
        # database reduction is driven by the lowest-numbered live context
        if c is next(o for o in self.ctxs if o.verdict is None):
            if self.total_conflicts >= self.next_reduce:
                self._reduce()
            elif self.free_slots() < self.reserve and any(
                    not lc.doomed for lc in self.learned.values()):
                self._reduce(scheduled=False)
        c.outq.append(M.complete_dl(lit >> 1, c.cid))
        self._share_into(c)
        self._finalize_strengthen(c)
        self._delete_doomed(c)
        c.trail.decide(lit)
        c.stats["decisions"] += 1
        c.outq.append(M.prop_lit(lit, 0, c.cid, routing=M.BROADCAST))
        c.bcp_start = t

    def _share_into(self, c: Context):
        for lc in self.learned.values():
            if c.cid not in lc.share_to or lc.doomed:
                continue
            inst = self.ctxs[lc.installer]
            if inst.epoch <= lc.install_epoch and inst.verdict is None:
                continue  # installer has not been idle since installing it
            lc.share_to.discard(c.cid)
            for b, a, p in lc.pieces:
                c.outq.append(M.prop_lit(SYNC_ALL, 0, c.cid, b, a, routing=0))
                c.outq.extend(self._sync_msgs(c.cid, b, a, p))
            lc.valid.add(c.cid)

    def _delete_doomed(self, c: Context):
        for lc in list(self.learned.values()):
            if not lc.doomed:
                continue
            lc.share_to.discard(c.cid)
            if c.cid in lc.valid and not any(c.trail.is_reason(a) for a in lc.addrs):
                for b, a, _ in lc.pieces:
                    c.outq.append(M.add_clause(b, a, (), c.cid))
                lc.valid.discard(c.cid)
            if not lc.valid and not lc.share_to:
                for b, a, _ in lc.pieces:
                    self._release(b, a)
                del self.learned[lc.cid]
                self.deleted += 1

    def _reduce(self, scheduled: bool = True):
        if scheduled:
            self.reductions += 1
            self.next_reduce += self.policy.reduce_first + self.reductions * self.policy.reduce_inc
        for lc in reduce_db(self.learned.values(), self._is_reason_anywhere,
                            self.policy.reduce_fraction):
            lc.doomed = True

    # -- learning ---------------------------------------------------------------------------------

    def _start_learning(self, t, c: Context, res: AbsorbResult):
        conf = select_conflict(res.candidates)
        c.stats["conflicts"] += 1
        if c.trail.level == 0:
            self._finish(c, "UNSAT")
            return
        for cand in res.candidates:
            if cand is not conf:
                c.outq.append(M.not_reason(cand.source[0], cand.source[1], c.cid))
                c.stats["not_reason"] += 1
        c.session = LearnSession(conf)
        c.session.discarded_vars = {m.lits[0] >> 1 for m in res.discarded}
        c.outq.append(M.reason(conf.lit, conf.lit, c.cid))
        c.stats["reason_queries"] += 1
        c.phase = "learn"

    def _learn_step(self, t, c: Context):
        s = c.session
        trail = c.trail
        replies, c.replies = c.replies, []
        dl = trail.level
        if s.stage == "conflict":
            if not replies and len(self.addr_lits.get(s.conflict.source, ())) != 1:
                raise ProtocolError(f"no reason clause answered for literal {s.conflict.lit}")
            lits = [s.conflict.lit] + sorted({tr ^ 1 for q, tr in replies})
            s.conflict_clause = tuple(lits)
            for l in lits:
                if trail.value(l) is not False:
                    raise ProtocolError(f"conflict clause literal {l} is not false on the trail")
            s.seen = set()
            for l in lits:
                self._classify(s, trail, l ^ 1, dl)
            s.stage = "waves"
            if not s.pending:
                self._fallback(t, c)
                return
        else:
            answered = {q >> 1 for q, _ in replies}
            for v in s.queried_now:
                # a one-literal reason (a shared unit fact) has nothing to trace
                if v not in answered and len(self.addr_lits[trail.by_var[v].reason]) != 1:
                    raise ProtocolError(f"no reason clause answered for variable {v}")
            for q, tr in replies:
                if trail.value(tr) is not True:
                    raise ProtocolError(f"reason reply literal {tr} is not true on the trail")
                self._classify(s, trail, tr, dl)
        if len(s.pending) == 1:
            self._conclude(t, c)
            return
        order = sorted(s.pending, key=lambda v: trail.by_var[v].position)
        keep = order[0]
        s.queried_now = order[1:]
        for v in s.queried_now:
            c.outq.append(M.reason(trail.by_var[v].lit, trail.by_var[v].lit, c.cid))
            c.stats["reason_queries"] += 1
        s.pending = {keep}
        s.waves += 1

    @staticmethod
    def _classify(s: LearnSession, trail: Trail, true_lit: int, dl: int):
        v = true_lit >> 1
        if v in s.seen:
            return
        s.seen.add(v)
        lv = trail.level_of(v)
        if lv == dl:
            s.pending.add(v)
        elif lv > 0:
            s.learned.add(true_lit ^ 1)

    def _fallback(self, t, c: Context):
        """Conflict clause with no current-level literal: step back below its top level."""
        s = c.session
        top = max(c.trail.level_of(l >> 1) for l in s.conflict_clause)
        c.stats["fallback_backtracks"] += 1
        if top == 0:
            self._finish(c, "UNSAT")
            return
        self._do_backtrack(t, c, top - 1)
        c.session = None
        c.phase = "search"
        c.bcp_start = t

    def _conclude(self, t, c: Context):
        s = c.session
        trail = c.trail
        (u,) = s.pending
        asserting = trail.by_var[u].lit ^ 1
        rest = sorted(s.learned)
        clause = (asserting,) + tuple(rest)
        levels = {l: trail.level_of(l >> 1) for l in clause}
        bt = compute_backtrack_level(levels.values())
        c.stats["learned"] += 1
        c.conflicts += 1
        c.conflicts_since_restart += 1
        self.total_conflicts += 1
        c.vsids.bump_clause(clause)
        c.vsids.decay()
        if self.recorder is not None:
            self.recorder.on_conflict(self, c, s, clause, bt)
        target = bt
        if (self.policy.restarts and c.conflicts_since_restart
                >= luby(c.restart_index) * self.policy.restart_unit):
            c.restart_index += 1
            c.conflicts_since_restart = 0
            c.stats["restarts"] += 1
            target = 0
        if self.policy.strengthen:
            c.outq.append(M.strengthen(COPYSTR_LIT, c.cid))
            for l in clause:
                c.outq.append(M.strengthen(l, c.cid))
        self._do_backtrack(t, c, target)
        lc = self._install(c, clause, list(levels.values()))
        if self.policy.strengthen:
            c.strengthen = StrengthenSession(lc, asserting, set(clause), set(clause), levels)
        c.session = None
        c.phase = "search"
        c.bcp_start = t
        if self.max_conflicts is not None and self.total_conflicts >= self.max_conflicts:
            for o in self.ctxs:
                if o.verdict is None:
                    o.phase = "done"
            self.verdict = "UNKNOWN"

    def _do_backtrack(self, t, c: Context, to_level: int):
        extra = getattr(c.session, "discarded_vars", ()) if c.session else ()
        top = c.trail.level
        older = sum(1 for e in c.trail.entries if to_level < e.decision_level < top)
        stale_top = sum(1 for e in c.trail.entries
                        if e.decision_level == top and e.position < c.trail.current_start)
        msgs = backtrack(c.trail, to_level, c.cid, self.policy.cancel_current, extra)
        c.stats["cancel_messages"] += len(msgs)
        c.stats["backtracks"] += 1
        c.backtrack_log.append((older, stale_top, len(msgs)))
        c.outq.extend(msgs)

    # -- strengthening ------------------------------------------------------------------------------

    def _on_strengthen(self, c: Context, lit: int):
        st = c.strengthen
        if st is None:
            c.stats["strengthen_indirect"] += 1
            return
        if lit == st.asserting or lit in st.marked and lit not in st.remaining:
            return
        if lit in st.remaining:
            st.remaining.discard(lit)
            c.stats["literals_removed"] += 1
        else:
            c.stats["strengthen_indirect"] += 1
        if lit not in st.marked:
            st.marked.add(lit)
        c.outq.append(M.strengthen(lit, c.cid))

    def _finalize_strengthen(self, c: Context):
        st = c.strengthen
        if st is None:
            return
        c.strengthen = None
        old = st.clause
        if len(st.remaining) == len(old.lits) or old.cid not in self.learned or old.doomed:
            return
        lits = [st.asserting] + sorted(st.remaining - {st.asserting})
        c.stats["strengthened"] += 1
        if self.recorder is not None:
            self.recorder.on_strengthen(self, c, old.lits, tuple(lits))
        new = self._install(c, lits, [st.levels[l] for l in lits])
        new.lbd = min(new.lbd, old.lbd)
        old.doomed = True

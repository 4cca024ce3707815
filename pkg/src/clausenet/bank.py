"""A bank of clause units behind a 4-stage controller.

One message enters per cycle (the bank's own broadcasts loop back ahead of
network traffic).  Its commands act on the matching units when it is
accepted, and three cycles later its flag scan retires: units left with a
pending implication or a conflict are queued for emission.  One message
leaves per cycle.  The implied literal is read out (``getpro``) only when
its PropLit is actually sent, so a unit satisfied in the meantime never
sends a redundant implication.

Implication levels follow the max-then-increment rule: every PropLit taken
in raises the bank's shared level to at least its own level; each scan that
finds new implications stamps them ``shared + 1`` and moves ``shared`` up.
"""

from __future__ import annotations

from collections import deque

from .clause_unit import ClauseUnit, exchange_connectors
from .noc import messages as M
from .noc.messages import ALL_VARS, COPYSTR_LIT, MAX_LEVEL, Kind

PIPELINE_DEPTH = 4
LOOPBACK = M.TO_SOURCE | M.BROADCAST | M.TO_CENTRAL


class BankError(Exception):
    pass


class BankFull(BankError):
    pass


class ClauseBank:
    def __init__(self, node: int = 0, size: int = 1024, width: int = 8,
                 num_contexts: int = 2, log_levels: bool = False):
        self.node = node
        self.size = size
        self.width = width
        self.num_contexts = num_contexts
        self.units: list[ClauseUnit | None] = [None] * size
        self.var_index: dict[int, list[int]] = {}
        nc = range(num_contexts)
        self.shared_level = [0 for _ in nc]
        self.absorbed_max = [0 for _ in nc]
        self.stopped = [False for _ in nc]
        self.flagged = [set() for _ in nc]
        self.cur_units = [set() for _ in nc]
        self.pipeline: deque = deque()  # (retire cycle, ctx, replies)
        self.loopback: deque = deque()  # (ready cycle, msg)
        self.emitq: deque = deque()  # ("P"|"C", ctx, addr, level) or ("M", ctx, msg)
        self.links_due: deque = deque()  # (cycle, ctx, addr)
        self.load = [[0] * 4 for _ in nc]  # per ctx: pipeline, loopback, emitq, links
        self.getpro_count = 0
        self.proplits_sent = 0
        self.saturations = 0
        self.chained = 0
        self.busy_cycles = 0
        self.level_log = [] if log_levels else None

    # -- storage ---------------------------------------------------------------------

    def used(self) -> int:
        return sum(1 for u in self.units if u is not None)

    def free_addresses(self) -> list[int]:
        return [a for a, u in enumerate(self.units) if u is None]

    def _unit(self, addr: int) -> ClauseUnit:
        if not 0 <= addr < self.size or self.units[addr] is None:
            raise BankError(f"bank {self.node}: no clause at address {addr}")
        return self.units[addr]

    def _install(self, addr, lits, ctx, links) -> int:
        if addr == M.NO_ADDR or addr is None:
            for a, u in enumerate(self.units):
                if u is None:
                    addr = a
                    break
            else:
                raise BankFull(f"bank {self.node} is full ({self.size} clauses)")
        if not 0 <= addr < self.size:
            raise BankError(f"bank {self.node}: address {addr} outside 0..{self.size - 1}")
        if len(lits) > self.width:
            raise BankError(f"clause of {len(lits)} literals exceeds width {self.width}")
        u = self.units[addr]
        if u is not None:
            if u.any_valid():
                raise BankError(f"bank {self.node}: address {addr} is occupied")
            self._unindex(addr, u)
        u = ClauseUnit(self.width, self.num_contexts)
        for i, lit in enumerate(lits):
            u.setvar(i, lit)
        u.validate(ctx, links)
        self.units[addr] = u
        for lit in lits:
            self.var_index.setdefault(lit >> 1, []).append(addr)
        if u.prop_pending[ctx] or u.conflict[ctx]:
            self.flagged[ctx].add(addr)
        return addr

    def _unindex(self, addr, u):
        for lit in u.clause():
            lst = self.var_index[lit >> 1]
            lst.remove(addr)
            if not lst:
                del self.var_index[lit >> 1]

    def _delete(self, addr, ctx):
        u = self._unit(addr)
        u.validate(ctx, clear=True)
        self.flagged[ctx].discard(addr)
        self.cur_units[ctx].discard(addr)
        if not u.any_valid():
            self._unindex(addr, u)
            self.units[addr] = None
            for c in range(self.num_contexts):
                self.flagged[c].discard(addr)
                self.cur_units[c].discard(addr)

    def load_clause(self, msg: M.Message) -> int:
        """Install an AddClause directly (no pipeline).  Returns the unit address."""
        if msg.kind != Kind.ADD_CLAUSE:
            raise BankError("load_clause takes an AddClause message")
        return self._install(msg.clause, msg.lits, msg.ctx, msg.links)

    # -- idle ------------------------------------------------------------------------

    def idle(self, ctx: int) -> bool:
        ld = self.load[ctx]
        if ld[0] or ld[1] or ld[2] or ld[3]:
            return False
        return self.stopped[ctx] or not self.flagged[ctx]

    def has_work(self) -> bool:
        return bool(self.pipeline or self.loopback or self.emitq or self.links_due)

    # -- message handling ---------------------------------------------------------------

    def _flag(self, ctx, addr, u):
        if u.prop_pending[ctx] or u.conflict[ctx]:
            self.flagged[ctx].add(addr)

    def _requeue(self, ctx):
        """Return queued emissions of ``ctx`` to the flagged set for rescanning."""
        keep = deque()
        for e in self.emitq:
            if e[1] == ctx and e[0] != "M":
                self.flagged[ctx].add(e[2])
                self.load[ctx][2] -= 1
            else:
                keep.append(e)
        self.emitq = keep

    def _reset_levels(self, ctx):
        self.shared_level[ctx] = 0
        self.absorbed_max[ctx] = 0
        if self.level_log is not None:
            self.level_log.append(("reset", ctx, 0))

    def accept(self, msg: M.Message, t: int):
        """Decode and execute a message; its scan retires PIPELINE_DEPTH-1 cycles later."""
        ctx = msg.ctx
        replies = []
        k = msg.kind
        units = self.units
        if k == Kind.PROP_LIT:
            lit = msg.lits[0]
            if msg.routing == 0:  # addressed to one unit: state sync or share
                u = self._unit(msg.clause)
                if lit >> 1 == ALL_VARS:
                    u.chkres(ctx)
                else:
                    u.provar(ctx, lit, current=False)
                self._flag(ctx, msg.clause, u)
            else:
                lv = msg.level
                if lv > self.shared_level[ctx]:
                    self.shared_level[ctx] = lv
                if lv > self.absorbed_max[ctx]:
                    self.absorbed_max[ctx] = lv
                if self.level_log is not None:
                    self.level_log.append(("in", ctx, lv))
                cur = self.cur_units[ctx]
                for addr in self.var_index.get(lit >> 1, ()):
                    u = units[addr]
                    if u.provar(ctx, lit):
                        cur.add(addr)
                        if u.prop_pending[ctx] or u.conflict[ctx]:
                            self.flagged[ctx].add(addr)
        elif k == Kind.CANCEL_VAR:
            if msg.var == ALL_VARS:
                for addr in self.cur_units[ctx]:
                    u = units[addr]
                    u.clearvar(ctx, None)
                    self._flag(ctx, addr, u)
                self.cur_units[ctx].clear()
                self._reset_levels(ctx)
            else:
                for addr in self.var_index.get(msg.var, ()):
                    u = units[addr]
                    if u.valid[ctx]:
                        u.clearvar(ctx, msg.var)
                        self._flag(ctx, addr, u)
            if msg.var == ALL_VARS:
                # the catch-all cancel closes a backtrack and releases the bank
                self.stopped[ctx] = False
                self._requeue(ctx)
        elif k == Kind.COMPLETE_DL:
            if msg.var == ALL_VARS:
                for addr, u in enumerate(units):
                    if u is not None:
                        u.chkres(ctx)
                        self._flag(ctx, addr, u)
            for addr in self.cur_units[ctx]:
                units[addr].completedl(ctx)
            self.cur_units[ctx].clear()
            self._reset_levels(ctx)
            self.stopped[ctx] = False
            self._requeue(ctx)
        elif k == Kind.CONFLICT:
            self.stopped[ctx] = True
        elif k == Kind.NOT_REASON:
            self._unit(msg.clause).clearreason(ctx)
        elif k == Kind.REASON:
            q = msg.lits[0]
            for addr in self.var_index.get(q >> 1, ()):
                u = units[addr]
                if u.valid[ctx] and u.getreason(ctx, q):
                    u.getlvlbits(ctx)  # central classifies levels from its trail
                    for s in u.clause():
                        if s != q:
                            replies.append(M.reason(q, s ^ 1, ctx, routing=M.TO_CENTRAL))
        elif k == Kind.STRENGTHEN:
            lit = msg.lits[0]
            if lit == COPYSTR_LIT:
                for u in units:
                    if u is not None and u.valid[ctx]:
                        u.copystr(ctx)
            else:
                for addr in self.var_index.get(lit >> 1, ()):
                    u = units[addr]
                    if u.valid[ctx] and u.strprovar(ctx, lit):
                        replies.append(M.strengthen(u.strgetpro(ctx), ctx, routing=M.TO_CENTRAL))
        elif k == Kind.ADD_CLAUSE:
            if msg.lits:
                self._install(msg.clause, msg.lits, ctx, msg.links)
            else:
                self._delete(msg.clause, ctx)
        self.pipeline.append((t + PIPELINE_DEPTH - 1, ctx, replies))
        self.load[ctx][0] += 1

    def _scan(self, ctx):
        if self.stopped[ctx] or not self.flagged[ctx]:
            return
        level = self.shared_level[ctx] + 1
        if level > MAX_LEVEL:
            level = MAX_LEVEL
            self.saturations += 1
        units = self.units
        queued = False
        for addr in sorted(self.flagged[ctx]):
            u = units[addr]
            if u is None or not u.valid[ctx]:
                continue
            if u.conflict[ctx]:
                self.emitq.append(("C", ctx, addr, level))
            elif u.prop_pending[ctx]:
                self.emitq.append(("P", ctx, addr, level))
            else:
                continue
            self.load[ctx][2] += 1
            queued = True
        self.flagged[ctx].clear()
        if queued:
            self.shared_level[ctx] = level

    # -- emission ----------------------------------------------------------------------

    def _emit(self, t, net) -> None:
        node = self.node
        while self.emitq:
            e = self.emitq[0]
            ctx = e[1]
            if e[0] == "M":
                msg = e[2]
                if not net.inject(msg, node):
                    return
                self.emitq.popleft()
                self.load[ctx][2] -= 1
                return
            addr = e[2]
            u = self.units[addr]
            if self.stopped[ctx]:
                self.emitq.popleft()
                self.load[ctx][2] -= 1
                if u is not None:
                    self.flagged[ctx].add(addr)
                continue
            if u is None or not u.valid[ctx] or not (u.conflict[ctx] or u.prop_pending[ctx]):
                self.emitq.popleft()
                self.load[ctx][2] -= 1
                continue
            level = e[3]
            if level <= self.absorbed_max[ctx]:
                level = min(self.absorbed_max[ctx] + 1, MAX_LEVEL)
            if u.conflict[ctx]:
                self.emitq.popleft()
                self.load[ctx][2] -= 1
                msgs = []
                # a unit that is already a reason has its implication in flight,
                # so central sees that clash without a second report
                if not u.reason[ctx]:
                    lit = u.getpro(ctx)
                    self.getpro_count += 1
                    msgs.append(M.prop_lit(lit, level, ctx, node, addr, routing=M.TO_CENTRAL))
                msgs.append(M.conflict(level, ctx, routing=LOOPBACK))
                self.stopped[ctx] = True
                for m in reversed(msgs):
                    self.emitq.appendleft(("M", ctx, m))
                    self.load[ctx][2] += 1
                continue
            if not net.can_inject(node, 0):
                return
            lit = u.getpro(ctx)
            self.getpro_count += 1
            self.cur_units[ctx].add(addr)
            if u.connector_asserted[ctx] is not None:
                self.links_due.append((t + 1, ctx, addr))
                self.load[ctx][3] += 1
            msg = M.prop_lit(lit, level, ctx, node, addr, routing=LOOPBACK)
            net.inject(msg, node)
            self.proplits_sent += 1
            if level > self.shared_level[ctx]:
                self.shared_level[ctx] = level
            if self.level_log is not None:
                self.level_log.append(("out", ctx, level))
            self.loopback.append((t + 1, msg))
            self.load[ctx][1] += 1
            self.emitq.popleft()
            self.load[ctx][2] -= 1
            return

    def _exchange(self, ctx, addr):
        u = self.units[addr]
        if u is None:
            return
        lit = u.connector_asserted[ctx]
        if lit is None:
            return
        if u.connector_next is not None and u.lits[u.connector_next] == lit:
            left, right, other = u, self.units[addr + 1] if addr + 1 < self.size else None, addr + 1
        else:
            left, right, other = (self.units[addr - 1] if addr > 0 else None), u, addr - 1
        if left is None or right is None or not (left.valid[ctx] and right.valid[ctx]):
            u.connector_asserted[ctx] = None
            return
        if exchange_connectors(left, right, ctx):
            self.chained += 1
            self._flag(ctx, addr, u)
            self._flag(ctx, other, self.units[other])
            self.cur_units[ctx].add(other)

    # -- cycle -------------------------------------------------------------------------

    def step(self, t: int, net) -> None:
        """One clock: connector exchange, retire, accept one message, emit one message."""
        if self.pipeline:
            self.busy_cycles += 1
        scans = set()
        while self.links_due and self.links_due[0][0] <= t:
            _, ctx, addr = self.links_due.popleft()
            self.load[ctx][3] -= 1
            self._exchange(ctx, addr)
            scans.add(ctx)
        while self.pipeline and self.pipeline[0][0] <= t:
            _, ctx, replies = self.pipeline.popleft()
            self.load[ctx][0] -= 1
            for r in replies:
                self.emitq.append(("M", ctx, r))
                self.load[ctx][2] += 1
            scans.add(ctx)
        for ctx in sorted(scans):
            self._scan(ctx)
        if self.loopback and self.loopback[0][0] <= t:
            _, msg = self.loopback.popleft()
            self.load[msg.ctx][1] -= 1
            self.accept(msg, t)
        else:
            msg = net.pop_eject(self.node)
            if msg is not None:
                self.accept(msg, t)
        if self.emitq:
            self._emit(t, net)

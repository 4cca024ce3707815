"""Cycle-stepped router fabric.

Each router has input buffers (``depth`` flits each) with credit-based flow
control towards its upstream neighbour.  Route computation, switch
allocation and arbitration take one cycle; a granted packet then occupies
the output for one cycle per flit and spends ``link_delay`` cycles on the
wire.  Packets move whole (a multi-flit AddClause needs credits for all its
flits before it leaves), which keeps flits of one message together.

Input ports are ordered LOCAL (bank), CENTRAL (centre router only), then
one port per neighbour in node order; that order is the fixed arbitration
priority.  A broadcast head may be granted several outputs in the same
cycle and leaves its buffer once every output it needs has been served.

Within a cycle every router decides from the state at the start of the
cycle and all effects land in later cycles, so the order routers are
visited in cannot change the outcome.
"""

from __future__ import annotations

from collections import deque

from .messages import Flit, Message, encode
from .topology import Topology

LOCAL_PORT = 0
CENTRAL_PORT = 1
CENTRAL_SRC = -1


class CreditError(AssertionError):
    pass


class Packet:
    """One message in flight with its flits.  ``outs`` is computed at each router."""
    __slots__ = ("msg", "flits", "nflits", "origin", "prev", "ctx", "outs", "uid")

    def __init__(self, msg: Message, origin: int, uid: int):
        self.msg = msg
        self.flits = encode(msg)
        self.nflits = len(self.flits)
        for f in self.flits:
            f.src = origin
        self.origin = origin  # injecting node, or CENTRAL_SRC
        self.prev = None
        self.ctx = msg.ctx
        self.outs = None
        self.uid = uid


class Network:
    def __init__(self, topo: Topology, depth: int = 4, num_contexts: int = 2,
                 check_credits: bool = False, trace=None, audit: bool = False):
        self.topo = topo
        self.depth = depth
        self.num_contexts = num_contexts
        self.check_credits = check_credits
        self.trace = trace  # list collecting delivered-message rows, or None
        n = topo.num_nodes
        self.center = topo.center
        self.nbrs = [topo.neighbors(r) for r in range(n)]
        # port index of neighbour m at router r (same index for in and out)
        self.port_of = [{m: 2 + i for i, m in enumerate(self.nbrs[r])} for r in range(n)]
        self.delay = [[topo.link_delay(r, m) for m in self.nbrs[r]] for r in range(n)]
        nports = [2 + len(self.nbrs[r]) for r in range(n)]
        self.inbuf = [[deque() for _ in range(nports[r])] for r in range(n)]
        self.inflits = [[0] * nports[r] for r in range(n)]
        # credits towards the downstream input buffer of each neighbour output
        self.credits = [[depth] * nports[r] for r in range(n)]
        self.busy_until = [[0] * nports[r] for r in range(n)]
        self.eject = [deque() for _ in range(n)]
        self.central_eject: deque = deque()
        self.eject_capacity = depth
        self.arrivals: dict[int, list] = {}
        self.credit_events: dict[int, list] = {}
        self.active: set[int] = set()
        # per-context in-flight packet-locations attributed to routers
        self.busy = [[0] * n for _ in range(num_contexts)]
        self.busy_total = [0] * num_contexts
        self._eject_pending: dict[tuple[int, int], int] = {}
        self._uid = 0
        self._touched: set[tuple[int, int]] = set()
        # link occupancy in flits, per (upstream router, out port)
        self.on_wire = [[0] * nports[r] for r in range(n)]
        self.credits_in_flight = [[0] * nports[r] for r in range(n)]
        self.injected_by_kind: dict[str, int] = {}
        self.delivered = 0
        self.flit_hops = 0
        # delivery audit: endpoints each live packet still owes, from its routing bits
        self.audit = audit
        self.owed: dict[int, set] = {}
        self.audit_errors: list[str] = []

    # -- bookkeeping ---------------------------------------------------------------

    def _inc(self, ctx, r):
        self.busy[ctx][r] += 1
        self.busy_total[ctx] += 1

    def _dec(self, ctx, r):
        self.busy[ctx][r] -= 1
        self.busy_total[ctx] -= 1

    def router_idle(self, r: int, ctx: int) -> bool:
        return self.busy[ctx][r] == 0

    def idle(self, ctx: int) -> bool:
        return self.busy_total[ctx] == 0

    def pending_events(self) -> bool:
        return bool(self.active or self.arrivals or self.credit_events)

    # -- injection -----------------------------------------------------------------

    def can_inject(self, node: int, port: int, nflits: int = 1) -> bool:
        return self.inflits[node][port] + nflits <= self.depth

    def inject(self, msg: Message, node: int, from_central: bool = False) -> bool:
        """Place a message in a router's local (or central) input buffer.

        Returns False, leaving the network unchanged, when the buffer lacks room.
        """
        port = CENTRAL_PORT if from_central else LOCAL_PORT
        if from_central and node != self.center:
            raise ValueError("the central unit attaches to the centre router only")
        self._uid += 1
        pkt = Packet(msg, CENTRAL_SRC if from_central else node, self._uid)
        if self.inflits[node][port] + pkt.nflits > self.depth:
            return False
        self.inbuf[node][port].append(pkt)
        self.inflits[node][port] += pkt.nflits
        self.active.add(node)
        self._inc(pkt.ctx, node)
        name = msg.name
        self.injected_by_kind[name] = self.injected_by_kind.get(name, 0) + 1
        if self.audit:
            self.owed[pkt.uid] = self.expected_endpoints(msg, pkt.origin)
        return True

    def expected_endpoints(self, msg: Message, origin: int) -> set:
        """Where a message must land, read off its routing bits alone."""
        if msg.routing & 2:
            dst = set(range(self.topo.num_nodes)) - {origin}
            if msg.routing & 4 and origin != CENTRAL_SRC:
                dst.add("central")
            return dst
        if msg.routing & 4 and origin != CENTRAL_SRC:
            return {"central"}
        return {msg.net}

    # -- routing -------------------------------------------------------------------

    def _route(self, r: int, pkt: Packet) -> list[int]:
        msg = pkt.msg
        topo = self.topo
        outs = []
        if msg.routing & 2:  # broadcast
            origin = self.center if pkt.origin == CENTRAL_SRC else pkt.origin
            prev = pkt.prev
            for m in topo.broadcast_next(r, origin, prev):
                outs.append(self.port_of[r][m])
            if pkt.origin == CENTRAL_SRC or r != pkt.origin:
                outs.append(LOCAL_PORT)
            if msg.routing & 4 and r == self.center and pkt.origin != CENTRAL_SRC:
                outs.append(CENTRAL_PORT)
        elif msg.routing & 4 and pkt.origin != CENTRAL_SRC:
            if r == self.center:
                outs.append(CENTRAL_PORT)
            else:
                outs.append(self.port_of[r][topo.unicast_next(r, self.center)])
        else:
            dest = msg.net
            if not 0 <= dest < topo.num_nodes:
                raise ValueError(f"{msg.name} addressed to unknown node {dest}")
            if r == dest:
                outs.append(LOCAL_PORT)
            else:
                outs.append(self.port_of[r][topo.unicast_next(r, dest)])
        return outs

    # -- cycle ---------------------------------------------------------------------

    def step(self, t: int):
        """Advance one cycle.  Returns nothing; deliveries land in eject queues."""
        ev = self.credit_events.pop(t, None)
        if ev:
            for r, port, nf in ev:
                self.credits[r][port] += nf
                self.credits_in_flight[r][port] -= nf
                self._touched.add((r, port))
        ev = self.arrivals.pop(t, None)
        if ev:
            for kind, r, port, pkt, up in ev:
                if kind == 0:  # router input buffer
                    self.inbuf[r][port].append(pkt)
                    self.inflits[r][port] += pkt.nflits
                    self.on_wire[up][self.port_of[up][r]] -= pkt.nflits
                    self._dec(pkt.ctx, up)
                    self._inc(pkt.ctx, r)
                    self.active.add(r)
                    self._touched.add((up, self.port_of[up][r]))
                else:  # eject queue
                    self._deliver(t, r, port, pkt)
        if self.active:
            for r in sorted(self.active):
                self._router_cycle(t, r)
        if self.check_credits and self._touched:
            self._check_touched()
        self._touched.clear()

    def _deliver(self, t, r, port, pkt):
        self._eject_pending[(r, port)] -= 1
        if port == LOCAL_PORT:
            self.eject[r].append(pkt.msg)
            dst = r
        else:
            self.central_eject.append(pkt.msg)
            dst = "central"
        self.delivered += 1
        if self.audit:
            owed = self.owed.get(pkt.uid)
            if owed is None or dst not in owed:
                self.audit_errors.append(f"cycle {t}: {pkt.msg.name} #{pkt.uid} "
                                         f"delivered to {dst} twice or unexpectedly")
            else:
                owed.discard(dst)
                if not owed:
                    del self.owed[pkt.uid]
        if self.trace is not None:
            src = "central" if pkt.origin == CENTRAL_SRC else pkt.origin
            self.trace.append((t, pkt.msg.name, src, dst, pkt.msg.fields_str()))

    def _router_cycle(self, t, r):
        bufs = self.inbuf[r]
        granted = set()
        busy = self.busy_until[r]
        credits = self.credits[r]
        any_left = False
        for port, buf in enumerate(bufs):
            if not buf:
                continue
            pkt = buf[0]
            if pkt.outs is None:
                pkt.outs = self._route(r, pkt)
            nf = pkt.nflits
            remaining = []
            for out in pkt.outs:
                ok = out not in granted and busy[out] <= t
                if ok:
                    if out == LOCAL_PORT:
                        ok = len(self.eject[r]) + self._pending_eject(r, out) < self.eject_capacity
                    elif out == CENTRAL_PORT:
                        ok = (len(self.central_eject) + self._pending_eject(r, out)
                              < self.eject_capacity)
                    else:
                        ok = credits[out] >= nf
                if not ok:
                    remaining.append(out)
                    continue
                granted.add(out)
                busy[out] = t + nf
                self._send(t, r, out, pkt)
            if remaining:
                pkt.outs = remaining
                any_left = True
            else:
                buf.popleft()
                self.inflits[r][port] -= nf
                self._dec(pkt.ctx, r)
                self._free_credit(t, r, port, nf)
                if buf:
                    any_left = True
        if not any_left:
            self.active.discard(r)

    def _pending_eject(self, r, out):
        # ejections granted but not yet landed (multi-flit or next-cycle)
        return self._eject_pending.get((r, out), 0)

    def _send(self, t, r, out, pkt):
        nf = pkt.nflits
        self.flit_hops += nf
        if out in (LOCAL_PORT, CENTRAL_PORT):
            key = (r, out)
            self._eject_pending[key] = self._eject_pending.get(key, 0) + 1
            self._inc(pkt.ctx, r)
            self.arrivals.setdefault(t + nf, []).append((1, r, out, pkt, r))
            return
        m = self.nbrs[r][out - 2]
        d = self.delay[r][out - 2]
        self.credits[r][out] -= nf
        self.on_wire[r][out] += nf
        self._touched.add((r, out))
        # a copy travels down each branch of a broadcast
        cp = Packet.__new__(Packet)
        cp.msg, cp.flits, cp.nflits, cp.origin = pkt.msg, pkt.flits, nf, pkt.origin
        cp.prev, cp.ctx, cp.outs, cp.uid = r, pkt.ctx, None, pkt.uid
        self._inc(pkt.ctx, r)
        self.arrivals.setdefault(t + nf + d, []).append((0, m, self.port_of[m][r], cp, r))

    def _free_credit(self, t, r, port, nf):
        if port in (LOCAL_PORT, CENTRAL_PORT):
            return  # injection buffers are checked directly by the injector
        up = self.nbrs[r][port - 2]
        d = self.delay[r][port - 2]
        up_port = self.port_of[up][r]
        self.credits_in_flight[up][up_port] += nf
        self.credit_events.setdefault(t + d, []).append((up, up_port, nf))
        self._touched.add((up, up_port))

    def pop_eject(self, node: int):
        """Bank side of the ejection port: take one delivered message."""
        q = self.eject[node]
        if not q:
            return None
        msg = q.popleft()
        self._eject_done(node, LOCAL_PORT, msg.ctx)
        return msg

    def pop_central(self):
        q = self.central_eject
        if not q:
            return None
        msg = q.popleft()
        self._eject_done(self.center, CENTRAL_PORT, msg.ctx)
        return msg

    def _eject_done(self, r, port, ctx):
        self._dec(ctx, r)

    # -- checks --------------------------------------------------------------------

    def recount_inflight(self, ctx: int) -> int:
        """Messages of ``ctx`` anywhere in the fabric, counted from scratch.

        Hardware has no such counter; it backs the idle-soundness check.
        """
        n = 0
        for bufs in self.inbuf:
            for b in bufs:
                n += sum(1 for p in b if p.ctx == ctx)
        for ev in self.arrivals.values():
            n += sum(1 for e in ev if e[3].ctx == ctx)
        for q in self.eject:
            n += sum(1 for m in q if m.ctx == ctx)
        n += sum(1 for m in self.central_eject if m.ctx == ctx)
        return n

    def inflight_uids(self) -> set:
        uids = set()
        for bufs in self.inbuf:
            for b in bufs:
                uids.update(p.uid for p in b)
        for ev in self.arrivals.values():
            uids.update(e[3].uid for e in ev)
        return uids

    def audit_undelivered(self) -> list[str]:
        """Packets no longer in the fabric that still owe a delivery."""
        live = self.inflight_uids()
        return [f"packet #{u} never reached {sorted(map(str, d))}"
                for u, d in self.owed.items() if u not in live]

    def channel_balance(self, r: int, out: int) -> int:
        """Downstream occupancy + wire + credits in flight + credits, in flits."""
        m = self.nbrs[r][out - 2]
        return (self.inflits[m][self.port_of[m][r]] + self.on_wire[r][out]
                + self.credits_in_flight[r][out] + self.credits[r][out])

    def _check_touched(self):
        for r, out in self._touched:
            if self.channel_balance(r, out) != self.depth:
                raise CreditError(f"credit leak on channel {r}->{self.nbrs[r][out - 2]}")
            if self.credits[r][out] < 0:
                raise CreditError("negative credit count")

    def check_all_credits(self):
        for r in range(self.topo.num_nodes):
            for out in range(2, 2 + len(self.nbrs[r])):
                if self.channel_balance(r, out) != self.depth or self.credits[r][out] < 0:
                    raise CreditError(f"credit leak on channel {r}->{self.nbrs[r][out - 2]}")

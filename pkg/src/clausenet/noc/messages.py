"""Bit-exact message formats.

Every message is a 6-bit header (3 kind bits, 3 routing-option bits) followed
by the kind's fields, most significant first, with these widths:

    header 6, network address 10, clause address 10, variable 20,
    polarity 1, implication level 14, extra 1

Fields are ordered N C V P I E;
repeated variable/polarity fields are interleaved as (V P) pairs.
Payloads up to 64 bits travel in a single flit.  AddClause is cut into
64-bit flits and reassembled at the destination bank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

HEADER_BITS = 6
NET_BITS = 10
CLAUSE_BITS = 10
VAR_BITS = 20
POL_BITS = 1
LEVEL_BITS = 14
EXTRA_BITS = 1
FLIT_BITS = 64

MAX_LEVEL = (1 << LEVEL_BITS) - 1
# reserved variable value: "all current" / "all clauses" depending on kind
ALL_VARS = (1 << VAR_BITS) - 1
NO_ADDR = (1 << NET_BITS) - 1


class Kind(IntEnum):
    ADD_CLAUSE = 0
    PROP_LIT = 1
    CANCEL_VAR = 2
    COMPLETE_DL = 3
    CONFLICT = 4
    NOT_REASON = 5
    REASON = 6
    STRENGTHEN = 7


KIND_NAMES = {
    Kind.ADD_CLAUSE: "AddClause", Kind.PROP_LIT: "PropLit", Kind.CANCEL_VAR: "CancelVar",
    Kind.COMPLETE_DL: "CompleteDL", Kind.CONFLICT: "Conflict", Kind.NOT_REASON: "NotReason",
    Kind.REASON: "Reason", Kind.STRENGTHEN: "Strengthen",
}

# routing option bits
TO_SOURCE = 1
BROADCAST = 2
TO_CENTRAL = 4


class FieldOverflow(ValueError):
    pass


@dataclass
class Message:
    """One network message.

    ``lits`` holds literal codes (2*var + neg): AddClause's clause, PropLit's
    literal, Reason's (queried, traced) pair, Strengthen's literal.  ``var``
    is used by CancelVar and CompleteDL.  ``links`` is AddClause's
    (has_prev, has_next) connector wiring, carried in its routing bits since
    AddClause is always addressed to one bank.
    """
    kind: Kind
    ctx: int = 0
    routing: int = 0
    net: int = NO_ADDR
    clause: int = NO_ADDR
    lits: tuple[int, ...] = ()
    var: int = 0
    level: int = 0
    links: tuple[bool, bool] = (False, False)
    # simulator-side bookkeeping, not serialized
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]

    @property
    def broadcast(self) -> bool:
        return bool(self.routing & BROADCAST)

    @property
    def to_central(self) -> bool:
        return bool(self.routing & TO_CENTRAL)

    @property
    def to_source(self) -> bool:
        return bool(self.routing & TO_SOURCE)

    @property
    def targeted(self) -> bool:
        return self.kind in (Kind.ADD_CLAUSE, Kind.NOT_REASON) or self.routing == 0

    def fields_str(self) -> str:
        k = self.kind
        if k == Kind.ADD_CLAUSE:
            return f"net={self.net} clause={self.clause} lits={'/'.join(map(str, self.lits))}"
        if k == Kind.PROP_LIT:
            return f"net={self.net} clause={self.clause} lit={self.lits[0]} level={self.level}"
        if k in (Kind.CANCEL_VAR, Kind.COMPLETE_DL):
            return f"var={self.var}"
        if k == Kind.CONFLICT:
            return f"level={self.level}"
        if k == Kind.NOT_REASON:
            return f"net={self.net} clause={self.clause}"
        if k == Kind.REASON:
            return f"lits={self.lits[0]}/{self.lits[1]}"
        return f"lit={self.lits[0]}"


def _layout(msg: Message):
    """(value, width) pairs after the header."""
    k = msg.kind
    lit_fields = []
    for l in msg.lits:
        lit_fields += [(l >> 1, VAR_BITS), ((l & 1) ^ 1, POL_BITS)]
    if k == Kind.ADD_CLAUSE:
        return [(msg.net, NET_BITS), (msg.clause, CLAUSE_BITS)] + lit_fields
    if k == Kind.PROP_LIT:
        return ([(msg.net, NET_BITS), (msg.clause, CLAUSE_BITS)] + lit_fields
                + [(msg.level, LEVEL_BITS), (msg.ctx, EXTRA_BITS)])
    if k in (Kind.CANCEL_VAR, Kind.COMPLETE_DL):
        return [(msg.var, VAR_BITS)]
    if k == Kind.CONFLICT:
        return [(msg.level, LEVEL_BITS), (msg.ctx, EXTRA_BITS)]
    if k == Kind.NOT_REASON:
        return [(msg.net, NET_BITS), (msg.clause, CLAUSE_BITS)]
    if k in (Kind.REASON, Kind.STRENGTHEN):
        return lit_fields
    raise ValueError(k)  # pragma: no cover


_LIT_COUNT = {Kind.PROP_LIT: 1, Kind.REASON: 2, Kind.STRENGTHEN: 1}


def message_bits(msg: Message) -> int:
    return HEADER_BITS + sum(w for _, w in _layout(msg))


def serialize(msg: Message) -> tuple[int, int]:
    """Pack into (value, nbits), most significant field first."""
    if msg.kind in _LIT_COUNT and len(msg.lits) != _LIT_COUNT[msg.kind]:
        raise ValueError(f"{msg.name} carries exactly {_LIT_COUNT[msg.kind]} literal(s)")
    if msg.kind == Kind.ADD_CLAUSE and len(msg.lits) > 8:
        raise FieldOverflow("AddClause carries at most 8 literals")
    routing = msg.routing
    if msg.kind == Kind.ADD_CLAUSE:
        routing = (1 if msg.links[0] else 0) | (2 if msg.links[1] else 0)
    value, nbits = int(msg.kind), 3
    for v, w in [(routing, 3)] + _layout(msg):
        if not 0 <= v < (1 << w):
            raise FieldOverflow(f"{msg.name}: value {v} does not fit in {w} bits")
        value = (value << w) | v
        nbits += w
    return value, nbits


def deserialize(value: int, nbits: int, ctx: int = 0) -> Message:
    """Inverse of :func:`serialize`.  ``ctx`` is the flit's context sideband."""
    pos = nbits

    def take(w):
        nonlocal pos
        pos -= w
        if pos < 0:
            raise ValueError("truncated message")
        return (value >> pos) & ((1 << w) - 1)

    kind = Kind(take(3))
    routing = take(3)
    msg = Message(kind, ctx=ctx)
    if kind == Kind.ADD_CLAUSE:
        msg.links = (bool(routing & 1), bool(routing & 2))
    else:
        msg.routing = routing

    def take_lits(n):
        out = []
        for _ in range(n):
            v = take(VAR_BITS)
            p = take(POL_BITS)
            out.append(2 * v + (0 if p else 1))
        return tuple(out)

    if kind == Kind.ADD_CLAUSE:
        msg.net, msg.clause = take(NET_BITS), take(CLAUSE_BITS)
        nl, rem = divmod(pos, VAR_BITS + POL_BITS)
        if rem:
            raise ValueError("AddClause payload is not a whole number of literals")
        msg.lits = take_lits(nl)
    elif kind == Kind.PROP_LIT:
        msg.net, msg.clause = take(NET_BITS), take(CLAUSE_BITS)
        msg.lits = take_lits(1)
        msg.level = take(LEVEL_BITS)
        msg.ctx = take(EXTRA_BITS)
    elif kind in (Kind.CANCEL_VAR, Kind.COMPLETE_DL):
        msg.var = take(VAR_BITS)
    elif kind == Kind.CONFLICT:
        msg.level = take(LEVEL_BITS)
        msg.ctx = take(EXTRA_BITS)
    elif kind == Kind.NOT_REASON:
        msg.net, msg.clause = take(NET_BITS), take(CLAUSE_BITS)
    elif kind == Kind.REASON:
        msg.lits = take_lits(2)
    else:
        msg.lits = take_lits(1)
    if pos != 0:
        raise ValueError(f"{pos} trailing bits after {msg.name}")
    return msg


@dataclass
class Flit:
    """A network transfer unit.  ``msg`` caches the decoded message."""
    payload: int
    nbits: int
    last: bool
    ctx: int
    msg: Message
    seq: int = 0
    src: int = -1  # injecting node; -1 for the central unit


def encode(msg: Message) -> list[Flit]:
    value, nbits = serialize(msg)
    flits = []
    nflits = max(1, -(-nbits // FLIT_BITS))
    for i in range(nflits):
        hi = nbits - i * FLIT_BITS
        w = min(FLIT_BITS, hi)
        chunk = (value >> (hi - w)) & ((1 << w) - 1)
        flits.append(Flit(chunk, w, i == nflits - 1, msg.ctx, msg, i))
    return flits


def decode(flits) -> Message:
    value, nbits = 0, 0
    for f in flits:
        value = (value << f.nbits) | f.payload
        nbits += f.nbits
    if not flits[-1].last:
        raise ValueError("incomplete message: final flit not marked last")
    return deserialize(value, nbits, flits[0].ctx)


# -- constructors -------------------------------------------------------------

def prop_lit(lit, level, ctx=0, net=NO_ADDR, clause=NO_ADDR, routing=BROADCAST | TO_CENTRAL):
    return Message(Kind.PROP_LIT, ctx, routing, net, clause, (lit,), level=level)


def add_clause(net, clause, lits, ctx=0, links=(False, False)):
    return Message(Kind.ADD_CLAUSE, ctx, 0, net, clause, tuple(lits), links=tuple(links))


def cancel_var(var, ctx=0):
    return Message(Kind.CANCEL_VAR, ctx, BROADCAST, var=var)


def complete_dl(var, ctx=0):
    return Message(Kind.COMPLETE_DL, ctx, BROADCAST, var=var)


def conflict(level, ctx=0, routing=BROADCAST | TO_CENTRAL):
    return Message(Kind.CONFLICT, ctx, routing, level=level)


def not_reason(net, clause, ctx=0):
    return Message(Kind.NOT_REASON, ctx, 0, net, clause)


def reason(queried, traced, ctx=0, routing=BROADCAST):
    return Message(Kind.REASON, ctx, routing, lits=(queried, traced))


def strengthen(lit, ctx=0, routing=BROADCAST):
    return Message(Kind.STRENGTHEN, ctx, routing, lits=(lit,))


COPYSTR_LIT = 2 * ALL_VARS

"""One fixed-width hardware clause and its command set.

Slot contents (variable + polarity) are shared by all contexts; assignment,
current-level, strengthening and reason state are kept per context.  Per-slot
bits are stored as int bitmasks, bit ``i`` for slot ``i``.

The two state bits per slot encode a tri-state value:
assigned=0 -> undecided, assigned=1/agrees=1 -> literal true,
assigned=1/agrees=0 -> literal false.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .cnf import lit_var


class CommandKind(str, Enum):
    SETVAR = "setvar"
    VALIDATE = "validate"
    CHKRES = "chkres"
    PROVAR = "provar"
    GETPRO = "getpro"
    GETVAR = "getvar"
    CLEARVAR = "clearvar"
    COMPLETEDL = "completedl"
    COPYSTR = "copystr"
    STRPROVAR = "strprovar"
    STRGETPRO = "strgetpro"
    CLEARREASON = "clearreason"
    GETREASON = "getreason"
    GETLVLBITS = "getlvlbits"
    NOP = "nop"


class ClauseCommandError(Exception):
    pass


@dataclass(frozen=True)
class Command:
    """``slot``: setvar/getvar index.  ``lit``: literal operand.

    ``clearvar`` with ``lit=None`` clears every slot whose current bit is set
    (the one-message cancellation of the whole current decision level).
    ``validate`` takes ``links=(has_prev, has_next)`` and ``clear=True`` to
    invalidate instead (clause deletion).
    """
    kind: CommandKind
    context: int = 0
    slot: int | None = None
    lit: int | None = None
    links: tuple[bool, bool] = (False, False)
    clear: bool = False
    current: bool = True


@dataclass
class CommandOutput:
    prop_flag: bool = False
    conflict_flag: bool = False
    reason_match: bool = False
    strengthen_flag: bool = False
    read_data: object = None


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _only_bit(x: int) -> int:
    return x.bit_length() - 1


class ClauseUnit:
    __slots__ = ("width", "num_contexts", "lits", "present", "valid", "assigned",
                 "agrees", "current", "str_present", "str_reason_slot", "reason",
                 "implied_slot", "prop_pending", "conflict", "conflict_slot",
                 "strengthen", "connector_prev", "connector_next", "connector_asserted")

    def __init__(self, width: int = 8, num_contexts: int = 2):
        self.width = width
        self.num_contexts = num_contexts
        self.lits = [-1] * width
        self.present = 0
        self.connector_prev: int | None = None
        self.connector_next: int | None = None
        n = num_contexts
        self.valid = [False] * n
        self.assigned = [0] * n
        self.agrees = [0] * n
        self.current = [0] * n
        self.str_present = [0] * n
        self.str_reason_slot: list[int | None] = [None] * n
        self.reason = [False] * n
        self.implied_slot: list[int | None] = [None] * n
        self.prop_pending = [False] * n
        self.conflict = [False] * n
        self.conflict_slot: list[int | None] = [None] * n
        self.strengthen = [False] * n
        # literal asserted on a connector slot this cycle, awaiting exchange
        self.connector_asserted: list[int | None] = [None] * n

    # -- helpers ---------------------------------------------------------------

    def clause(self) -> tuple[int, ...]:
        return tuple(l for l in self.lits if l >= 0)

    def any_valid(self) -> bool:
        return any(self.valid)

    def _check_ctx(self, ctx):
        if not 0 <= ctx < self.num_contexts:
            raise ClauseCommandError(f"context {ctx} out of range")

    def _match(self, var: int) -> int:
        for i, l in enumerate(self.lits):
            if l >= 0 and l >> 1 == var:
                return i
        return -1

    def _recompute(self, ctx):
        asg = self.assigned[ctx]
        if asg & self.agrees[ctx]:
            self.prop_pending[ctx] = False
            self.conflict[ctx] = False
            return
        free = self.present & ~asg
        if free == 0:
            self.prop_pending[ctx] = False
            self.conflict[ctx] = bool(self.present)
        else:
            self.prop_pending[ctx] = (free & (free - 1)) == 0
            self.conflict[ctx] = False

    def expected_flags(self, ctx) -> tuple[bool, bool]:
        """(prop_pending, conflict) recomputed from slot state alone."""
        lits = [(i, self.assigned[ctx] >> i & 1, self.agrees[ctx] >> i & 1)
                for i in range(self.width) if self.present >> i & 1]
        if not lits or any(a and g for _, a, g in lits):
            return False, False
        free = [i for i, a, _ in lits if not a]
        return len(free) == 1, len(free) == 0

    def slot_value(self, ctx, slot) -> bool | None:
        if not self.assigned[ctx] >> slot & 1:
            return None
        return bool(self.agrees[ctx] >> slot & 1)

    # -- commands --------------------------------------------------------------

    def setvar(self, slot: int, lit: int | None):
        if not 0 <= slot < self.width:
            raise ClauseCommandError(f"slot {slot} out of range for width {self.width}")
        bit = 1 << slot
        if lit is None or lit < 0:
            self.lits[slot] = -1
            self.present &= ~bit
        else:
            self.lits[slot] = lit
            self.present |= bit
        for c in range(self.num_contexts):
            self.assigned[c] &= ~bit
            self.agrees[c] &= ~bit
            self.current[c] &= ~bit
            self.str_present[c] &= ~bit

    def validate(self, ctx: int, links=(False, False), clear: bool = False):
        self._check_ctx(ctx)
        if clear:
            self._reset_ctx(ctx)
            return
        has_prev, has_next = links
        self.connector_prev = 0 if has_prev else None
        self.connector_next = self.present.bit_length() - 1 if has_next else None
        self.valid[ctx] = True
        self.str_present[ctx] = self.present
        self._recompute(ctx)

    def invalidate_all(self):
        for c in range(self.num_contexts):
            self._reset_ctx(c)

    def _reset_ctx(self, ctx):
        self.valid[ctx] = False
        self.assigned[ctx] = self.agrees[ctx] = self.current[ctx] = 0
        self.str_present[ctx] = 0
        self.str_reason_slot[ctx] = None
        self.reason[ctx] = False
        self.implied_slot[ctx] = None
        self.prop_pending[ctx] = self.conflict[ctx] = self.strengthen[ctx] = False
        self.conflict_slot[ctx] = None
        self.connector_asserted[ctx] = None

    def chkres(self, ctx: int):
        self._check_ctx(ctx)
        if not self.valid[ctx] and any(self.valid):
            self.valid[ctx] = True
            self.str_present[ctx] = self.present
            self._recompute(ctx)

    def provar(self, ctx: int, lit: int, current: bool = True) -> bool:
        """Apply an assignment.  Returns True if a slot matched."""
        slot = self._match(lit >> 1)
        if slot < 0 or not self.valid[ctx]:
            return False
        bit = 1 << slot
        agree = self.lits[slot] == lit
        # a duplicate of a held value keeps its original segment
        repeat = bool(self.assigned[ctx] & bit) and bool(self.agrees[ctx] & bit) == agree
        self.assigned[ctx] |= bit
        if agree:
            self.agrees[ctx] |= bit
        else:
            self.agrees[ctx] &= ~bit
        if current and not repeat:
            self.current[ctx] |= bit
        was_conflict = self.conflict[ctx]
        self._recompute(ctx)
        if self.conflict[ctx] and not was_conflict:
            self.conflict_slot[ctx] = slot
        return True

    def getpro(self, ctx: int) -> int:
        """Read the implied literal and mark this clause as its reason.

        On a conflicting clause this returns the literal whose falsification
        completed the conflict, so the bank can report the clashing implication.
        """
        if self.conflict[ctx]:
            slot = self.conflict_slot[ctx]
            if slot is None:
                slot = _only_bit(self.present)
            self.reason[ctx] = True
            self.implied_slot[ctx] = slot
            return self.lits[slot]
        if not self.prop_pending[ctx]:
            raise ClauseCommandError("getpro with no pending propagation")
        free = self.present & ~self.assigned[ctx]
        slot = _only_bit(free)
        bit = 1 << slot
        self.assigned[ctx] |= bit
        self.agrees[ctx] |= bit
        self.current[ctx] |= bit
        self.prop_pending[ctx] = False
        self.reason[ctx] = True
        self.implied_slot[ctx] = slot
        if slot == self.connector_prev or slot == self.connector_next:
            self.connector_asserted[ctx] = self.lits[slot]
        return self.lits[slot]

    def getvar(self, slot: int):
        if not 0 <= slot < self.width:
            raise ClauseCommandError(f"slot {slot} out of range for width {self.width}")
        l = self.lits[slot]
        if l < 0:
            return (False, None, None)
        return (True, l >> 1, not (l & 1))

    def clearvar(self, ctx: int, var: int | None) -> bool:
        if var is None:
            mask = self.current[ctx]
        else:
            slot = self._match(var)
            mask = 0 if slot < 0 else 1 << slot
        mask &= self.assigned[ctx] | self.current[ctx]
        if not mask:
            return False
        self.assigned[ctx] &= ~mask
        self.agrees[ctx] &= ~mask
        self.current[ctx] &= ~mask
        imp = self.implied_slot[ctx]
        if imp is not None and mask >> imp & 1:
            self.reason[ctx] = False
            self.implied_slot[ctx] = None
        if self.conflict_slot[ctx] is not None and mask >> self.conflict_slot[ctx] & 1:
            self.conflict_slot[ctx] = None
        self._recompute(ctx)
        return True

    def completedl(self, ctx: int):
        self.current[ctx] = 0

    def copystr(self, ctx: int):
        self.str_present[ctx] = self.present
        self.str_reason_slot[ctx] = self.implied_slot[ctx] if self.reason[ctx] else None
        self.strengthen[ctx] = False

    def strprovar(self, ctx: int, lit: int) -> bool:
        """Mark ``lit`` as in the learned clause.  Returns the strengthen flag."""
        rs = self.str_reason_slot[ctx]
        mask = 0
        for i, l in enumerate(self.lits):
            if l == lit and i != rs:
                mask |= 1 << i
        if mask & self.str_present[ctx]:
            self.str_present[ctx] &= ~mask
            if rs is not None and self.str_present[ctx] == 1 << rs:
                self.strengthen[ctx] = True
        return self.strengthen[ctx]

    def strgetpro(self, ctx: int) -> int:
        """The learned-clause literal this clause licenses removing."""
        if not self.strengthen[ctx]:
            raise ClauseCommandError("strgetpro with no strengthening result")
        self.strengthen[ctx] = False
        return self.lits[self.str_reason_slot[ctx]] ^ 1

    def clearreason(self, ctx: int):
        self.reason[ctx] = False
        self.implied_slot[ctx] = None

    def getreason(self, ctx: int, lit: int) -> bool:
        imp = self.implied_slot[ctx]
        return self.reason[ctx] and imp is not None and self.lits[imp] == lit

    def getlvlbits(self, ctx: int) -> int:
        return self.current[ctx]

    # -- generic dispatch --------------------------------------------------------

    def execute(self, cmd: Command) -> CommandOutput:
        k = cmd.kind
        ctx = cmd.context
        self._check_ctx(ctx)
        out = CommandOutput()
        if k is CommandKind.SETVAR:
            self.setvar(cmd.slot, cmd.lit)
        elif k is CommandKind.VALIDATE:
            self.validate(ctx, cmd.links, cmd.clear)
        elif k is CommandKind.CHKRES:
            self.chkres(ctx)
        elif k is CommandKind.GETVAR:
            out.read_data = self.getvar(cmd.slot)
        elif k is CommandKind.NOP:
            pass
        elif not self.valid[ctx]:
            pass  # invalid clauses ignore everything else
        elif k is CommandKind.PROVAR:
            self.provar(ctx, cmd.lit, cmd.current)
        elif k is CommandKind.GETPRO:
            out.read_data = self.getpro(ctx)
        elif k is CommandKind.CLEARVAR:
            self.clearvar(ctx, None if cmd.lit is None else lit_var(cmd.lit))
        elif k is CommandKind.COMPLETEDL:
            self.completedl(ctx)
        elif k is CommandKind.COPYSTR:
            self.copystr(ctx)
        elif k is CommandKind.STRPROVAR:
            self.strprovar(ctx, cmd.lit)
        elif k is CommandKind.STRGETPRO:
            out.read_data = self.strgetpro(ctx)
        elif k is CommandKind.CLEARREASON:
            self.clearreason(ctx)
        elif k is CommandKind.GETREASON:
            out.reason_match = self.getreason(ctx, cmd.lit)
        elif k is CommandKind.GETLVLBITS:
            out.read_data = self.getlvlbits(ctx)
        else:  # pragma: no cover
            raise ClauseCommandError(f"unknown command {k}")
        out.prop_flag = self.prop_pending[ctx]
        out.conflict_flag = self.conflict[ctx]
        out.strengthen_flag = self.strengthen[ctx]
        return out


def exchange_connectors(left: ClauseUnit, right: ClauseUnit, ctx: int) -> bool:
    """Deliver last cycle's connector assertions across one chain link.

    Returns True when a signal crossed (a chained propagation happened).
    """
    if left.connector_next is None or right.connector_prev is None:
        raise ClauseCommandError("units are not wired as a connector pair")
    ll = left.lits[left.connector_next]
    rl = right.lits[right.connector_prev]
    if ll != rl ^ 1:
        raise ClauseCommandError("connector slots do not hold opposite literals of one variable")
    from_left = left.connector_asserted[ctx] == ll
    from_right = right.connector_asserted[ctx] == rl
    if from_left:
        left.connector_asserted[ctx] = None
    if from_right:
        right.connector_asserted[ctx] = None
    # the neighbour's slot becomes assigned and disagreeing
    if from_left:
        right.provar(ctx, ll)
    if from_right:
        left.provar(ctx, rl)
    return from_left or from_right

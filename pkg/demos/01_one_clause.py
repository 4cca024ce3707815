"""A single clause unit, command by command.

Run with ``python3 demos/01_one_clause.py``.  Everything printed comes from
the unit's own flag outputs.
"""

from clausenet.clause_unit import ClauseUnit, exchange_connectors
from clausenet.cnf import lit_str, mklit

x0, x1, x2, x3, c = (mklit(v) for v in range(5))


def show(u, label):
    vals = []
    for slot, lit in enumerate(u.lits):
        if lit < 0:
            continue
        v = u.slot_value(0, slot)
        vals.append(f"{lit_str(lit)}={'?' if v is None else int(v)}")
    print(f"{label:<28} {' '.join(vals):<30} prop={int(u.prop_pending[0])} "
          f"conflict={int(u.conflict[0])}")


# load x0 | ~x1 | ~x2 into a 3-wide unit and validate it in context 0
u = ClauseUnit(width=3, num_contexts=1)
for slot, lit in enumerate([x0, x1 ^ 1, x2 ^ 1]):
    u.setvar(slot, lit)
u.validate(0)
show(u, "loaded")

u.provar(0, x0 ^ 1)        # decide ~x0
show(u, "after ~x0")
u.provar(0, x1)            # decide x1: one literal left, the unit fires
show(u, "after x1")
print("getpro ->", lit_str(u.getpro(0)), "(the unit is now the reason for it)")
show(u, "after getpro")

# its twin x0 | ~x1 | x2 sees the same decisions and wants x2 instead
twin = ClauseUnit(width=3, num_contexts=1)
for slot, lit in enumerate([x0, x1 ^ 1, x2]):
    twin.setvar(slot, lit)
twin.validate(0)
twin.provar(0, x0 ^ 1)
twin.provar(0, x1)
print("twin getpro ->", lit_str(twin.getpro(0)), "... both polarities of x2: a conflict")

# one-message backtrack: everything set during the current level goes at once
u.clearvar(0, None)
show(u, "after clearing the level")

# a four-literal clause split over two 3-wide units, joined by connector c
print()
left = ClauseUnit(3, 1)
right = ClauseUnit(3, 1)
for slot, lit in enumerate([x0, x1, c]):
    left.setvar(slot, lit)
for slot, lit in enumerate([c ^ 1, x2, x3]):
    right.setvar(slot, lit)
left.validate(0, links=(False, True))
right.validate(0, links=(True, False))
for lit in (x0 ^ 1, x1 ^ 1):
    left.provar(0, lit)
for lit in (x2 ^ 1, x3 ^ 1):
    right.provar(0, lit)
print("left asserts", lit_str(left.getpro(0)), "/ right asserts", lit_str(right.getpro(0)),
      "in the same cycle")
exchange_connectors(left, right, 0)
show(left, "left after the exchange")
show(right, "right after the exchange")
print("both halves now flag a conflict; the controller resolves it from the trail")

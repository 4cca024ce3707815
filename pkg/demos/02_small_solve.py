"""Watch the controller learn a clause on a three-clause formula.

Hooks on the central unit print the trail at every idle point and the
learned clause at each conflict.
"""

from clausenet.cnf import Formula, lit_str
from clausenet.sim import SimConfig, Simulator

f = Formula.from_dimacs_clauses(4, [[1, 2, 3], [2, -4], [-3, 4]])


class Narrator:
    def on_idle(self, central, c):
        trail = ", ".join(f"{lit_str(e.lit)}@{e.decision_level}" for e in c.trail.entries)
        print(f"  idle  level {c.trail.level}: [{trail}]")

    def on_conflict(self, central, c, session, clause, bt):
        print(f"  conflict on x{session.conflict.var}: learn "
              f"{' | '.join(lit_str(l) for l in clause)}, back to level {bt}")

    def on_strengthen(self, central, c, old, new):
        print(f"  strengthened {old} -> {new}")


sim = Simulator(f, SimConfig(grid=2, bank_size=64))
sim.central.recorder = Narrator()
st = sim.run()
print(f"{st.verdict} in {st.cycles} cycles, {st.decisions} decisions, {st.conflicts} conflicts")
print("model:", " ".join(f"x{i}={int(b)}" for i, b in enumerate(st.model)))
print("messages:", st.message_counts)

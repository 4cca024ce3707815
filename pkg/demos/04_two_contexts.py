"""Two execution contexts sharing one clause array.

While one context waits on the network (idle detection, learning waves) the
other keeps the clause units busy.  The first context to finish decides.
"""

import random

from clausenet.cnf import random_ksat
from clausenet.sim import SimConfig, run

print(f"{'seed':>4}{'conflicts':>11}{'util 1 ctx':>12}{'util 2 ctx':>12}{'cycles 1':>10}{'cycles 2':>10}")
for i in range(6):
    f = random_ksat(60, 256, rng=random.Random(50 + i))
    one, _ = run(SimConfig(), f)
    two, _ = run(SimConfig(contexts=2), f)
    print(f"{i:>4}{one.conflicts:>11}{one.utilization:>12.3f}{two.utilization:>12.3f}"
          f"{one.cycles:>10}{two.cycles:>10}  {one.verdict}, winner ctx {two.winner}")

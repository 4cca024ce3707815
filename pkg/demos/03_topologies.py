"""Mesh against flattened butterfly on a batch of random 3-SAT instances.

Same seeds and heuristics for both networks; only the wiring changes.
Takes about half a minute.
"""

import random

from clausenet.cnf import random_ksat
from clausenet.sim import SimConfig, compare_topologies

formulas = []
for i in range(40):
    nv = random.Random(i).randint(15, 25)
    formulas.append((f"r{i:02d}", random_ksat(nv, round(4.26 * nv), rng=random.Random(i))))

res = compare_topologies(SimConfig(), formulas)
wins = 0
print(f"{'instance':<10}{'mesh':>8}{'flatbfly':>10}{'ratio':>8}")
for r in res["rows"]:
    m, fb = r["cycles"]["mesh"], r["cycles"]["flatbfly"]
    wins += fb <= m
    print(f"{r['instance']:<10}{m:>8}{fb:>10}{fb / m:>8.3f}")
print(f"flattened butterfly no slower on {wins}/{len(formulas)}; "
      f"geomean ratio {res['geomean']['flatbfly']:.3f}")

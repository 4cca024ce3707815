"""Top-level cycle engine: wires banks, network and central, runs an instance.

Per cycle: banks step (accept, retire, emit), the network steps, each
context's idle tree is clocked, then the central unit acts.  When nothing
moves and only the idle tree is counting, the loop jumps ahead; the skipped
cycles are ones in which no component changes state.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

from .bank import ClauseBank
from .central import Central, SolverPolicy
from .cnf import Formula, split_clauses
from .noc.idle import IdleTree
from .noc.network import Network
from .noc.topology import MESH, Topology
from .oracle import CONFLICT, OracleError, SequentialCDCL, bcp_fixpoint, brute_force, implies

STATS_SCHEMA_VERSION = 1
DIRECT_IMPLIES_LIMIT = 40


class SimulationError(Exception):
    pass


@dataclass
class SimConfig:
    topology: str = MESH
    grid: int = 4
    bank_size: int = 1024
    width: int = 8
    contexts: int = 1
    seed: int = 0
    max_conflicts: int | None = 10000
    max_cycles: int | None = None
    buffer_depth: int = 4
    restart_unit: int = 100
    reduce_first: int = 2000
    reduce_inc: int = 300
    cancel_current: bool = True
    strengthen: bool = True
    trace: bool = False
    check: bool = False  # lock-step oracle checks at every idle point and conflict
    check_credits: bool = False
    check_idle: bool = False
    check_delivery: bool = False
    finish_all: bool = False  # keep going until every context has its own verdict

    def policy(self) -> SolverPolicy:
        return SolverPolicy(restart_unit=self.restart_unit, reduce_first=self.reduce_first,
                            reduce_inc=self.reduce_inc, cancel_current=self.cancel_current,
                            strengthen=self.strengthen, finish_all=self.finish_all)


@dataclass
class RunStats:
    verdict: str
    cycles: int
    decisions: int
    implications: int
    conflicts: int
    learned: int
    deleted: int
    cycles_per_implication: float | None
    clause_idle_fraction: float
    message_counts: dict
    cancel_messages: int = 0
    backtracks: int = 0
    strengthened: int = 0
    literals_removed: int = 0
    not_reason: int = 0
    proplits_received: int = 0
    bcp_cycles: int = 0
    winner: int | None = None
    per_context: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    model: list | None = None
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["schema_version"] = STATS_SCHEMA_VERSION
        return json.dumps(d, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in sorted(asdict(self).items()):
            if isinstance(v, (dict, list)) or v is None:
                continue
            w.writerow([k, v])
        for k, v in sorted(self.message_counts.items()):
            w.writerow([f"messages.{k}", v])
        return out.getvalue()

    @property
    def utilization(self) -> float:
        return 1.0 - self.clause_idle_fraction


class LockstepChecker:
    """Compares the simulator against the sequential oracles as it runs.

    * every idle point without a conflict: the trail equals the unit
      propagation fixed point of the context's clause database under its
      decisions, and every clause unit's assignment bits agree with the
      trail;
    * every conflict: the trail replays soundly in a sequential CDCL state
      (each reason clause unit at its turn), and that state's reverse-trail
      1-UIP analysis of the same conflict clause gives the same learned
      clause and backtrack level;
    * every learned and strengthened clause is implied by the clauses
      known so far (unit propagation refutes its negation) and, for
      formulas up to ``DIRECT_IMPLIES_LIMIT`` variables, by the formula
      itself (search refutation).
    """

    def __init__(self, split, banks=()):
        self.split = split
        self.banks = list(banks)
        self.known = list(split.base.clauses)
        self.idle_checks = 0
        self.conflict_checks = 0
        self.implied_checks = 0
        self.direct_checks = 0
        self.failures: list[str] = []
        self.failed = {"idle": 0, "conflict": 0, "implied": 0}

    def _fail(self, kind, msg):
        self.failed[kind] += 1
        self.failures.append(msg)

    def summary(self) -> dict:
        return dict(idle_checks=self.idle_checks, conflict_checks=self.conflict_checks,
                    implied_checks=self.implied_checks,
                    direct_checks=self.direct_checks, failures=len(self.failures),
                    idle_failures=self.failed["idle"],
                    conflict_failures=self.failed["conflict"],
                    implied_failures=self.failed["implied"])

    def on_idle(self, central, c):
        self.idle_checks += 1
        db = central.clauses_valid_in(c.cid)
        fp = bcp_fixpoint(db, c.trail.decisions())
        got = c.trail.lits()
        if fp == CONFLICT or fp != got:
            self._fail("idle", f"ctx {c.cid} idle at level {c.trail.level}: trail "
                                 f"{sorted(got)} vs fixed point {fp if fp == CONFLICT else sorted(fp)}")
        self._check_banks(c)

    def _check_banks(self, c):
        ctx, trail = c.cid, c.trail
        for b in self.banks:
            for addr, u in enumerate(b.units):
                if u is None or not u.valid[ctx]:
                    continue
                for slot, lit in enumerate(u.lits):
                    if lit < 0:
                        continue
                    want = trail.value(lit)
                    if u.slot_value(ctx, slot) != want:
                        self._fail(
                            "idle", f"ctx {ctx} level {trail.level}: unit ({b.node},{addr}) literal {lit} "
                            f"holds {u.slot_value(ctx, slot)}, trail says {want}")
                        return

    def _replay(self, central, c) -> SequentialCDCL:
        s = SequentialCDCL()
        for cl in central.split.base.clauses:
            s.add_clause(cl)
        for addr, lits in central.addr_lits.items():
            s.add_clause(lits, cid=addr)
        for e in c.trail.entries:
            if e.reason is None:
                s.decide(e.lit)
                continue
            lits = central.addr_lits.get(e.reason)
            if lits is None or e.lit not in lits:
                raise SimulationError(f"trail reason {e.reason} does not contain {e.lit}")
            for l in lits:
                if l != e.lit and s.value(l) is not False:
                    raise SimulationError(f"reason {lits} for {e.lit} is not unit on the trail")
            if s.value(e.lit) is not None:
                raise SimulationError(f"{e.lit} assigned twice")
            if s.decision_level != e.decision_level:
                raise SimulationError("trail decision levels out of step")
            s._enqueue(e.lit, e.reason)
        return s

    def on_conflict(self, central, c, session, clause, bt):
        self.conflict_checks += 1
        try:
            s = self._replay(central, c)
            for l in session.conflict_clause:
                if s.value(l) is not False:
                    raise SimulationError(f"conflict clause literal {l} not false")
            ref, ref_bt = s.analyze(session.conflict_clause)
            if set(ref) != set(clause) or ref[0] != clause[0] or ref_bt != bt:
                raise SimulationError(f"learned {clause}/bt {bt}, oracle {ref}/bt {ref_bt}")
        except (SimulationError, OracleError) as e:
            self._fail("conflict", f"ctx {c.cid} conflict {c.conflicts}: {e}")
        self._check_implied(clause)

    def on_strengthen(self, central, c, old, new):
        self._check_implied(new)

    def _check_implied(self, clause):
        self.implied_checks += 1
        ok = implies(self.known, clause, mode="rup")
        if ok and self.split.base.num_vars <= DIRECT_IMPLIES_LIMIT:
            ok = implies(self.split.base, clause, mode="search")
            self.direct_checks += 1
        if not ok:
            self._fail("implied", f"clause {clause} is not implied")
        self.known.append(tuple(clause))


class Simulator:
    def __init__(self, formula: Formula, config: SimConfig | None = None):
        self.config = cfg = config or SimConfig()
        if cfg.contexts not in (1, 2):
            raise ValueError("contexts must be 1 or 2")
        self.formula = formula
        self.split = split_clauses(formula, cfg.width)
        self.topo = Topology(cfg.topology, cfg.grid)
        n = self.topo.num_nodes
        capacity = n * cfg.bank_size
        if len(self.split.base.clauses) > capacity:
            raise SimulationError(f"{len(self.split.base.clauses)} clauses exceed the "
                                  f"capacity of {n} banks x {cfg.bank_size}")
        self.trace_rows = [] if cfg.trace else None
        self.net = Network(self.topo, cfg.buffer_depth, cfg.contexts,
                           check_credits=cfg.check_credits, trace=self.trace_rows,
                           audit=cfg.check_delivery)
        self.banks = [ClauseBank(i, cfg.bank_size, cfg.width, cfg.contexts) for i in range(n)]
        self.checker = LockstepChecker(self.split, self.banks) if cfg.check else None
        self.central = Central(self.split, self.net, n, cfg.bank_size, cfg.width, cfg.contexts,
                               cfg.policy(), cfg.seed, cfg.max_conflicts, recorder=self.checker)
        self.trees = [IdleTree(2 * n) for _ in range(cfg.contexts)]
        self.cycle = 0
        self.idle_violations = 0
        self.idle_asserts = 0

    def run(self) -> RunStats:
        cfg = self.config
        net, banks, central, trees = self.net, self.banks, self.central, self.trees
        eject = net.eject
        nctx = cfg.contexts
        t = 0
        max_cycles = cfg.max_cycles
        while central.verdict is None:
            if max_cycles is not None and t >= max_cycles:
                central.verdict = "UNKNOWN"
                break
            t += 1
            busy = False
            for b in banks:
                if b.pipeline or b.loopback or b.emitq or b.links_due or eject[b.node]:
                    b.step(t, net)
                    busy = True
            net.step(t)
            idle = []
            for c in range(nctx):
                leaves = net.busy_total[c] == 0 and all(b.idle(c) for b in banks)
                out = trees[c].step(leaves)
                if out:
                    self.idle_asserts += 1
                    if cfg.check_idle and net.recount_inflight(c):
                        self.idle_violations += 1
                idle.append(out)
            central.step(t, idle)
            # fast-forward through cycles where only the idle trees count
            if (not busy and not net.pending_events() and not net.central_eject
                    and not any(c.outq for c in central.ctxs)
                    and not any(b.has_work() or eject[b.node] for b in banks)):
                waiting = [trees[c.cid].cycles_until_assert() for c in central.ctxs
                           if c.phase not in ("done", "wait_load")]
                waiting = [w for w in waiting if w > 1]
                if waiting and all(all(b.idle(c) for b in banks) for c in range(nctx)):
                    skip = min(waiting) - 1
                    for tr in trees:
                        tr.streak += skip
                    t += skip
        self.cycle = t
        return self.stats()

    def stats(self) -> RunStats:
        central = self.central
        ctxs = central.ctxs
        tot = {}
        for c in ctxs:
            for k, v in c.stats.items():
                tot[k] = tot.get(k, 0) + v
        impl = tot["implications"]
        busy = sum(b.busy_cycles for b in self.banks)
        denom = max(1, self.cycle) * len(self.banks)
        verdict = central.verdict or "UNKNOWN"
        model = None
        for c in ctxs:
            if c.verdict == "SAT" and not self.formula.satisfied_by([bool(x) for x in c.model]):
                raise SimulationError(f"context {c.cid} model does not satisfy the formula")
        if verdict == "SAT":
            model = [bool(x) for x in ctxs[central.winner].model]
        checks = {}
        if self.checker is not None:
            checks = self.checker.summary()
        if self.config.check_delivery:
            errs = self.net.audit_errors + self.net.audit_undelivered()
            checks["delivered"] = self.net.delivered
            checks["delivery_errors"] = len(errs)
        if self.config.check_idle:
            checks["idle_asserts"] = self.idle_asserts
            checks["idle_violations"] = self.idle_violations
        return RunStats(
            verdict=verdict, cycles=self.cycle, decisions=tot["decisions"],
            implications=impl, conflicts=tot["conflicts"], learned=tot["learned"],
            deleted=central.deleted,
            cycles_per_implication=(tot["bcp_cycles"] / impl) if impl else None,
            clause_idle_fraction=1.0 - busy / denom,
            message_counts=dict(sorted(self.net.injected_by_kind.items())),
            cancel_messages=tot["cancel_messages"], backtracks=tot["backtracks"],
            strengthened=tot["strengthened"], literals_removed=tot["literals_removed"],
            not_reason=tot["not_reason"], proplits_received=tot["proplits_received"],
            bcp_cycles=tot["bcp_cycles"], winner=central.winner,
            per_context=[dict(sorted(c.stats.items()), unabsorbed=len(c.inbox), verdict=c.verdict)
                         for c in ctxs],
            checks=checks, model=model, diagnostics=list(central.diagnostics))

    def trace_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["cycle", "kind", "src", "dst", "fields"])
        for row in self.trace_rows or ():
            w.writerow(row)
        return out.getvalue()


def run(config: SimConfig, formula: Formula) -> tuple[RunStats, Simulator]:
    """Simulate one instance.  Verdicts on formulas of at most 25 variables are
    cross-checked against exhaustive search."""
    sim = Simulator(formula, config)
    stats = sim.run()
    verdicts = {c["verdict"] for c in stats.per_context} | {stats.verdict}
    verdicts &= {"SAT", "UNSAT"}
    if len(verdicts) > 1:
        raise SimulationError(f"contexts disagree: {sorted(verdicts)}")
    if formula.num_vars <= 25 and verdicts:
        ref = brute_force(formula).verdict
        if verdicts != {ref}:
            raise SimulationError(f"verdict {stats.verdict} but exhaustive search says {ref}")
    return stats, sim


def geomean(xs) -> float:
    xs = list(xs)
    return math.exp(sum(math.log(x) for x in xs) / len(xs)) if xs else float("nan")


def compare_topologies(config: SimConfig, formulas, topologies=("mesh", "flatbfly")) -> dict:
    """Cycle counts per instance and topology, normalised to the first topology."""
    from dataclasses import replace
    rows = []
    for name, f in formulas:
        cycles = {}
        for topo in topologies:
            st, _ = run(replace(config, topology=topo), f)
            cycles[topo] = st.cycles
        base = cycles[topologies[0]]
        rows.append(dict(instance=name, cycles=cycles,
                         normalized={k: v / base for k, v in cycles.items()}))
    gm = {k: geomean(r["normalized"][k] for r in rows) for k in topologies}
    return dict(rows=rows, geomean=gm)

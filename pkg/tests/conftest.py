"""Shared corpus, session-scoped corpus runs and the acceptance report."""

import random
import time
from dataclasses import dataclass, field

import pytest

from clausenet.cnf import pigeonhole, random_ksat
from clausenet.oracle import brute_force
from clausenet.sim import SimConfig, Simulator

RANDOM_INSTANCES = 500
PIGEONHOLE_N = (1, 2, 3, 4)

# criterion number -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_corpus(n=RANDOM_INSTANCES):
    """Random 3-SAT, 10 to 25 variables, clause/variable ratio 3.0 to 5.0."""
    out = []
    for i in range(n):
        nv = random.Random(i).randint(10, 25)
        ratio = random.Random(1000 + i).uniform(3.0, 5.0)
        out.append((f"r3sat_{i:03d}", random_ksat(nv, round(nv * ratio), rng=random.Random(i))))
    return out


def full_corpus():
    return random_corpus() + [(f"php_{n + 1}_{n}", pigeonhole(n + 1, n)) for n in PIGEONHOLE_N]


@dataclass
class InstanceRun:
    name: str
    expected: str
    verdict: str | None = None
    stats: object = None
    backtrack_log: list = field(default_factory=list)
    error: str | None = None
    credits_ok: bool = True
    per_context_verdicts: list = field(default_factory=list)


@dataclass
class CorpusRun:
    runs: list
    seconds: float

    @property
    def stats(self):
        return [r.stats for r in self.runs if r.stats is not None]

    def mismatches(self):
        return [r for r in self.runs if r.error or r.verdict != r.expected]


def run_corpus(corpus, **cfg) -> CorpusRun:
    t0 = time.perf_counter()
    runs = []
    for name, f in corpus:
        r = InstanceRun(name, brute_force(f).verdict)
        try:
            sim = Simulator(f, SimConfig(**cfg))
            st = sim.run()
            r.stats, r.verdict = st, st.verdict
            r.backtrack_log = [x for c in sim.central.ctxs for x in c.backtrack_log]
            r.per_context_verdicts = [c["verdict"] for c in st.per_context]
            if cfg.get("check_credits"):
                try:
                    sim.net.check_all_credits()
                except AssertionError as e:
                    r.credits_ok = False
                    r.error = f"credits: {e}"
        except Exception as e:  # recorded as a failed instance
            r.error = f"{type(e).__name__}: {e}"
        runs.append(r)
    return CorpusRun(runs, time.perf_counter() - t0)


CHECKED = dict(check=True, check_credits=True, check_idle=True, check_delivery=True)


@pytest.fixture(scope="session")
def corpus():
    return full_corpus()


@pytest.fixture(scope="session")
def mesh_checked(corpus):
    return run_corpus(corpus, topology="mesh", **CHECKED)


@pytest.fixture(scope="session")
def flatbfly_checked(corpus):
    return run_corpus(corpus, topology="flatbfly", **CHECKED)


@pytest.fixture(scope="session")
def mesh_no_current_bit(corpus):
    return run_corpus(corpus, topology="mesh", cancel_current=False)


@pytest.fixture(scope="session")
def two_context(corpus):
    return run_corpus(corpus, topology="mesh", contexts=2, finish_all=True)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

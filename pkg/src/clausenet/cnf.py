"""CNF formulas: DIMACS I/O, fixed-width clause splitting, and problem statistics.

Literals are plain ints: ``2 * var + neg`` where ``var`` is 0-based and
``neg`` is 1 for a negated literal.  ``lit ^ 1`` negates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

VAR_BITS = 20
MAX_VARS = 1 << VAR_BITS


class DimacsError(ValueError):
    pass


class CapacityError(DimacsError):
    pass


def mklit(var: int, positive: bool = True) -> int:
    return 2 * var + (0 if positive else 1)


def lit_var(lit: int) -> int:
    return lit >> 1


def lit_positive(lit: int) -> bool:
    return not (lit & 1)


def neg(lit: int) -> int:
    return lit ^ 1


def from_dimacs(d: int) -> int:
    return mklit(abs(d) - 1, d > 0)


def to_dimacs(lit: int) -> int:
    v = lit_var(lit) + 1
    return v if lit_positive(lit) else -v


def lit_str(lit: int) -> str:
    return ("x%d" if lit_positive(lit) else "~x%d") % lit_var(lit)


def normalize_clause(lits) -> tuple[int, ...] | None:
    """Deduplicate literals, keeping first-occurrence order.  None for a tautology."""
    seen: set[int] = set()
    out = []
    for lit in lits:
        if lit ^ 1 in seen:
            return None
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


@dataclass
class Formula:
    num_vars: int
    clauses: list[tuple[int, ...]]
    raw_clause_count: int | None = None

    def __post_init__(self):
        if self.raw_clause_count is None:
            self.raw_clause_count = len(self.clauses)

    @classmethod
    def from_clauses(cls, num_vars: int, clauses) -> "Formula":
        """Build from literal-code clauses, applying the parse-time cleanup."""
        kept = []
        raw = 0
        for c in clauses:
            raw += 1
            c = normalize_clause(c)
            if c is None:
                continue
            if not c:
                raise DimacsError("empty clause")
            kept.append(c)
        return cls(num_vars, kept, raw)

    @classmethod
    def from_dimacs_clauses(cls, num_vars: int, clauses) -> "Formula":
        return cls.from_clauses(num_vars, [[from_dimacs(d) for d in c] for c in clauses])

    def dimacs_clauses(self) -> list[list[int]]:
        return [[to_dimacs(l) for l in c] for c in self.clauses]

    def satisfied_by(self, model) -> bool:
        """``model`` maps var -> bool (sequence or dict)."""
        for c in self.clauses:
            if not any(model[lit_var(l)] == lit_positive(l) for l in c):
                return False
        return True


def parse_dimacs(text: str | bytes) -> Formula:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    header = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("c"):
            continue
        if s.startswith("%"):
            break
        if s.startswith("p"):
            if header is not None:
                raise DimacsError(f"line {lineno}: duplicate header")
            parts = s.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed header {s!r}")
            try:
                nv, nc = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed header {s!r}") from None
            if nv < 0 or nc < 0:
                raise DimacsError(f"line {lineno}: negative counts in header")
            if nv >= MAX_VARS:
                raise CapacityError(
                    f"{nv} variables do not fit the {VAR_BITS}-bit variable field")
            header = (nv, nc)
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before 'p cnf' header")
        for tok in s.split():
            try:
                d = int(tok)
            except ValueError:
                raise DimacsError(f"line {lineno}: bad literal {tok!r}") from None
            if d == 0:
                clauses.append(cur)
                cur = []
            else:
                if abs(d) > header[0]:
                    raise DimacsError(
                        f"line {lineno}: literal {d} exceeds declared {header[0]} variables")
                cur.append(d)
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if cur:
        raise DimacsError("unterminated final clause (missing trailing 0)")
    if len(clauses) != header[1]:
        raise DimacsError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Formula.from_dimacs_clauses(header[0], clauses)


def write_dimacs(f: Formula, comment: str | None = None) -> str:
    out = io.StringIO()
    if comment:
        for line in comment.splitlines():
            out.write(f"c {line}\n")
    out.write(f"p cnf {f.num_vars} {len(f.clauses)}\n")
    for c in f.dimacs_clauses():
        out.write(" ".join(map(str, c)) + " 0\n")
    return out.getvalue()


# -- fixed-width splitting ---------------------------------------------------

@dataclass
class SplitFormula:
    base: Formula
    width: int
    original_num_vars: int
    connector_vars: set[int] = field(default_factory=set)
    origin_map: list[int] = field(default_factory=list)
    # (left clause index, right clause index, connector var) for each chain link
    links: list[tuple[int, int, int]] = field(default_factory=list)

    def chains(self) -> list[list[int]]:
        """Split-clause indices grouped by original clause, in chain order."""
        groups: dict[int, list[int]] = {}
        for i, o in enumerate(self.origin_map):
            groups.setdefault(o, []).append(i)
        return list(groups.values())


def split_clause(lits, width: int, next_var: int) -> tuple[list[tuple[int, ...]], list[int]]:
    """Split one clause into a linear chain.  Returns (pieces, new connector vars).

    Connector ``c_i`` sits last (positive) in piece ``i`` and first (negated)
    in piece ``i + 1``.
    """
    if width < 3:
        raise ValueError("width must be at least 3")
    lits = list(lits)
    L = len(lits)
    if L <= width:
        return [tuple(lits)], []
    k = math.ceil((L - 2) / (width - 2))
    pieces = []
    conns = []
    pos = 0
    for i in range(k):
        piece = []
        if i > 0:
            piece.append(mklit(conns[-1], False))
        room = width - (1 if i == 0 or i == k - 1 else 2)
        if i == k - 1:
            room = L - pos
        piece.extend(lits[pos:pos + room])
        pos += room
        if i < k - 1:
            c = next_var + len(conns)
            conns.append(c)
            piece.append(mklit(c, True))
        pieces.append(tuple(piece))
    assert pos == L and all(len(p) <= width for p in pieces)
    return pieces, conns


def split_clauses(f: Formula, width: int = 8) -> SplitFormula:
    if width < 3:
        raise ValueError("width must be at least 3 (one payload literal plus two connectors)")
    out: list[tuple[int, ...]] = []
    origin: list[int] = []
    links = []
    conn_vars: set[int] = set()
    nv = f.num_vars
    for ci, c in enumerate(f.clauses):
        pieces, conns = split_clause(c, width, nv)
        nv += len(conns)
        base = len(out)
        for j, p in enumerate(pieces):
            out.append(p)
            origin.append(ci)
            if j > 0:
                links.append((base + j - 1, base + j, conns[j - 1]))
        conn_vars.update(conns)
    if nv >= MAX_VARS:
        raise CapacityError(f"splitting needs {nv} variables, beyond the {VAR_BITS}-bit field")
    return SplitFormula(Formula(nv, out, len(out)), width, f.num_vars, conn_vars, origin, links)


# -- characterization --------------------------------------------------------

@dataclass
class CharStats:
    clause_length_percentiles: dict[float, int]
    var_popularity_percentiles: dict[float, int]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["percentile", "clause_length", "var_popularity"])
        for p in self.clause_length_percentiles:
            w.writerow([p, self.clause_length_percentiles[p], self.var_popularity_percentiles[p]])
        return out.getvalue()

    def table(self) -> str:
        lines = [f"{'percentile':>10}  {'clause len':>10}  {'var pop':>8}"]
        for p in self.clause_length_percentiles:
            lines.append(f"{100 * p:>9.2f}%  {self.clause_length_percentiles[p]:>10}"
                         f"  {self.var_popularity_percentiles[p]:>8}")
        return "\n".join(lines)


DEFAULT_PERCENTILES = (0.5, 0.9, 0.99, 0.999, 0.9999, 1.0)


def _rank(sorted_vals, p):
    n = len(sorted_vals)
    idx = max(1, math.ceil(p * n)) - 1
    return sorted_vals[min(idx, n - 1)]


def characterize(f: Formula, percentiles=DEFAULT_PERCENTILES) -> CharStats:
    if not f.clauses:
        raise ValueError("cannot characterize an empty formula")
    for p in percentiles:
        if not 0 < p <= 1:
            raise ValueError(f"percentile {p} outside (0, 1]")
    lengths = sorted(len(c) for c in f.clauses)
    counts = [0] * f.num_vars
    for c in f.clauses:
        for lit in c:
            counts[lit_var(lit)] += 1
    pops = sorted(counts)
    return CharStats({p: _rank(lengths, p) for p in percentiles},
                     {p: _rank(pops, p) for p in percentiles})


# -- generators used by tests and demos ----------------------------------------

def random_ksat(num_vars: int, num_clauses: int, k: int = 3, rng=None) -> Formula:
    """Uniform random k-SAT with distinct variables per clause."""
    import random
    rng = rng if rng is not None else random.Random(0)
    clauses = []
    for _ in range(num_clauses):
        vs = rng.sample(range(num_vars), k)
        clauses.append(tuple(mklit(v, rng.random() < 0.5) for v in vs))
    return Formula(num_vars, clauses)


def pigeonhole(pigeons: int, holes: int) -> Formula:
    """PHP(pigeons, holes): var p*holes + h means pigeon p sits in hole h."""
    def x(p, h):
        return p * holes + h
    clauses = [tuple(mklit(x(p, h)) for h in range(holes)) for p in range(pigeons)]
    for h in range(holes):
        for p in range(pigeons):
            for q in range(p + 1, pigeons):
                clauses.append((mklit(x(p, h), False), mklit(x(q, h), False)))
    return Formula(pigeons * holes, clauses)

"""Grid topologies and dimension-order broadcast routes.

Nodes are numbered ``y * n + x``.  Every router has one clause bank
attached; the central unit shares the router at ``(n // 2, n // 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

MESH = "mesh"
FLATTENED_BUTTERFLY = "flatbfly"

LOCAL = -1    # port to/from the bank at this router
CENTRAL = -2  # port to/from the central unit (centre router only)


@dataclass(frozen=True)
class Topology:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (MESH, FLATTENED_BUTTERFLY):
            raise ValueError(f"unknown topology {self.kind!r}")
        if self.n < 1:
            raise ValueError("grid must be at least 1x1")

    @property
    def num_nodes(self) -> int:
        return self.n * self.n

    @property
    def center(self) -> int:
        return self.node(self.n // 2, self.n // 2)

    def node(self, x: int, y: int) -> int:
        return y * self.n + x

    def coords(self, node: int) -> tuple[int, int]:
        return node % self.n, node // self.n

    def neighbors(self, node: int) -> list[int]:
        x, y = self.coords(node)
        n = self.n
        if self.kind == MESH:
            out = []
            for dx, dy in ((0, -1), (-1, 0), (1, 0), (0, 1)):
                if 0 <= x + dx < n and 0 <= y + dy < n:
                    out.append(self.node(x + dx, y + dy))
            return sorted(out)
        row = {self.node(i, y) for i in range(n)}
        col = {self.node(x, j) for j in range(n)}
        return sorted((row | col) - {node})

    def degree(self, node: int) -> int:
        """Router channels per direction, counting the local bank port."""
        return len(self.neighbors(node)) + 1

    def link_delay(self, a: int, b: int) -> int:
        (ax, ay), (bx, by) = self.coords(a), self.coords(b)
        return abs(ax - bx) + abs(ay - by)

    # -- routing -------------------------------------------------------------

    def broadcast_next(self, node: int, origin: int, prev: int | None) -> list[int]:
        """Routers a broadcast flit is forwarded to from ``node``.

        Row first: at the origin the flit fans out along its row and its
        column; routers reached along the row fan out along their column;
        routers reached along a column forward only down that column.
        """
        x, y = self.coords(node)
        if self.kind == MESH:
            if prev is None:
                dirs = [(-1, 0), (1, 0), (0, -1), (0, 1)]
            else:
                px, py = self.coords(prev)
                d = (x - px, y - py)
                dirs = [d, (0, -1), (0, 1)] if d[1] == 0 else [d]
            out = []
            for dx, dy in dirs:
                if 0 <= x + dx < self.n and 0 <= y + dy < self.n:
                    out.append(self.node(x + dx, y + dy))
            return out
        col = [self.node(x, j) for j in range(self.n) if j != y]
        if prev is None:
            return [self.node(i, y) for i in range(self.n) if i != x] + col
        if self.coords(prev)[1] == y:  # arrived along the row
            return col
        return []

    def unicast_next(self, node: int, dest: int) -> int:
        """Next router towards ``dest`` (x first, then y)."""
        x, y = self.coords(node)
        dx, dy = self.coords(dest)
        if self.kind == MESH:
            if x != dx:
                return self.node(x + (1 if dx > x else -1), y)
            return self.node(x, y + (1 if dy > y else -1))
        if x != dx:
            return self.node(dx, y)
        return self.node(x, dy)


def hop_cycles(topo: Topology, a: int, b: int) -> int:
    """One router cycle plus the wire delay."""
    return 1 + topo.link_delay(a, b)


def route_broadcast(topo: Topology, src: int) -> dict[int, int]:
    """Cycle at which a broadcast injected at ``src`` (cycle 0) reaches each router.

    Contention-free; the source itself is not included.
    """
    if not 0 <= src < topo.num_nodes:
        raise ValueError(f"node {src} not in a {topo.n}x{topo.n} grid")
    arrival: dict[int, int] = {}
    frontier = [(src, None, 0)]
    while frontier:
        nxt = []
        for node, prev, t in frontier:
            for m in topo.broadcast_next(node, src, prev):
                if m in arrival or m == src:
                    raise AssertionError("broadcast tree reached a router twice")
                arrival[m] = t + hop_cycles(topo, node, m)
                nxt.append((m, node, arrival[m]))
        frontier = nxt
    return arrival

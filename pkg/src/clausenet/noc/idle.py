"""AND-tree global idle detection.

Leaves are per-bank and per-router idle bits for one context.  The tree is
``ceil(log2(leaves))`` register stages deep, so an all-idle condition takes
that many cycles to reach the root.  Any busy leaf pulls the root low in
the same cycle: deassertion is combinational, so the root never reports
idle while something is in flight.
"""

from __future__ import annotations

import math


def tree_depth(num_leaves: int) -> int:
    return max(0, math.ceil(math.log2(num_leaves))) if num_leaves > 1 else 0


class IdleTree:
    def __init__(self, num_leaves: int):
        if num_leaves < 1:
            raise ValueError("idle tree needs at least one leaf")
        self.num_leaves = num_leaves
        self.depth = tree_depth(num_leaves)
        self.streak = 0  # consecutive cycles with every leaf idle
        self.output = False

    def step(self, all_idle: bool) -> bool:
        """Clock the tree once with this cycle's AND of the leaves."""
        if all_idle:
            self.streak += 1
        else:
            self.streak = 0
        self.output = self.streak > self.depth
        return self.output

    def step_leaves(self, leaves) -> bool:
        leaves = list(leaves)
        if len(leaves) != self.num_leaves:
            raise ValueError(f"expected {self.num_leaves} leaf bits, got {len(leaves)}")
        return self.step(all(leaves))

    def cycles_until_assert(self) -> int:
        """Further all-idle cycles needed before the root asserts."""
        return max(0, self.depth + 1 - self.streak)


def idle_detect(trace, depth: int | None = None) -> list[bool]:
    """Root output for a per-cycle sequence of leaf-bit vectors.

    The first cycle where every leaf is idle counts as cycle 0 of the wait;
    the root asserts ``depth`` cycles later.
    """
    trace = [list(v) for v in trace]
    if not trace:
        return []
    tree = IdleTree(len(trace[0]))
    if depth is not None:
        tree.depth = depth
    return [tree.step_leaves(v) for v in trace]

"""Cycle-level simulation of a clause-array SAT accelerator.

Fixed-width clause units sit in banks on a broadcast network; a central
controller runs CDCL over them (decisions, distributed propagation, clause
learning, backtracking and strengthening).  Sequential oracles check every
result.
"""

__version__ = "0.1.0"

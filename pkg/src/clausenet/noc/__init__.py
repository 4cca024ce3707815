"""Network-on-chip: message formats, topologies, routers and idle detection."""

from .idle import IdleTree, idle_detect, tree_depth
from .messages import (ALL_VARS, BROADCAST, COPYSTR_LIT, MAX_LEVEL, NO_ADDR, TO_CENTRAL,
                       TO_SOURCE, FieldOverflow, Flit, Kind, Message, decode, deserialize,
                       encode, message_bits, serialize)
from .network import CreditError, Network
from .topology import FLATTENED_BUTTERFLY, MESH, Topology, hop_cycles, route_broadcast

__all__ = [
    "ALL_VARS", "BROADCAST", "COPYSTR_LIT", "MAX_LEVEL", "NO_ADDR", "TO_CENTRAL", "TO_SOURCE",
    "FieldOverflow", "Flit", "Kind", "Message", "decode", "deserialize", "encode",
    "message_bits", "serialize", "CreditError", "Network", "IdleTree", "idle_detect",
    "tree_depth", "FLATTENED_BUTTERFLY", "MESH", "Topology", "hop_cycles", "route_broadcast",
]

"""Crash-tolerant asynchronous approximate consensus with k-hop relays:
condition checkers, protocol state machines and a deterministic simulator."""

from .conditions import Partition, Verdict, check_cca, check_kcca, oracle_kcca, propagates
from .graph import DiGraph, complete, example_g, random_digraph, ring, two_cliques
from .metrics import alpha_k, analyze, message_bound, phase_bound
from .protocols import LBC, LWA, KLocWA, LocWA, ProtocolKind, StrongKLocWA
from .sim import Constant, CrashEvent, PerEdgeTable, Script, SeededRandom, StopRule, Trace, necessity_demo, run

__version__ = "0.1.0"

__all__ = [
    "Constant", "CrashEvent", "DiGraph", "KLocWA", "LBC", "LWA", "LocWA", "Partition", "PerEdgeTable",
    "ProtocolKind", "Script", "SeededRandom", "StopRule", "StrongKLocWA", "Trace", "Verdict", "alpha_k",
    "analyze", "check_cca", "check_kcca", "complete", "example_g", "message_bound", "necessity_demo",
    "oracle_kcca", "phase_bound", "propagates", "random_digraph", "ring", "run", "two_cliques",
]

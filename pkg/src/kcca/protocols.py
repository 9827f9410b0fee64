"""Per-node state machines for LocWA, k-LocWA, Strong k-LocWA, LWA and LBC.

Every transition is a function ``(state, event) -> TransitionOutput`` that
leaves its input untouched, so the simulator can drive any protocol the same
way and keep old states around for inspection.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

from .graph import DiGraph, iter_subsets, k_hop_in_view, reach_k

VALUE = "value"
LEARN = "learn"

_KINDS = ("locwa", "klocwa", "strong-klocwa", "lwa", "lbc")


@dataclass(frozen=True)
class ProtocolKind:
    name: str
    k: int = 1

    def __post_init__(self):
        if self.name not in _KINDS:
            raise ValueError(f"unknown protocol {self.name!r}; expected one of {_KINDS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.name == "locwa" and self.k != 1:
            raise ValueError("LocWA has relay depth 1")

    @property
    def floods(self) -> bool:
        return self.name in ("lwa", "lbc")

    def relay_depth(self, n: int) -> int:
        return n if self.floods else self.k

    @classmethod
    def parse(cls, text: str, k: int | None = None) -> "ProtocolKind":
        """Accepts ``locwa``, ``klocwa:2``, ``strong-klocwa:3``, ``lwa``, ``lbc``."""
        name, _, rest = text.strip().lower().replace("_", "-").partition(":")
        aliases = {"k-locwa": "klocwa", "strong": "strong-klocwa", "strongklocwa": "strong-klocwa",
                   "strong-k-locwa": "strong-klocwa"}
        name = aliases.get(name, name)
        if rest:
            k = int(rest)
        if name in ("klocwa", "strong-klocwa"):
            if k is None:
                raise ValueError(f"{name} needs k")
            return cls(name, int(k))
        return cls(name)

    def __str__(self):
        return f"{self.name}:{self.k}" if self.name in ("klocwa", "strong-klocwa") else self.name


def LocWA() -> ProtocolKind:
    return ProtocolKind("locwa")


def KLocWA(k: int) -> ProtocolKind:
    return ProtocolKind("klocwa", k)


def StrongKLocWA(k: int) -> ProtocolKind:
    return ProtocolKind("strong-klocwa", k)


def LWA() -> ProtocolKind:
    return ProtocolKind("lwa")


def LBC() -> ProtocolKind:
    return ProtocolKind("lbc")


@dataclass(frozen=True)
class EstGraph:
    """A partial view of G: some nodes and some directed edges among them."""

    nodes: frozenset = frozenset()
    edges: frozenset = frozenset()

    @classmethod
    def star_into(cls, nbrs, i) -> "EstGraph":
        """G_{N=>i}: nodes N + {i}, edges j->i for j in N."""
        nbrs = frozenset(nbrs)
        return cls(nbrs | {i}, frozenset((j, i) for j in nbrs))

    @classmethod
    def undirected_star(cls, nbrs, i) -> "EstGraph":
        nbrs = frozenset(nbrs)
        edges = frozenset((j, i) for j in nbrs) | frozenset((i, j) for j in nbrs)
        return cls(nbrs | {i}, edges)

    def __or__(self, other: "EstGraph") -> "EstGraph":
        return EstGraph(self.nodes | other.nodes, self.edges | other.edges)

    def reach_into(self, i: int, removed=frozenset()) -> frozenset:
        """Nodes with a directed path to ``i`` avoiding ``removed`` (any length)."""
        ins: dict = {}
        for u, v in self.edges:
            ins.setdefault(v, []).append(u)
        seen = {i}
        queue = deque([i])
        while queue:
            x = queue.popleft()
            for y in ins.get(x, ()):
                if y not in seen and y not in removed:
                    seen.add(y)
                    queue.append(y)
        seen.discard(i)
        return frozenset(seen)


@dataclass(frozen=True)
class Message:
    kind: str
    source: int
    phase: int
    value: float | None = None
    hop_budget: int = 0
    in_nbrs: frozenset | None = None
    graph: EstGraph | None = None

    def __post_init__(self):
        if self.hop_budget < 0:
            raise ValueError("hop budget must be non-negative")


@dataclass(frozen=True)
class LocalView:
    """What node ``i`` knows about the topology before the run starts."""

    node: int
    n: int
    in_nbrs: frozenset
    out_nbrs: frozenset
    khop: DiGraph | None = None  # edges on paths of length <= k into the node


def local_view(g: DiGraph, i: int, kind: ProtocolKind) -> LocalView:
    if kind.name == "lbc" and not g.undirected:
        raise ValueError("LBC runs on undirected graphs only")
    khop = k_hop_in_view(g, i, kind.k) if kind.name in ("klocwa", "strong-klocwa") else None
    return LocalView(i, g.n, g.in_nbrs(i), g.out_nbrs(i), khop)


@dataclass
class NodeState:
    id: int
    phase: int
    value: float
    R: list = field(default_factory=list)
    heard: set = field(default_factory=set)
    est: EstGraph = field(default_factory=EstGraph)
    seen: set = field(default_factory=set)
    relayed: dict = field(default_factory=dict)
    future: list = field(default_factory=list)
    learning: bool = False
    crashed: bool = False

    def copy(self) -> "NodeState":
        return replace(
            self,
            R=list(self.R),
            heard=set(self.heard),
            seen=set(self.seen),
            relayed=dict(self.relayed),
            future=list(self.future),
        )


@dataclass(frozen=True)
class TransitionOutput:
    new_state: NodeState
    sends: tuple = ()
    phase_advanced: bool = False


# -- wait conditions ---------------------------------------------------------


def wait_1(heard, in_nbrs, f: int) -> bool:
    """At most f one-hop in-neighbors are still unheard."""
    in_nbrs = frozenset(in_nbrs)
    return len(in_nbrs & frozenset(heard)) >= len(in_nbrs) - f


def find_wait_k(heard, view: DiGraph, i: int, f: int, k: int):
    """Smallest-first F within the k-hop in-neighborhood with |F| <= f whose
    surviving k-hop reach is fully heard; None if there is none."""
    heard = frozenset(heard)
    cand = reach_k(view, i, (), k)
    for F in iter_subsets(cand, f):
        if reach_k(view, i, F, k) <= heard:
            return frozenset(F)
    return None


def wait_k(heard, view: DiGraph, i: int, f: int, k: int) -> bool:
    return find_wait_k(heard, view, i, f, k) is not None


def wait_strong(heard, view: DiGraph, i: int, f: int, k: int) -> bool:
    """Any of 1-WAIT .. k-WAIT."""
    if wait_1(heard, view.in_nbrs(i), f):
        return True
    return any(wait_k(heard, view, i, f, j) for j in range(2, k + 1))


def find_wait_lwa(est: EstGraph, i: int, heard, f: int):
    heard = frozenset(heard)
    for F in iter_subsets(est.nodes - {i}, f):
        if est.reach_into(i, frozenset(F)) <= heard:
            return frozenset(F)
    return None


def wait_lwa(est: EstGraph, i: int, heard, f: int) -> bool:
    """Some F of at most f estimated nodes (not i) leaves only heard nodes
    with a path to i in the estimated graph minus F."""
    return find_wait_lwa(est, i, heard, f) is not None


def wait_holds(s: NodeState, view: LocalView, kind: ProtocolKind, f: int) -> bool:
    if kind.name == "locwa":
        return wait_1(s.heard, view.in_nbrs, f)
    if kind.name == "klocwa":
        return wait_k(s.heard, view.khop, s.id, f, kind.k)
    if kind.name == "strong-klocwa":
        return wait_strong(s.heard, view.khop, s.id, f, kind.k)
    return wait_lwa(s.est, s.id, s.heard, f)


# -- transitions -------------------------------------------------------------


def mean(values) -> float:
    """Multiset average, clamped to [min, max] against float rounding."""
    avg = math.fsum(values) / len(values)
    return min(max(avg, min(values)), max(values))


def initial_state(view: LocalView, kind: ProtocolKind, value: float) -> NodeState:
    return NodeState(id=view.node, phase=0 if kind.name == "lbc" else 1, value=float(value))


def _value_message(s: NodeState, view: LocalView, kind: ProtocolKind) -> Message:
    budget = view.n - 1 if kind.floods else kind.k - 1
    nbrs = view.in_nbrs if kind.name == "lwa" else None
    return Message(VALUE, s.id, s.phase, s.value, budget, nbrs)


def on_phase_enter(s: NodeState, view: LocalView, kind: ProtocolKind) -> TransitionOutput:
    """Reset the phase bookkeeping, broadcast the current value and replay
    buffered messages that belong to the new phase."""
    if s.crashed:
        return TransitionOutput(s)
    t = s.copy()
    t.R = [t.value]
    t.heard = {t.id}
    if kind.name == "lwa":
        t.est = EstGraph.star_into(view.in_nbrs, t.id)
    msg = _value_message(t, view, kind)
    sends = [(j, msg) for j in sorted(view.out_nbrs)]
    keep = []
    for m in t.future:
        if m.phase == t.phase:
            _record(t, m, kind)
        elif m.phase > t.phase:
            keep.append(m)
    t.future = keep
    return TransitionOutput(t, tuple(sends))


def start(view: LocalView, kind: ProtocolKind, value: float) -> TransitionOutput:
    """State and first sends of a node at time zero."""
    s = initial_state(view, kind, value)
    if kind.name == "lbc":
        return lbc_step(s, None, view)
    return on_phase_enter(s, view, kind)


def _record(t: NodeState, m: Message, kind: ProtocolKind) -> None:
    key = (m.source, m.phase)
    if key in t.seen:
        return
    t.seen.add(key)
    t.R.append(m.value)
    t.heard.add(m.source)
    if kind.name == "lwa" and m.in_nbrs is not None:
        t.est = t.est | EstGraph.star_into(m.in_nbrs, m.source)


def _relay(t: NodeState, m: Message, view: LocalView, kind: ProtocolKind) -> list:
    if m.source == t.id or m.hop_budget <= 0:
        return []
    key = (m.source, m.phase)
    nb = m.hop_budget - 1
    if kind.floods:
        if key in t.relayed:
            return []
    elif nb <= t.relayed.get(key, -1):
        return []
    t.relayed[key] = nb
    fwd = replace(m, hop_budget=nb)
    return [(j, fwd) for j in sorted(view.out_nbrs)]


def on_receive(s: NodeState, m: Message, view: LocalView, kind: ProtocolKind) -> TransitionOutput:
    """Relay per the protocol's depth, then record, buffer or ignore ``m``.

    Messages from earlier phases are still relayed but never touch R/heard;
    messages from later phases are buffered until the node gets there.
    """
    if s.crashed:
        return TransitionOutput(s)
    if m.kind == LEARN:
        return lbc_step(s, m, view)
    t = s.copy()
    sends = _relay(t, m, view, kind)
    if m.source != t.id:
        if m.phase > t.phase:
            t.future.append(m)
        elif m.phase == t.phase and not t.learning:
            _record(t, m, kind)
    return TransitionOutput(t, tuple(sends))


def try_update(s: NodeState, view: LocalView, kind: ProtocolKind, f: int) -> TransitionOutput:
    """Average R and move to the next phase if the protocol's wait test holds."""
    if s.crashed or s.learning or not wait_holds(s, view, kind, f):
        return TransitionOutput(s)
    t = s.copy()
    t.value = mean(t.R)
    t.phase += 1
    out = on_phase_enter(t, view, kind)
    return TransitionOutput(out.new_state, out.sends, True)


def lbc_step(s: NodeState, msg: Message | None, view: LocalView) -> TransitionOutput:
    """Learn phase of LBC.

    With ``msg=None`` the node starts from its one-hop star; each Learn
    message is merged into the estimate, which is re-sent when it grew.
    Once n nodes are known the node enters consensus phase 1 on the learned
    graph.
    """
    if s.crashed:
        return TransitionOutput(s)
    kind = ProtocolKind("lbc")
    t = s.copy()
    if msg is None:
        t.learning = True
        t.est = EstGraph.undirected_star(view.in_nbrs | view.out_nbrs, t.id)
        grew = True
    else:
        if not t.learning:
            return TransitionOutput(s)
        merged = t.est | msg.graph
        grew = merged != t.est
        t.est = merged
    sends = []
    if grew:
        learn = Message(LEARN, t.id, 0, graph=t.est)
        sends = [(j, learn) for j in sorted(view.out_nbrs)]
    if len(t.est.nodes) >= view.n:
        t.learning = False
        t.phase = 1
        out = on_phase_enter(t, view, kind)
        return TransitionOutput(out.new_state, tuple(sends) + out.sends)
    return TransitionOutput(t, tuple(sends))


__all__ = [
    "EstGraph",
    "LBC",
    "LWA",
    "LocWA",
    "KLocWA",
    "LocalView",
    "Message",
    "NodeState",
    "ProtocolKind",
    "StrongKLocWA",
    "TransitionOutput",
    "find_wait_k",
    "find_wait_lwa",
    "lbc_step",
    "local_view",
    "mean",
    "on_phase_enter",
    "on_receive",
    "start",
    "try_update",
    "wait_1",
    "wait_k",
    "wait_lwa",
    "wait_strong",
]

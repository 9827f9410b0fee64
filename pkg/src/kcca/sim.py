"""Deterministic round-based simulator with adversarial delays and crashes."""

from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import graph as gmod
from . import protocols as proto
from .conditions import check_cca
from .graph import DiGraph
from .protocols import ProtocolKind

DEFAULT_MAX_ROUNDS = 10**6
WILDCARD = "*"


class SimulationError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


class HeardSetViolation(InvariantViolation):
    pass


# -- delay scenarios ---------------------------------------------------------


class DelayScenario:
    """delay(edge, send_round, phase) -> rounds until delivery (>= 1)."""

    def __call__(self, edge: tuple, send_round: int, phase: int) -> int:
        d = self.delay(edge, send_round, phase)
        if not isinstance(d, int) or d < 1:
            raise SimulationError(f"delay must be a positive integer, got {d!r} for {edge}")
        return d

    def delay(self, edge, send_round, phase) -> int:
        raise NotImplementedError

    def max_delay(self) -> int | None:
        return None

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(DelayScenario):
    c: int = 1

    def __post_init__(self):
        if not isinstance(self.c, int) or self.c < 1:
            raise SimulationError("constant delay must be a positive integer")

    def delay(self, edge, send_round, phase):
        return self.c

    def max_delay(self):
        return self.c

    def describe(self):
        return {"variant": "constant", "c": self.c}


@dataclass(frozen=True)
class PerEdgeTable(DelayScenario):
    table: dict
    default: int = 1

    def delay(self, edge, send_round, phase):
        return self.table.get(tuple(edge), self.default)

    def max_delay(self):
        return max([self.default, *self.table.values()])

    def describe(self):
        rows = [[i, j, d] for (i, j), d in sorted(self.table.items())]
        return {"variant": "table", "default": self.default, "table": rows}


@dataclass(frozen=True)
class SeededRandom(DelayScenario):
    lo: int
    hi: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.lo <= self.hi:
            raise SimulationError("need 1 <= lo <= hi")

    def delay(self, edge, send_round, phase):
        i, j = edge
        rng = random.Random(f"{self.seed}/{i}/{j}/{send_round}/{phase}")
        return rng.randint(self.lo, self.hi)

    def max_delay(self):
        return self.hi

    def describe(self):
        return {"variant": "random", "min": self.lo, "max": self.hi, "seed": self.seed}


@dataclass(frozen=True)
class Rule:
    """Match on (src, dst, send_round, phase); ``None`` fields are wildcards."""

    delay: int
    src: int | None = None
    dst: int | None = None
    send_round: int | None = None
    phase: int | None = None

    def matches(self, edge, send_round, phase) -> bool:
        return (
            (self.src is None or self.src == edge[0])
            and (self.dst is None or self.dst == edge[1])
            and (self.send_round is None or self.send_round == send_round)
            and (self.phase is None or self.phase == phase)
        )


@dataclass(frozen=True)
class Script(DelayScenario):
    """First matching rule wins, otherwise ``default``."""

    rules: tuple
    default: int = 1

    def delay(self, edge, send_round, phase):
        for rule in self.rules:
            if rule.matches(edge, send_round, phase):
                return rule.delay
        return self.default

    def max_delay(self):
        return max([self.default, *(r.delay for r in self.rules)])

    def describe(self):
        def w(x):
            return WILDCARD if x is None else x

        rules = [
            {"src": w(r.src), "dst": w(r.dst), "round": w(r.send_round), "phase": w(r.phase), "delay": r.delay}
            for r in self.rules
        ]
        return {"variant": "script", "default": self.default, "rules": rules}


# -- crashes / stop / trace --------------------------------------------------


@dataclass(frozen=True)
class CrashEvent:
    """``node`` stops during ``round``.

    It still takes its round step, but only the sends produced in that round
    addressed to ``recipients`` leave (none by default). Sends from earlier
    rounds stay in flight.
    """

    node: int
    round: int
    recipients: frozenset = frozenset()


@dataclass(frozen=True)
class StopRule:
    max_rounds: int = DEFAULT_MAX_ROUNDS
    epsilon: float | None = None


@dataclass
class Trace:
    config: dict
    values: dict  # node -> [v[0], v[1], ...]
    completion: dict  # node -> [0, round phase 1 done, ...]
    events: list
    crashed_at: dict = field(default_factory=dict)
    learn_round: dict = field(default_factory=dict)
    heard_log: dict = field(default_factory=dict)  # (node, phase) -> frozenset
    status: str = "running"
    final_round: int = 0
    p_eps: int | None = None
    eps_round: int | None = None
    messages_sent: int = 0

    @property
    def n(self) -> int:
        return len(self.values)

    def completed_phase(self, i: int) -> int:
        return len(self.values[i]) - 1

    def phase_values(self, p: int) -> dict:
        """v_j[p] for every node that computed it."""
        return {i: vs[p] for i, vs in self.values.items() if len(vs) > p}

    def gap(self, p: int) -> float | None:
        vals = list(self.phase_values(p).values())
        return max(vals) - min(vals) if vals else None

    def complete_phases(self) -> int:
        """Largest p such that every node has v[p] or crashed before computing it."""
        last = []
        for i, vs in self.values.items():
            if i not in self.crashed_at:
                last.append(len(vs) - 1)
        return min(last) if last else 0

    def records(self) -> list:
        out = [{"type": "config", **self.config}]
        out.extend(self.events)
        out.append(self.summary())
        return out

    def summary(self) -> dict:
        return {
            "type": "summary",
            "status": self.status,
            "final_round": self.final_round,
            "p_eps": self.p_eps,
            "eps_round": self.eps_round,
            "messages_sent": self.messages_sent,
            "crashed": {str(i): r for i, r in sorted(self.crashed_at.items())},
            "phases_completed": {str(i): len(vs) - 1 for i, vs in sorted(self.values.items())},
            "final_values": {str(i): vs[-1] for i, vs in sorted(self.values.items())},
        }

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records())


# -- engine ------------------------------------------------------------------


def _validate(g: DiGraph, kind: ProtocolKind, f: int, inputs, crashes):
    if g.n < 1:
        raise SimulationError("empty graph")
    if len(inputs) != g.n:
        raise SimulationError(f"expected {g.n} inputs, got {len(inputs)}")
    if any(not math.isfinite(float(x)) for x in inputs):
        raise SimulationError("inputs must be finite reals")
    if f < 0:
        raise SimulationError("f must be non-negative")
    if len(crashes) > f:
        raise SimulationError(f"{len(crashes)} crash events exceed f={f}")
    nodes = [c.node for c in crashes]
    if len(set(nodes)) != len(nodes):
        raise SimulationError("a node can crash only once")
    for c in crashes:
        if not 0 <= c.node < g.n:
            raise SimulationError(f"crash of unknown node {c.node}")
        if c.round < 0:
            raise SimulationError("crash round must be >= 0")
        bad = set(c.recipients) - set(g.out_nbrs(c.node))
        if bad:
            raise SimulationError(f"crash recipients {sorted(bad)} are not out-neighbors of {c.node}")
    if kind.name == "lbc" and not g.undirected:
        raise SimulationError("LBC needs an undirected graph")
    if kind.name in ("klocwa", "strong-klocwa") and kind.k > g.n:
        raise SimulationError("k must not exceed n")


def run(
    g: DiGraph,
    kind: ProtocolKind,
    f: int,
    inputs: Sequence[float],
    delay: DelayScenario | Callable = Constant(1),
    crashes: Sequence[CrashEvent] = (),
    stop: StopRule = StopRule(),
    *,
    seed: int | None = None,
    check_heard: bool | None = None,
) -> Trace:
    """Drive every node's state machine round by round.

    Each round delivers the messages due in it (ordered by send round,
    sender, recipient, then send order), lets each live node process them
    and attempt one update, applies crashes, and schedules new sends at
    ``round + delay``. Rounds in which nothing can happen are skipped.
    Stops on epsilon-convergence of a completed phase, at ``max_rounds``,
    or when nothing is left in flight.
    """
    crashes = tuple(crashes)
    _validate(g, kind, f, inputs, crashes)
    n = g.n
    inputs = [float(x) for x in inputs]
    lo, hi = min(inputs), max(inputs)
    views = [proto.local_view(g, i, kind) for i in g.nodes]
    if check_heard is None:
        check_heard = kind.floods and n <= 10 and check_cca(g, f).holds

    config = {
        "graph": gmod.dumps(g),
        "kind": str(kind),
        "f": f,
        "k": kind.relay_depth(n),
        "inputs": inputs,
        "delays": delay.describe() if hasattr(delay, "describe") else repr(delay),
        "crashes": [{"node": c.node, "round": c.round, "recipients": sorted(c.recipients)} for c in crashes],
        "stop": {"max_rounds": stop.max_rounds, "epsilon": stop.epsilon},
        "seed": seed,
    }
    trace = Trace(config, {i: [inputs[i]] for i in g.nodes}, {i: [0] for i in g.nodes}, [])
    ev = trace.events
    crash_of = {c.node: c for c in crashes}
    crashed = [False] * n
    states: list = [None] * n
    queue: dict = defaultdict(list)
    seq = 0
    dirty: set = set()
    checked = 0

    def schedule(r, sender, sends):
        nonlocal seq
        for dst, m in sends:
            if not g.has_edge(sender, dst):
                raise InvariantViolation(f"node {sender} sent to non-neighbor {dst}")
            d = delay((sender, dst), r, m.phase)
            seq += 1
            queue[r + d].append((r, sender, dst, seq, m))
            trace.messages_sent += 1
            ev.append({"type": "send", "round": r, "deliver": r + d, "from": sender, "to": dst,
                       "kind": m.kind, "origin": m.source, "phase": m.phase, "hops_left": m.hop_budget})

    def on_update(i, before, after, r):
        p = before.phase
        v = after.value
        if not lo <= v <= hi:
            raise InvariantViolation(f"validity: node {i} phase {p} value {v} outside [{lo}, {hi}]")
        if len(trace.values[i]) != p:
            raise InvariantViolation(f"node {i} skipped a phase")
        trace.values[i].append(v)
        if r <= trace.completion[i][-1] and p > 1:
            raise InvariantViolation(f"node {i} completion rounds not increasing")
        trace.completion[i].append(r)
        heard = frozenset(before.heard)
        trace.heard_log[(i, p)] = heard
        ev.append({"type": "update", "round": r, "node": i, "phase": p, "value": v,
                   "heard": sorted(heard), "R_size": len(before.R)})
        if check_heard:
            for j in g.nodes:
                other = trace.heard_log.get((j, p))
                if j != i and other is not None and not heard & other:
                    raise HeardSetViolation(
                        f"phase {p}: heard sets of {g.label(i)} {g.names(heard)} and "
                        f"{g.label(j)} {g.names(other)} are disjoint (round {r})"
                    )

    def check_est(i, s):
        if kind.floods and not s.est.edges <= g.edges:
            raise InvariantViolation(f"node {i} estimated an edge not in G: {sorted(s.est.edges - g.edges)}")

    def log_records(i, before, after, r):
        if len(after.seen) > len(before.seen):
            for src, p in sorted(after.seen - before.seen):
                ev.append({"type": "record", "round": r, "node": i, "origin": src, "phase": p})

    r = 0
    while True:
        batch = sorted(queue.pop(r, []), key=lambda t: (t[0], t[1], t[2], t[3]))
        inbox = defaultdict(list)
        for item in batch:
            inbox[item[2]].append(item)
        advanced = set()
        for i in g.nodes:
            if crashed[i]:
                for sr, sender, _, _, m in inbox.get(i, ()):
                    ev.append({"type": "drop", "round": r, "from": sender, "to": i,
                               "origin": m.source, "phase": m.phase})
                continue
            sends = []
            if r == 0:
                out = proto.start(views[i], kind, inputs[i])
                states[i] = out.new_state
                sends.extend(out.sends)
                log_records(i, proto.NodeState(i, 0, 0.0), states[i], r)
                if kind.name == "lbc" and not states[i].learning:
                    trace.learn_round[i] = r
            for sr, sender, _, _, m in inbox.get(i, ()):
                ev.append({"type": "deliver", "round": r, "from": sender, "to": i, "kind": m.kind,
                           "origin": m.source, "phase": m.phase, "sent": sr})
                before = states[i]
                out = proto.on_receive(before, m, views[i], kind)
                states[i] = out.new_state
                sends.extend(out.sends)
                log_records(i, before, states[i], r)
                check_est(i, states[i])
                if kind.name == "lbc" and before.learning and not states[i].learning:
                    trace.learn_round[i] = r
                    ev.append({"type": "learned", "round": r, "node": i})
            before = states[i]
            out = proto.try_update(before, views[i], kind, f)
            if out.phase_advanced:
                states[i] = out.new_state
                sends.extend(out.sends)
                on_update(i, before, states[i], r)
                log_records(i, before, states[i], r)
                check_est(i, states[i])
                advanced.add(i)
            c = crash_of.get(i)
            if c is not None and c.round == r:
                sends = [(dst, m) for dst, m in sends if dst in c.recipients]
                crashed[i] = True
                states[i].crashed = True
                trace.crashed_at[i] = r
                ev.append({"type": "crash", "round": r, "node": i, "final_recipients": sorted(c.recipients)})
            schedule(r, i, sends)
        # crash events for nodes that did not act this round
        for c in crashes:
            if c.round == r and not crashed[c.node]:
                crashed[c.node] = True
                trace.crashed_at[c.node] = r
                ev.append({"type": "crash", "round": r, "node": c.node, "final_recipients": []})

        while not all(crashed):
            nxt = checked + 1
            done = all(crashed[i] or len(trace.values[i]) > nxt for i in g.nodes)
            if not done:
                break
            checked = nxt
            gap = trace.gap(nxt)
            if gap is not None and stop.epsilon is not None and trace.p_eps is None and gap <= stop.epsilon:
                trace.p_eps = nxt
                trace.eps_round = r
        trace.final_round = r
        if trace.p_eps is not None:
            trace.status = "converged"
            break
        dirty = advanced
        candidates = [x for x in queue if x > r]
        if dirty:
            candidates.append(r + 1)
        candidates += [c.round for c in crashes if c.round > r and not crashed[c.node]]
        if not candidates:
            trace.status = "quiescent"
            break
        nr = min(candidates)
        if nr > stop.max_rounds:
            trace.status = "max_rounds"
            trace.final_round = stop.max_rounds
            break
        r = nr
    return trace


def necessity_demo(
    eps_prime: float = 1.0,
    max_rounds: int = 500,
    kind: ProtocolKind | None = None,
    cross_delay: int | None = None,
    epsilon: float | None = None,
) -> Trace:
    """Ring of four split into {a, b} and {c, d}; every edge crossing the
    split is slowed to ``cross_delay`` rounds (by default past ``max_rounds``,
    so nothing crosses during the run)."""
    g = gmod.ring(4)
    kind = kind or proto.LocWA()
    a, b, c, d = range(4)
    cross = cross_delay if cross_delay is not None else max_rounds + 1
    table = {e: cross for e in [(b, c), (c, b), (d, a), (a, d)]}
    return run(
        g, kind, 1, [0.0, 0.0, eps_prime, eps_prime], PerEdgeTable(table, 1), (),
        StopRule(max_rounds=max_rounds, epsilon=epsilon),
    )


__all__ = [
    "Constant",
    "CrashEvent",
    "DelayScenario",
    "HeardSetViolation",
    "InvariantViolation",
    "PerEdgeTable",
    "Rule",
    "Script",
    "SeededRandom",
    "SimulationError",
    "StopRule",
    "Trace",
    "necessity_demo",
    "run",
]

"""Property suites over generated corpora, shared by the CLI and the tests.

Each suite returns a :class:`SuiteResult`; a non-empty ``failures`` list holds
complete counterexample descriptions.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import graph as gmod
from .conditions import (
    check_cca,
    check_kcca,
    oracle_kcca,
    propagates,
    witness_violates,
)
from .graph import DiGraph
from .metrics import analyze
from .protocols import LBC, LWA, KLocWA, LocWA, ProtocolKind, StrongKLocWA
from .sim import Constant, CrashEvent, SeededRandom, StopRule, run

EPS = 1e-3
PROBS = (0.3, 0.5, 0.7, 0.9)


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, msg: str) -> None:
        self.failures.append(msg)


def digraph_corpus(count: int, n_max: int, seed: int, n_min: int = 3) -> list:
    """``count`` random digraphs with n in [n_min, n_max], cycling densities."""
    rng = random.Random(seed)
    out = []
    for t in range(count):
        n = rng.randint(n_min, n_max)
        out.append(gmod.random_digraph(n, PROBS[t % len(PROBS)], rng.randrange(2**31)))
    return out


def undirected_corpus(n_max: int, seed: int, count: int = 60) -> list:
    rng = random.Random(seed)
    out = [gmod.ring(4), gmod.ring(5), gmod.complete(3), gmod.complete(5), gmod.two_cliques(8, 3)]
    for t in range(count):
        n = rng.randint(3, n_max)
        out.append(gmod.random_graph(n, PROBS[t % len(PROBS)], rng.randrange(2**31)))
    return out


def structured_corpus() -> list:
    """Small named graphs where the k=1 and k=2 conditions differ."""
    return [
        gmod.ring(4),
        gmod.ring(5),
        gmod.ring(6),
        gmod.example_g(),
        gmod.two_cliques(6, 1),
        gmod.two_cliques(6, 2),
        gmod.two_cliques(6, 3),
        gmod.complete(4),
        gmod.path_graph(4),
    ]


def _desc(g: DiGraph) -> str:
    return gmod.dumps(g).replace("\n", "; ")


def conditions_suite(n_max: int = 6, seed: int = 0, count: int = 200, fs=(0, 1, 2), oracle: bool = True) -> SuiteResult:
    """k-CCA monotone in k, CCA == n-CCA, checker == oracle, sound witnesses,
    and CCA == ((f+1)-connected and n > 2f) on undirected graphs."""
    res = SuiteResult("conditions")
    extra = [g for g in structured_corpus() if g.n <= max(n_max, 6)]
    for g in extra + digraph_corpus(count, n_max, seed):
        for f in fs:
            ks = sorted(set(range(1, g.n + 1)))
            verdicts = {k: check_kcca(g, f, k) for k in ks}
            for k in ks:
                v = verdicts[k]
                res.checked += 1
                if not v.holds and not witness_violates(g, v):
                    res.fail(f"witness does not violate: f={f} k={k} {v} graph {_desc(g)}")
                if oracle:
                    o = oracle_kcca(g, f, k)
                    if o.holds != v.holds:
                        res.fail(f"oracle disagrees: f={f} k={k} checker={v.holds} oracle={o.holds} graph {_desc(g)}")
            for k, k2 in itertools.combinations(ks, 2):
                if verdicts[k].holds and not verdicts[k2].holds:
                    res.fail(f"monotonicity: {k}-CCA holds, {k2}-CCA fails, f={f} graph {_desc(g)}")
            if check_cca(g, f).holds != verdicts[g.n].holds:
                res.fail(f"CCA != n-CCA at f={f} graph {_desc(g)}")
    for g in undirected_corpus(min(n_max + 2, 8), seed):
        kappa = gmod.vertex_connectivity(g)
        for f in fs:
            res.checked += 1
            want = kappa >= f + 1 and g.n > 2 * f
            if check_cca(g, f).holds != want:
                res.fail(f"undirected equivalence: f={f} kappa={kappa} graph {_desc(g)}")
    return res


def lemma1_suite(n_max: int = 6, seed: int = 0, count: int = 200, fs=(0, 1, 2)) -> SuiteResult:
    """On k-CCA graphs every 2-partition propagates one way or the other in
    at most n-f-1 steps."""
    res = SuiteResult("lemma1")
    extra = [g for g in structured_corpus() if g.n <= max(n_max, 6)]
    for g in extra + digraph_corpus(count, n_max, seed):
        nodes = frozenset(g.nodes)
        for f in fs:
            for k in sorted({1, 2, g.n}):
                if not check_kcca(g, f, k).holds:
                    continue
                for r in range(1, g.n):
                    for A in itertools.combinations(range(g.n), r):
                        A = frozenset(A)
                        B = nodes - A
                        res.checked += 1
                        seqs = [s for s in (propagates(g, A, B, f, k), propagates(g, B, A, f, k)) if s]
                        if not seqs:
                            res.fail(f"neither side propagates: A={sorted(A)} f={f} k={k} graph {_desc(g)}")
                        for s in seqs:
                            if s.l > g.n - f - 1:
                                res.fail(f"sequence too long l={s.l} > {g.n - f - 1}: f={f} k={k} graph {_desc(g)}")
    return res


@dataclass(frozen=True)
class Battery:
    """One simulated scenario of the standard battery."""

    name: str
    g: DiGraph
    kind: ProtocolKind
    f: int
    inputs: tuple
    delays: object
    crashes: tuple = ()

    def run(self, max_rounds: int = 200000):
        return run(self.g, self.kind, self.f, self.inputs, self.delays, self.crashes, StopRule(max_rounds, EPS))


def _random_crash(rng, g, f):
    if f == 0:
        return ()
    node = rng.randrange(g.n)
    outs = sorted(g.out_nbrs(node))
    keep = frozenset(x for x in outs if rng.random() < 0.5)
    return (CrashEvent(node, rng.randint(0, 6), keep),)


def bounds_battery(count: int = 24, seed: int = 0, n_max: int = 6) -> list:
    """ring(4) base case plus random k-CCA scenarios (f=1); every third one
    has a crash with a partial final broadcast."""
    rng = random.Random(seed)
    out = [Battery("ring4/klocwa2/const1", gmod.ring(4), KLocWA(2), 1, (0.0, 0.0, 1.0, 1.0), Constant(1))]
    t = 0
    while len(out) < count + 1:
        t += 1
        n = rng.randint(4, n_max)
        g = gmod.random_digraph(n, rng.choice((0.6, 0.75, 0.9)), rng.randrange(2**31))
        f = 1
        ks = [k for k in (1, 2, 3) if check_kcca(g, f, k).holds]
        if not ks:
            continue
        k = ks[0] if rng.random() < 0.5 else ks[-1]
        kind = LocWA() if k == 1 else KLocWA(k)
        inputs = tuple(round(rng.uniform(-5, 5), 3) for _ in range(n))
        crashes = _random_crash(rng, g, f) if len(out) % 3 == 0 else ()
        out.append(Battery(f"random#{t}/{kind}", g, kind, f, inputs, SeededRandom(1, 4, rng.randrange(1000)), crashes))
    return out


def bounds_suite(count: int = 24, seed: int = 0, n_max: int = 6) -> SuiteResult:
    """p_eps <= phase bound and messages <= message bound with exact alpha."""
    res = SuiteResult("bounds")
    for b in bounds_battery(count, seed, n_max):
        tr = b.run()
        rep = analyze(tr, EPS, b.g, b.kind.k)
        res.checked += 1
        line = f"{b.name}: p_eps={rep.p_epsilon} bound={rep.phase_bound} msgs={rep.messages_to_eps} mbound={rep.message_bound}"
        res.notes.append(line)
        if not rep.validity_ok:
            res.fail(f"validity broken: {line}")
        if rep.within_phase_bound is not True:
            res.fail(f"phase bound: {line} status={tr.status}")
        if rep.within_message_bound is not True:
            res.fail(f"message bound: {line}")
    return res


def lwa_battery(count: int = 20, seed: int = 0, n_max: int = 6) -> list:
    """Random directed CCA graphs (f=1) under LWA, some with a crash."""
    rng = random.Random(seed)
    out = []
    t = 0
    while len(out) < count:
        t += 1
        n = rng.randint(4, n_max)
        g = gmod.random_digraph(n, rng.choice((0.5, 0.7, 0.9)), rng.randrange(2**31))
        if not check_cca(g, 1).holds:
            continue
        inputs = tuple(round(rng.uniform(0, 10), 3) for _ in range(n))
        crashes = _random_crash(rng, g, 1) if len(out) % 2 else ()
        out.append(Battery(f"lwa#{t}", g, LWA(), 1, inputs, SeededRandom(1, 5, rng.randrange(1000)), crashes))
    return out


def lwa_suite(count: int = 20, seed: int = 0, n_max: int = 6) -> SuiteResult:
    """Heard-set intersection (checked online by the simulator), estimated
    graph within G (also online), convergence and validity."""
    res = SuiteResult("lwa")
    for b in lwa_battery(count, seed, n_max):
        tr = b.run()
        rep = analyze(tr, EPS)
        res.checked += 1
        if tr.status != "converged":
            res.fail(f"{b.name} did not converge: {tr.status}")
        if not rep.validity_ok:
            res.fail(f"{b.name} validity broken")
        pairs = _heard_pairs_ok(tr)
        if pairs is not True:
            res.fail(f"{b.name}: {pairs}")
    return res


def _heard_pairs_ok(tr):
    by_phase: dict = {}
    for (i, p), h in tr.heard_log.items():
        by_phase.setdefault(p, []).append((i, h))
    for p, rows in by_phase.items():
        for (i, hi), (j, hj) in itertools.combinations(rows, 2):
            if not hi & hj:
                return f"phase {p}: heard sets of {i} and {j} disjoint"
    return True


def lbc_battery(seed: int = 0, random_count: int = 6) -> list:
    rng = random.Random(seed)
    out = [
        Battery("lbc/ring4", gmod.ring(4), LBC(), 1, (0.0, 0.0, 1.0, 1.0), Constant(1)),
        Battery("lbc/ring4/crash-a", gmod.ring(4), LBC(), 1, (0.0, 0.0, 1.0, 1.0), Constant(1), (CrashEvent(0, 0),)),
        Battery("lbc/two_cliques", gmod.two_cliques(8, 3), LBC(), 1, tuple(float(i) for i in range(8)),
                SeededRandom(1, 3, 5)),
        Battery("lbc/two_cliques/crash", gmod.two_cliques(8, 3), LBC(), 2, tuple(float(i) for i in range(8)),
                SeededRandom(1, 3, 9), (CrashEvent(0, 1, frozenset({1})), CrashEvent(5, 3))),
    ]
    t = 0
    while len(out) < 4 + random_count:
        t += 1
        n = rng.randint(4, 8)
        g = gmod.random_graph(n, rng.choice((0.6, 0.8)), rng.randrange(2**31))
        f = 1
        if not check_cca(g, f).holds:
            continue
        inputs = tuple(round(rng.uniform(0, 1), 4) for _ in range(n))
        crashes = _random_crash(rng, g, f) if t % 2 else ()
        out.append(Battery(f"lbc/random#{t}", g, LBC(), f, inputs, SeededRandom(1, 3, rng.randrange(1000)), crashes))
    return out


def lbc_suite(seed: int = 0) -> SuiteResult:
    """Learn phase done within n * (max delay) rounds at every live node, then
    epsilon-convergence with validity."""
    res = SuiteResult("lbc")
    for b in lbc_battery(seed):
        tr = b.run()
        res.checked += 1
        limit = b.g.n * (b.delays.max_delay() or 1)
        for i in b.g.nodes:
            if i in tr.crashed_at:
                continue
            lr = tr.learn_round.get(i)
            if lr is None or lr > limit:
                res.fail(f"{b.name}: node {i} learn round {lr} > {limit}")
        if tr.status != "converged":
            res.fail(f"{b.name} did not converge: {tr.status}")
        if not analyze(tr, EPS).validity_ok:
            res.fail(f"{b.name} validity broken")
    return res


def strong_dominance(g: DiGraph, f: int, inputs, delays, ks) -> dict:
    """Rounds to epsilon-convergence of Strong k-LocWA for each k."""
    out = {}
    for k in ks:
        tr = run(g, StrongKLocWA(k), f, inputs, delays, (), StopRule(200000, EPS))
        out[k] = tr.eps_round
    return out


SUITES = {
    "conditions": conditions_suite,
    "lemma1": lemma1_suite,
    "bounds": bounds_suite,
    "lwa": lwa_suite,
    "lbc": lbc_suite,
}

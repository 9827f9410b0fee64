"""Arrow relations, the k-CCA / CCA checkers, propagation sequences and a
brute-force oracle used to cross-check them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .graph import DiGraph, GraphError, max_disjoint_bounded_paths

ORACLE_GUARD = 10

L_SIDE, C_SIDE, R_SIDE = 0, 1, 2


class ConditionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    L: frozenset
    C: frozenset
    R: frozenset

    def __post_init__(self):
        if self.L & self.C or self.L & self.R or self.C & self.R:
            raise ConditionError("partition parts must be disjoint")

    def as_record(self, g: DiGraph | None = None) -> dict:
        if g is None:
            return {"L": sorted(self.L), "C": sorted(self.C), "R": sorted(self.R)}
        return {"L": g.names(self.L), "C": g.names(self.C), "R": g.names(self.R)}


@dataclass(frozen=True)
class Verdict:
    holds: bool
    f: int
    k: int | None  # None for CCA
    witness: Partition | None = None

    def as_record(self, g: DiGraph | None = None) -> dict:
        return {
            "holds": self.holds,
            "k": "cca" if self.k is None else self.k,
            "f": self.f,
            "witness": None if self.witness is None else self.witness.as_record(g),
        }


@dataclass(frozen=True)
class PropagationSequence:
    steps: tuple  # ((A_0, B_0), ..., (A_l, B_l))

    @property
    def l(self) -> int:
        return len(self.steps) - 1


def _pair(A, B):
    A, B = frozenset(A), frozenset(B)
    if not A or not B:
        raise ConditionError("sets must be non-empty")
    if A & B:
        raise ConditionError("sets must be disjoint")
    return A, B


# -- relations ---------------------------------------------------------------


def arrow(g: DiGraph, A, B, f: int) -> bool:
    """Some node of B has at least f+1 in-neighbors in A."""
    A, B = _pair(A, B)
    return any(len(g.in_nbrs(i) & A) >= f + 1 for i in B)


class _PathCache:
    """Memoizes ``max_disjoint_bounded_paths >= f+1`` per (source set, node)."""

    def __init__(self, g: DiGraph, f: int, k: int):
        self.g, self.f, self.k = g, f, k
        self.memo: dict = {}

    def enough(self, A: frozenset, i: int) -> bool:
        key = (A, i)
        hit = self.memo.get(key)
        if hit is None:
            if len(A) < self.f + 1 or len(self.g.in_nbrs(i)) < self.f + 1:
                hit = False
            else:
                got = max_disjoint_bounded_paths(self.g, A, i, self.k, target=self.f + 1)
                hit = got >= self.f + 1
            self.memo[key] = hit
        return hit


def arrow_k(g: DiGraph, A, B, f: int, k: int) -> bool:
    A, B = _pair(A, B)
    if k < 1:
        raise ConditionError("k must be >= 1")
    cache = _PathCache(g, f, k)
    return any(cache.enough(A, i) for i in sorted(B))


def in_set_k(g: DiGraph, A, B, f: int, k: int) -> frozenset:
    """Nodes of B reached by at least f+1 disjoint paths of length <= k from A."""
    A, B = _pair(A, B)
    if k < 1:
        raise ConditionError("k must be >= 1")
    cache = _PathCache(g, f, k)
    return frozenset(i for i in B if cache.enough(A, i))


def point(g: DiGraph, A, B, x: int) -> bool:
    """B has at least x distinct incoming neighbors in A (set-level relation)."""
    A, B = _pair(A, B)
    nb = set()
    for j in B:
        nb |= g.in_nbrs(j)
    return len((nb - B) & A) >= x


# -- partition enumeration ---------------------------------------------------


def _partitions(n: int, symmetric: bool):
    """(L, C, R) with L, R non-empty in lexicographic order of the per-node
    side assignment (L < C < R). With ``symmetric`` only the representative
    whose first non-C node lies in L is produced."""
    for assign in itertools.product((L_SIDE, C_SIDE, R_SIDE), repeat=n):
        if L_SIDE not in assign or R_SIDE not in assign:
            continue
        if symmetric:
            first = next(s for s in assign if s != C_SIDE)
            if first != L_SIDE:
                continue
        L = frozenset(i for i, s in enumerate(assign) if s == L_SIDE)
        C = frozenset(i for i, s in enumerate(assign) if s == C_SIDE)
        R = frozenset(i for i, s in enumerate(assign) if s == R_SIDE)
        yield L, C, R


def check_kcca(g: DiGraph, f: int, k: int) -> Verdict:
    if f < 0 or k < 1:
        raise ConditionError("need f >= 0 and k >= 1")
    cache = _PathCache(g, f, k)
    for L, C, R in _partitions(g.n, symmetric=True):
        if any(cache.enough(L | C, i) for i in sorted(R)):
            continue
        if any(cache.enough(R | C, i) for i in sorted(L)):
            continue
        return Verdict(False, f, k, Partition(L, C, R))
    return Verdict(True, f, k)


def check_cca(g: DiGraph, f: int) -> Verdict:
    """Partition check against the set-level relation: R (resp. L) needs at
    least f+1 distinct in-neighbors outside itself."""
    if f < 0:
        raise ConditionError("need f >= 0")
    in_count = {}

    def outside_in(S):
        hit = in_count.get(S)
        if hit is None:
            nb = set()
            for j in S:
                nb |= g.in_nbrs(j)
            hit = in_count[S] = len(nb - S)
        return hit

    for L, C, R in _partitions(g.n, symmetric=True):
        if outside_in(R) >= f + 1 or outside_in(L) >= f + 1:
            continue
        return Verdict(False, f, None, Partition(L, C, R))
    return Verdict(True, f, None)


def max_f(g: DiGraph, k: int | None) -> int:
    """Largest f for which the condition holds (-1 if it fails even at f=0).

    Both conditions are antitone in f, so the scan stops at the first failure.
    """
    best = -1
    for f in range(g.n):
        ok = check_cca(g, f).holds if k is None else check_kcca(g, f, k).holds
        if not ok:
            break
        best = f
    return best


def witness_violates(g: DiGraph, v: Verdict) -> bool:
    """Re-check directly that a false verdict's witness breaks both directions."""
    if v.holds or v.witness is None:
        return False
    L, C, R = v.witness.L, v.witness.C, v.witness.R
    if not L or not R:
        return False
    if v.k is None:
        return not point(g, L | C, R, v.f + 1) and not point(g, R | C, L, v.f + 1)
    return not arrow_k(g, L | C, R, v.f, v.k) and not arrow_k(g, R | C, L, v.f, v.k)


# -- propagation -------------------------------------------------------------


def propagates(g: DiGraph, A, B, f: int, k: int) -> PropagationSequence | None:
    """Follow A_{t+1} = A_t + in(A_t ->_k B_t) until B is exhausted (returns
    the sequence) or the absorption stalls (returns None)."""
    A, B = _pair(A, B)
    if A | B != frozenset(g.nodes):
        raise ConditionError("A and B must cover every node")
    steps = [(A, B)]
    while B:
        gained = in_set_k(g, A, B, f, k)
        if not gained:
            return None
        A, B = A | gained, B - gained
        steps.append((A, B))
    return PropagationSequence(tuple(steps))


# -- oracle ------------------------------------------------------------------


def _simple_paths_into(g: DiGraph, start: int, end: int, k: int):
    """All simple paths start -> end with at most k edges, as node tuples."""
    out = []
    stack = [(start, (start,))]
    while stack:
        x, path = stack.pop()
        if x == end:
            out.append(path)
            continue
        if len(path) - 1 == k:
            continue
        for y in g.out_nbrs(x):
            if y not in path:
                stack.append((y, path + (y,)))
    return out


def _oracle_enough(g, A, i, f, k):
    paths = []
    for a in A:
        paths.extend(_simple_paths_into(g, a, i, k))
    bodies = {frozenset(p[:-1]) for p in paths}
    for combo in itertools.combinations(bodies, f + 1):
        total = sum(len(b) for b in combo)
        if len(frozenset().union(*combo)) == total:
            return True
    return False


def oracle_kcca(g: DiGraph, f: int, k: int, guard: int = ORACLE_GUARD) -> Verdict:
    """Independent re-derivation of ``check_kcca``: every simple path is
    listed explicitly, disjoint families are found by trying all
    (f+1)-combinations, and all partitions are visited without symmetry
    pruning."""
    if g.n > guard:
        raise ConditionError(f"oracle guard: n={g.n} > {guard}")
    memo = {}

    def enough(A, i):
        key = (A, i)
        if key not in memo:
            memo[key] = _oracle_enough(g, A, i, f, k)
        return memo[key]

    first_bad = None
    for assign in itertools.product((L_SIDE, C_SIDE, R_SIDE), repeat=g.n):
        L = frozenset(i for i, s in enumerate(assign) if s == L_SIDE)
        C = frozenset(i for i, s in enumerate(assign) if s == C_SIDE)
        R = frozenset(i for i, s in enumerate(assign) if s == R_SIDE)
        if not L or not R:
            continue
        fwd = any(enough(L | C, i) for i in R)
        bwd = any(enough(R | C, i) for i in L)
        if not fwd and not bwd and first_bad is None:
            first_bad = Partition(L, C, R)
    if first_bad is None:
        return Verdict(True, f, k)
    return Verdict(False, f, k, first_bad)


__all__ = [
    "ConditionError",
    "GraphError",
    "Partition",
    "PropagationSequence",
    "Verdict",
    "arrow",
    "arrow_k",
    "check_cca",
    "check_kcca",
    "in_set_k",
    "max_f",
    "oracle_kcca",
    "point",
    "propagates",
    "witness_violates",
]

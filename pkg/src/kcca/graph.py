"""Directed graph model, k-hop queries, bounded-length disjoint paths and generators."""

from __future__ import annotations

import itertools
import random
import string
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import networkx as nx

NodeSet = frozenset

DISJOINT_PATH_GUARD = 16


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class DiGraph:
    """Immutable simple digraph on nodes ``0..n-1``.

    Undirected graphs are stored as symmetric digraphs with ``undirected`` set.
    """

    n: int
    edges: frozenset
    labels: tuple | None = None
    undirected: bool = False
    _in: tuple = field(init=False, repr=False, compare=False)
    _out: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise GraphError(f"need n >= 2, got {self.n}")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
        if self.undirected:
            for i, j in edges:
                if (j, i) not in edges:
                    raise GraphError(f"undirected graph missing reverse of ({i}, {j})")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.n or len(set(labels)) != self.n:
                raise GraphError("labels must be unique and one per node")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "edges", edges)
        ins = [set() for _ in range(self.n)]
        outs = [set() for _ in range(self.n)]
        for i, j in edges:
            outs[i].add(j)
            ins[j].add(i)
        object.__setattr__(self, "_in", tuple(frozenset(s) for s in ins))
        object.__setattr__(self, "_out", tuple(frozenset(s) for s in outs))

    @property
    def nodes(self) -> range:
        return range(self.n)

    def in_nbrs(self, i: int) -> frozenset:
        return self._in[self._check(i)]

    def out_nbrs(self, i: int) -> frozenset:
        return self._out[self._check(i)]

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def label(self, i: int) -> str:
        self._check(i)
        return self.labels[i] if self.labels else str(i)

    def node(self, x) -> int:
        """Resolve a node index or label to an index."""
        if isinstance(x, int) and not isinstance(x, bool):
            return self._check(x)
        s = str(x)
        if self.labels and s in self.labels:
            return self.labels.index(s)
        if s.isdigit():
            return self._check(int(s))
        raise GraphError(f"unknown node {x!r}")

    def nodeset(self, xs: Iterable) -> frozenset:
        return frozenset(self.node(x) for x in xs)

    def names(self, xs: Iterable[int]) -> list[str]:
        return [self.label(i) for i in sorted(xs)]

    def induced(self, keep: Iterable[int]) -> frozenset:
        """Edge set of the subgraph induced by ``keep`` (node ids unchanged)."""
        keep = frozenset(keep)
        return frozenset((i, j) for i, j in self.edges if i in keep and j in keep)

    def _check(self, i: int) -> int:
        if not isinstance(i, int) or not 0 <= i < self.n:
            raise GraphError(f"invalid node id {i!r}")
        return i


# -- neighborhoods -----------------------------------------------------------


def _backward_bfs(g: DiGraph, i: int, k: int, removed: frozenset = frozenset()) -> set:
    dist = {i: 0}
    queue = deque([i])
    while queue:
        x = queue.popleft()
        if dist[x] == k:
            continue
        for y in g.in_nbrs(x):
            if y not in dist and y not in removed:
                dist[y] = dist[x] + 1
                queue.append(y)
    dist.pop(i)
    return set(dist)


def k_in_neighborhood(g: DiGraph, i: int, k: int) -> frozenset:
    """Nodes other than ``i`` with a directed path of length <= k to ``i``."""
    g._check(i)
    if k < 1:
        raise GraphError("k must be >= 1")
    return frozenset(_backward_bfs(g, i, k))


def k_out_neighborhood(g: DiGraph, i: int, k: int) -> frozenset:
    g._check(i)
    dist = {i: 0}
    queue = deque([i])
    while queue:
        x = queue.popleft()
        if dist[x] == k:
            continue
        for y in g.out_nbrs(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    dist.pop(i)
    return frozenset(dist)


def reach_k(g: DiGraph, i: int, removed: Iterable[int], k: int) -> frozenset:
    """k-hop in-neighborhood of ``i`` in the subgraph induced by V - removed."""
    removed = frozenset(removed)
    g._check(i)
    if i in removed:
        raise GraphError(f"node {i} is in the removed set")
    return frozenset(_backward_bfs(g, i, k, removed))


def distance(g: DiGraph, src: int, dst: int) -> int | None:
    """Directed hop distance, or None if unreachable."""
    if src == dst:
        return 0
    dist = {src: 0}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        for y in g.out_nbrs(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                if y == dst:
                    return dist[y]
                queue.append(y)
    return None


def k_hop_in_view(g: DiGraph, i: int, k: int) -> DiGraph:
    """Subgraph made of every edge lying on some path of length <= k into ``i``.

    Holds exactly the topology a node with k-hop knowledge needs for the
    k-hop wait test; node ids are kept so results compare with ``g``.
    """
    dist = {i: 0}
    queue = deque([i])
    while queue:
        x = queue.popleft()
        for y in g.in_nbrs(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    edges = frozenset((u, v) for u, v in g.edges if v in dist and u != i and dist[v] + 1 <= k)
    return DiGraph(g.n, edges, g.labels)


# -- bounded-length node-disjoint paths --------------------------------------


def _feeder_sets(g, u, sources, budget, blocked):
    """Node sets of backward walks from ``u`` that stop at the first source.

    Each yielded set is the node set of a path source -> ... -> u with at most
    ``budget`` edges; only the suffix after the first source node is kept,
    since any longer prefix is dominated.
    """
    seen = set()
    path = [u]
    on_path = {u}

    def walk(x, left):
        if left == 0:
            return
        for y in sorted(g.in_nbrs(x)):
            if y in on_path or y in blocked:
                continue
            if y in sources:
                key = frozenset(on_path | {y})
                if key not in seen:
                    seen.add(key)
                    yield key
                continue
            on_path.add(y)
            path.append(y)
            yield from walk(y, left - 1)
            path.pop()
            on_path.discard(y)

    yield from walk(u, budget)


def max_disjoint_bounded_paths(
    g: DiGraph,
    sources: Iterable[int],
    i: int,
    k: int,
    *,
    target: int | None = None,
    guard: int = DISJOINT_PATH_GUARD,
) -> int:
    """Maximum number of paths of length <= k from ``sources`` into ``i`` that
    share no node except ``i``.

    Exact branch-and-bound over the in-neighbors of ``i``: each path enters
    ``i`` through a distinct in-neighbor. With ``target`` set the search stops
    as soon as that many paths are found (the return value is then
    ``min(true max, target)``).
    """
    A = frozenset(sources)
    g._check(i)
    if i in A:
        raise GraphError("target node must not be a source")
    if not A:
        raise GraphError("source set must be non-empty")
    if k < 1:
        raise GraphError("k must be >= 1")
    if g.n > guard:
        raise GraphError(f"n={g.n} exceeds the disjoint-path guard {guard}")

    direct = sorted(g.in_nbrs(i) & A)
    others = sorted(g.in_nbrs(i) - A)
    base = len(direct)
    if target is not None and base >= target:
        return target
    if k == 1 or not others:
        return base

    used0 = frozenset(direct) | {i}
    best = base
    goal = target if target is not None else len(direct) + len(others)

    def search(idx, used, count):
        nonlocal best
        if count > best:
            best = count
        if best >= goal:
            return True
        if count + (len(others) - idx) <= best:
            return False
        u = others[idx]
        if u not in used:
            for nodes in _feeder_sets(g, u, A, k - 1, used):
                if search(idx + 1, used | nodes, count + 1):
                    return True
        return search(idx + 1, used, count)

    search(0, used0, base)
    return min(best, goal) if target is not None else best


# -- connectivity ------------------------------------------------------------


def to_networkx(g: DiGraph) -> nx.DiGraph:
    h = nx.DiGraph()
    h.add_nodes_from(g.nodes)
    h.add_edges_from(g.edges)
    return h


def vertex_connectivity(g: DiGraph) -> int:
    """Minimum node removals that disconnect an undirected graph (n-1 for K_n)."""
    if not g.undirected:
        raise GraphError("vertex_connectivity is defined here for undirected graphs only")
    return nx.node_connectivity(to_networkx(g).to_undirected())


# -- generators --------------------------------------------------------------


def _letters(n: int) -> tuple | None:
    return tuple(string.ascii_lowercase[:n]) if n <= 26 else None


def _sym(pairs: Iterable[tuple]) -> frozenset:
    out = set()
    for i, j in pairs:
        out.add((i, j))
        out.add((j, i))
    return frozenset(out)


def ring(n: int) -> DiGraph:
    if n < 3:
        raise GraphError("ring needs n >= 3")
    return DiGraph(n, _sym((i, (i + 1) % n) for i in range(n)), _letters(n), undirected=True)


def complete(n: int) -> DiGraph:
    return DiGraph(n, _sym(itertools.combinations(range(n), 2)), undirected=True)


def two_cliques(n: int, b: int) -> DiGraph:
    """Two bidirectional cliques of size n/2 joined by a matching of ``b`` edges.

    Bridge ``t`` joins left node ``t`` with right node ``n/2 + t``.
    """
    if n < 2 or n % 2:
        raise GraphError("two_cliques needs an even n >= 2")
    h = n // 2
    if not 1 <= b <= h:
        raise GraphError(f"bridge count must be in 1..{h}")
    pairs = list(itertools.combinations(range(h), 2))
    pairs += [(h + x, h + y) for x, y in itertools.combinations(range(h), 2)]
    pairs += [(t, h + t) for t in range(b)]
    return DiGraph(n, _sym(pairs), undirected=True)


def example_g() -> DiGraph:
    """Four-node ring A-B-D-C-A plus the one-way edge C->B."""
    A, B, C, D = range(4)
    edges = set(_sym([(A, B), (A, C), (C, D), (B, D)]))
    edges.add((C, B))
    return DiGraph(4, frozenset(edges), ("A", "B", "C", "D"))


def random_digraph(n: int, p: float, seed: int) -> DiGraph:
    if not 0 <= p <= 1:
        raise GraphError("p must lie in [0, 1]")
    rng = random.Random(seed)
    edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return DiGraph(n, frozenset(edges))


def random_graph(n: int, p: float, seed: int) -> DiGraph:
    """Undirected G(n, p) stored symmetrically."""
    if not 0 <= p <= 1:
        raise GraphError("p must lie in [0, 1]")
    rng = random.Random(seed)
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return DiGraph(n, _sym(pairs), undirected=True)


def path_graph(n: int) -> DiGraph:
    """One-way path 0 -> 1 -> ... -> n-1."""
    return DiGraph(n, frozenset((i, i + 1) for i in range(n - 1)), _letters(n))


def from_spec(spec: str) -> DiGraph:
    """Build a graph from a generator name such as ``ring4``, ``ring:6``,
    ``complete:5``, ``two_cliques:8:3``, ``exampleG`` or ``random:6:0.3:7``."""
    s = spec.strip()
    name, _, rest = s.partition(":")
    args = rest.split(":") if rest else []
    low = name.lower()
    try:
        if low in ("exampleg", "example_g", "example1"):
            return example_g()
        if low.startswith("ring") and low[4:].isdigit():
            return ring(int(low[4:]))
        if low.startswith("complete") and low[8:].isdigit():
            return complete(int(low[8:]))
        if low == "ring":
            return ring(int(args[0]))
        if low == "complete":
            return complete(int(args[0]))
        if low in ("two_cliques", "twocliques"):
            return two_cliques(int(args[0]), int(args[1]))
        if low == "random":
            return random_digraph(int(args[0]), float(args[1]), int(args[2]))
        if low == "random_undirected":
            return random_graph(int(args[0]), float(args[1]), int(args[2]))
        if low == "path":
            return path_graph(int(args[0]))
    except (IndexError, ValueError) as exc:
        raise GraphError(f"bad generator spec {spec!r}: {exc}") from None
    raise GraphError(f"unknown generator {spec!r}")


# -- text format -------------------------------------------------------------


def dumps(g: DiGraph) -> str:
    lines = [f"{'graph' if g.undirected else 'digraph'} {g.n}"]
    if g.labels:
        lines += [f"label {i} {lab}" for i, lab in enumerate(g.labels)]
    for i, j in sorted(g.edges):
        if g.undirected and i > j:
            continue
        lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> DiGraph:
    """Parse the line-oriented graph format; errors carry the line number."""
    header = None
    n = 0
    pairs = []
    labels = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2 or parts[0] not in ("graph", "digraph") or not parts[1].isdigit():
                raise GraphError(f"line {lineno}: expected 'digraph <n>' or 'graph <n>'")
            header, n = parts[0], int(parts[1])
            continue
        if parts[0] == "label":
            if len(parts) != 3 or not parts[1].isdigit():
                raise GraphError(f"line {lineno}: expected 'label <i> <name>'")
            labels[int(parts[1])] = parts[2]
            continue
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            raise GraphError(f"line {lineno}: expected an edge 'i j'")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise GraphError(f"line {lineno}: bad edge ({i}, {j}) for n={n}")
        pairs.append((i, j))
    if header is None:
        raise GraphError("line 1: empty graph file")
    if labels and set(labels) != set(range(n)):
        raise GraphError("labels must be given for every node or none")
    lab = tuple(labels[i] for i in range(n)) if labels else None
    if header == "graph":
        return DiGraph(n, _sym(pairs), lab, undirected=True)
    return DiGraph(n, frozenset(pairs), lab)


def load(path) -> DiGraph:
    with open(path) as fh:
        return loads(fh.read())


def iter_subsets(items: Iterable, max_size: int) -> Iterator[tuple]:
    """Subsets of ``items`` by increasing size up to ``max_size``."""
    items = sorted(items)
    for size in range(min(max_size, len(items)) + 1):
        yield from itertools.combinations(items, size)

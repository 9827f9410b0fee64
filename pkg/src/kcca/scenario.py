"""Scenario files: YAML documents describing one simulation.

Example::

    graph: {builtin: exampleG}        # or {file: ring.txt} or {text: "digraph 3\\n0 1\\n..."}
    protocol: {kind: klocwa, k: 2}
    f: 1
    inputs: {A: 0, B: 1, C: 0.3, D: 0.7}   # or a list in node order
    delays:
      variant: script                  # constant | table | random | script
      default: 1
      rules:
        - {src: A, dst: C, delay: 10}  # omitted fields are wildcards; "*" also works
    crashes:
      - {node: B, round: 3, recipients: [D]}
    stop: {epsilon: 1.0e-3, max_rounds: 1000}
    seed: 0
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

import yaml

from . import graph as gmod
from .graph import DiGraph, GraphError
from .protocols import ProtocolKind
from .sim import (
    DEFAULT_MAX_ROUNDS,
    WILDCARD,
    Constant,
    CrashEvent,
    PerEdgeTable,
    Rule,
    Script,
    SeededRandom,
    StopRule,
    Trace,
    run,
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    graph: DiGraph
    kind: ProtocolKind
    f: int
    inputs: tuple
    delays: object
    crashes: tuple
    stop: StopRule
    seed: int = 0

    def run(self) -> Trace:
        return run(self.graph, self.kind, self.f, self.inputs, self.delays, self.crashes, self.stop, seed=self.seed)


def _node(g: DiGraph, x, where: str) -> int:
    try:
        return g.node(x)
    except GraphError:
        raise ScenarioError(f"{where}: unknown node {x!r}") from None


def _opt_node(g, x, where):
    return None if x is None or x == WILDCARD else _node(g, x, where)


def _opt_int(x):
    return None if x is None or x == WILDCARD else int(x)


def _graph(spec, base_dir) -> DiGraph:
    try:
        if isinstance(spec, str):
            return gmod.from_spec(spec)
        if not isinstance(spec, dict):
            raise ScenarioError("graph: expected a mapping or generator name")
        if "builtin" in spec:
            return gmod.from_spec(str(spec["builtin"]))
        if "file" in spec:
            path = spec["file"]
            if base_dir and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return gmod.load(path)
        if "text" in spec:
            return gmod.loads(spec["text"])
    except GraphError as exc:
        raise ScenarioError(f"graph: {exc}") from None
    raise ScenarioError("graph: need one of builtin, file, text")


def _delays(g, spec, seed):
    if spec is None:
        return Constant(1)
    variant = str(spec.get("variant", "constant")).lower()
    if variant == "constant":
        return Constant(int(spec.get("c", spec.get("delay", 1))))
    if variant == "table":
        table = {}
        for row in spec.get("table", []):
            if isinstance(row, dict):
                src, dst, d = row["src"], row["dst"], row["delay"]
            else:
                src, dst, d = row
            table[(_node(g, src, "delays"), _node(g, dst, "delays"))] = int(d)
        return PerEdgeTable(table, int(spec.get("default", 1)))
    if variant == "random":
        return SeededRandom(int(spec.get("min", 1)), int(spec.get("max", 1)), int(spec.get("seed", seed)))
    if variant == "script":
        rules = []
        for row in spec.get("rules", []):
            rules.append(
                Rule(
                    int(row["delay"]),
                    _opt_node(g, row.get("src"), "delays"),
                    _opt_node(g, row.get("dst"), "delays"),
                    _opt_int(row.get("round")),
                    _opt_int(row.get("phase")),
                )
            )
        return Script(tuple(rules), int(spec.get("default", 1)))
    raise ScenarioError(f"delays: unknown variant {variant!r}")


def from_dict(doc: dict, base_dir: str | None = None) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")
    if "graph" not in doc:
        raise ScenarioError("scenario: missing 'graph'")
    g = _graph(doc["graph"], base_dir)
    prot = doc.get("protocol", {"kind": "locwa"})
    try:
        if isinstance(prot, str):
            kind = ProtocolKind.parse(prot)
        else:
            kind = ProtocolKind.parse(str(prot["kind"]), prot.get("k"))
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"protocol: {exc}") from None
    f = int(doc.get("f", 0))
    seed = int(doc.get("seed", 0))

    raw = doc.get("inputs")
    if raw is None:
        raise ScenarioError("scenario: missing 'inputs'")
    if isinstance(raw, dict):
        vals = [None] * g.n
        for key, v in raw.items():
            vals[_node(g, key, "inputs")] = float(v)
        if any(v is None for v in vals):
            raise ScenarioError("inputs: every node needs a value")
        inputs = tuple(vals)
    else:
        inputs = tuple(float(v) for v in raw)
        if len(inputs) != g.n:
            raise ScenarioError(f"inputs: expected {g.n} values, got {len(inputs)}")

    delays = _delays(g, doc.get("delays"), seed)

    crashes = []
    for row in doc.get("crashes") or []:
        node = _node(g, row["node"], "crashes")
        rec = frozenset(_node(g, x, "crashes") for x in row.get("recipients") or [])
        crashes.append(CrashEvent(node, int(row.get("round", 0)), rec))
    if len(crashes) > f:
        raise ScenarioError(f"crashes: {len(crashes)} events exceed f={f}")

    st = doc.get("stop") or {}
    eps = st.get("epsilon")
    stop = StopRule(int(st.get("max_rounds", DEFAULT_MAX_ROUNDS)), None if eps is None else float(eps))
    return Scenario(g, kind, f, inputs, delays, tuple(crashes), stop, seed)


def loads(text: str, base_dir: str | None = None) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"YAML: {exc}") from None
    return from_dict(doc, base_dir)


def load(path: str) -> Scenario:
    with open(path) as fh:
        return loads(fh.read(), os.path.dirname(os.path.abspath(path)))


def shipped(name: str) -> str:
    """Text of a scenario file bundled with the package."""
    return resources.files("kcca").joinpath("scenarios", name).read_text()


def shipped_names() -> list:
    return sorted(p.name for p in resources.files("kcca").joinpath("scenarios").iterdir() if p.name.endswith(".yaml"))

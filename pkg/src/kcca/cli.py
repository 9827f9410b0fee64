"""Command-line entry point.

Exit codes: 0 success / condition holds / converged; 1 condition fails or a
verify suite found a counterexample or a repro claim failed; 2 bad input;
3 simulation stopped without epsilon-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

from . import graph as gmod
from . import scenario as scen
from . import verify
from .conditions import check_cca, check_kcca, max_f
from .graph import GraphError
from .metrics import analyze
from .protocols import KLocWA, ProtocolKind
from .sim import SeededRandom, SimulationError, StopRule, necessity_demo, run

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NOCONV = 0, 1, 2, 3
DEFAULT_SEED = 0


def _emit(rec) -> None:
    print(json.dumps(rec, sort_keys=True))


def _graph(arg: str):
    if os.path.exists(arg):
        return gmod.load(arg)
    return gmod.from_spec(arg)


def cmd_check(a) -> int:
    g = _graph(a.graph)
    if str(a.k).lower() == "cca":
        v = check_cca(g, a.f)
    else:
        v = check_kcca(g, a.f, int(a.k))
    rec = v.as_record(g)
    if not a.witness:
        rec.pop("witness")
    _emit(rec)
    return EXIT_OK if v.holds else EXIT_FAIL


def _load_scenario(arg: str):
    if os.path.exists(arg):
        return scen.load(arg)
    name = arg if arg.endswith(".yaml") else arg + ".yaml"
    if name in scen.shipped_names():
        return scen.loads(scen.shipped(name))
    raise scen.ScenarioError(f"no scenario file {arg!r}")


def cmd_simulate(a) -> int:
    sc = _load_scenario(a.scenario)
    tr = sc.run()
    eps = sc.stop.epsilon if sc.stop.epsilon is not None else 1e-3
    rep = analyze(tr, eps, sc.graph, sc.kind.k if not sc.kind.floods else None)
    summary = {
        "status": tr.status,
        "final_round": tr.final_round,
        "p_eps": tr.p_eps,
        "eps_round": tr.eps_round,
        "phase_completion": {sc.graph.label(i): tr.completion[i][1:6] for i in sc.graph.nodes},
        "validity_ok": rep.validity_ok,
        "phase_bound": rep.phase_bound,
    }
    if a.out:
        os.makedirs(a.out, exist_ok=True)
        with open(os.path.join(a.out, "trace.jsonl"), "w") as fh:
            fh.write(tr.to_jsonl())
        with open(os.path.join(a.out, "report.json"), "w") as fh:
            json.dump(rep.as_record(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        with open(os.path.join(a.out, "gaps.csv"), "w") as fh:
            fh.write(rep.gap_csv())
    _emit(summary)
    return EXIT_OK if tr.status == "converged" else EXIT_NOCONV


def _sweep_one(job):
    g, kind, f, inputs, delays, eps = job
    tr = run(g, kind, f, inputs, delays, (), StopRule(200000, eps))
    rep = analyze(tr, eps, g, None if kind.floods else kind.k)
    return {
        "kind": str(kind),
        "n": g.n,
        "status": tr.status,
        "p_eps": rep.p_epsilon,
        "rounds": rep.rounds_to_eps,
        "messages": rep.messages_to_eps,
        "validity_ok": rep.validity_ok,
        "within_phase_bound": rep.within_phase_bound,
    }


def cmd_sweep(a) -> int:
    rng = random.Random(a.seed)
    kinds = [ProtocolKind.parse(x) for x in a.kinds.split(",")]
    jobs = []
    while len(jobs) < a.count:
        n = rng.randint(4, a.n_max)
        g = gmod.random_digraph(n, rng.choice((0.6, 0.8)), rng.randrange(2**31))
        if not check_cca(g, a.f).holds:
            continue
        inputs = [rng.uniform(0, 1) for _ in range(n)]
        delays = SeededRandom(1, a.max_delay, rng.randrange(2**31))
        for kind in kinds:
            if kind.name in ("klocwa", "strong-klocwa", "locwa") and not check_kcca(g, a.f, kind.k).holds:
                continue
            if kind.name == "lbc":
                continue
            jobs.append((g, kind, a.f, inputs, delays, a.epsilon))
    with ProcessPoolExecutor(max_workers=a.jobs) as pool:
        rows = list(pool.map(_sweep_one, jobs))
    for row in rows:
        _emit(row)
    by_kind: dict = {}
    for row in rows:
        by_kind.setdefault(row["kind"], []).append(row)
    for kind, rs in sorted(by_kind.items()):
        rounds = [r["rounds"] for r in rs if r["rounds"] is not None]
        agg = {"kind": kind, "runs": len(rs), "converged": len(rounds)}
        if rounds:
            agg.update(rounds_min=min(rounds), rounds_mean=statistics.fmean(rounds), rounds_max=max(rounds))
        _emit({"type": "aggregate", **agg})
    bad = [r for r in rows if not r["validity_ok"]]
    return EXIT_FAIL if bad else EXIT_OK


def cmd_verify(a) -> int:
    if a.n_max > 8:
        raise GraphError("--n-max above 8 exceeds the verification guard")
    suite = a.suite
    if suite in ("conditions", "lemma1"):
        res = verify.SUITES[suite](n_max=a.n_max, seed=a.seed, count=a.count)
    elif suite == "lbc":
        res = verify.lbc_suite(seed=a.seed)
    else:
        res = verify.SUITES[suite](seed=a.seed, n_max=a.n_max)
    for line in res.failures:
        print("COUNTEREXAMPLE:", line)
    print(f"suite {res.name}: {res.checked} checks, {len(res.failures)} counterexamples")
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_generate(a) -> int:
    g = gmod.from_spec(a.spec)
    text = gmod.dumps(g)
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _claim(lines, ok, text):
    lines.append((ok, f"{text}: {'PASS' if ok else 'FAIL'}"))


def repro_lines(figure: str) -> list:
    lines: list = []
    if figure == "1a":
        g = gmod.ring(4)
        v1, v2 = check_kcca(g, 1, 1), check_kcca(g, 1, 2)
        w = v1.witness.as_record(g) if v1.witness else None
        lines.append((True, f"1-CCA(f=1): {'HOLDS' if v1.holds else 'FAILS'} (witness {w})"))
        lines.append((True, f"2-CCA(f=1): {'HOLDS' if v2.holds else 'FAILS'}"))
        _claim(lines, not v1.holds and w == {"L": ["a", "b"], "C": [], "R": ["c", "d"]},
               "1-CCA fails with L={a,b}, R={c,d}, C={}")
        _claim(lines, v2.holds, "2-CCA holds")
        _claim(lines, gmod.vertex_connectivity(g) == 2, "connectivity is 2")
    elif figure == "1b":
        g = gmod.two_cliques(8, 3)
        f1, f2 = max_f(g, 1), max_f(g, 2)
        lines.append((True, f"max f for 1-CCA: {f1}"))
        lines.append((True, f"max f for 2-CCA: {f2} (n/2-1 = 3, n/2-2 = 2)"))
        _claim(lines, not check_kcca(g, 1, 1).holds, "1-CCA fails at f=1")
        _claim(lines, check_kcca(g, 1, 2).holds, "2-CCA holds at f=1")
        _claim(lines, f1 == 0, "1-CCA max f is 0")
        if f2 != 3:
            lines.append((True, f"note: with a 3-bridge matching, 2-CCA reaches f={f2}, not n/2-1=3"))
    elif figure == "example1":
        traces = {}
        for name in ("locwa", "klocwa_2", "strong_klocwa_2", "strong_klocwa_1"):
            traces[name] = scen.loads(scen.shipped(f"example1_{name}.yaml")).run()
        loc = traces["locwa"]
        ok = all(loc.completion[i][t] == t for i in range(4) for t in range(1, len(loc.completion[i])))
        _claim(lines, ok, "LocWA: every node completes phase t at round t")
        _claim(lines, traces["klocwa_2"].completion[3][1] == 10, "2-LocWA: D completes phase 1 at round d=10")
        st = traces["strong_klocwa_2"]
        _claim(lines, all(st.completion[i][1] == 1 for i in range(4)), "Strong 2-LocWA: phase 1 done at round 1")
        s1, s2 = traces["strong_klocwa_1"].eps_round, st.eps_round
        _claim(lines, s2 is not None and s1 is not None and s2 <= s1,
               f"Strong-2 eps-converges no later than Strong-1 ({s2} <= {s1})")
    elif figure == "necessity":
        tr = necessity_demo(1.0, 500)
        gaps = {tr.gap(p) for p in range(1, tr.complete_phases() + 1)}
        crossed = any(
            e["type"] == "record" and (e["node"] < 2) != (e["origin"] < 2) for e in tr.events
        )
        _claim(lines, gaps == {1.0} and not crossed and tr.final_round == 500,
               "gap constant at delta for 500 rounds")
        tr2 = necessity_demo(1.0, 5000, KLocWA(2), cross_delay=50, epsilon=1e-3)
        _claim(lines, tr2.status == "converged", "2-LocWA with finite cross delay 50 converges")
    else:
        raise ValueError(f"unknown figure {figure!r}")
    return lines


def cmd_repro(a) -> int:
    lines = repro_lines(a.figure)
    for _, text in lines:
        print(text)
    return EXIT_OK if all(ok for ok, _ in lines) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kcca", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", help="check k-CCA or CCA on a graph")
    c.add_argument("--graph", required=True, help="graph file or generator (ring4, two_cliques:8:3, ...)")
    c.add_argument("--f", type=int, required=True)
    c.add_argument("--k", default="1", help="relay depth, or 'cca'")
    c.add_argument("--witness", action="store_true")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="run a scenario file")
    s.add_argument("--scenario", required=True, help="scenario YAML, or the name of a shipped scenario")
    s.add_argument("--out", help="directory for trace.jsonl, report.json, gaps.csv")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="many random simulations in parallel")
    w.add_argument("--count", type=int, default=20)
    w.add_argument("--n-max", type=int, default=6)
    w.add_argument("--f", type=int, default=1)
    w.add_argument("--kinds", default="locwa,klocwa:2,strong-klocwa:2,lwa")
    w.add_argument("--max-delay", type=int, default=4)
    w.add_argument("--epsilon", type=float, default=1e-3)
    w.add_argument("--jobs", type=int, default=None)
    w.add_argument("--seed", type=int, default=DEFAULT_SEED)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("--suite", required=True, choices=sorted(verify.SUITES))
    v.add_argument("--n-max", type=int, default=6)
    v.add_argument("--count", type=int, default=200)
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.set_defaults(func=cmd_verify)

    gen = sub.add_parser("generate", help="write a generated graph in the text format")
    gen.add_argument("spec", help="ring:N, complete:N, two_cliques:N:B, exampleG, random:N:P:SEED")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_generate)

    r = sub.add_parser("repro", help="re-check the claims about one example")
    r.add_argument("--figure", required=True, choices=["1a", "1b", "example1", "necessity"])
    r.set_defaults(func=cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return a.func(a)
    except (GraphError, scen.ScenarioError, SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Closed-form convergence and message bounds, and trace analysis."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .graph import DiGraph, k_in_neighborhood
from .sim import Trace


class MetricsError(ValueError):
    pass


def alpha_k(g: DiGraph, k: int) -> Fraction:
    """min over nodes of 1/|N_i^-(k)|, as an exact rational."""
    sizes = [len(k_in_neighborhood(g, i, k)) for i in g.nodes]
    if min(sizes) == 0:
        raise MetricsError("some node has no k-hop in-neighbor")
    return Fraction(1, max(sizes))


def phase_bound(n: int, f: int, eps: float, delta: float, alpha: Fraction) -> int:
    """Phases sufficient for epsilon-convergence of k-LocWA:
    (n-f-1) * ceil(log(eps/delta) / log(1 - alpha^(n-f-1) / 2))."""
    alpha = Fraction(alpha)
    if alpha <= 0 or alpha > 1:
        raise MetricsError("alpha must lie in (0, 1]")
    if eps <= 0 or delta < 0:
        raise MetricsError("need eps > 0 and delta >= 0")
    m = n - f - 1
    if m < 1:
        raise MetricsError("need n - f - 1 >= 1")
    if delta <= eps:
        return 0
    shrink = float(alpha**m / 2)
    # log1p keeps precision when alpha^m is tiny
    steps = math.log(eps / delta) / math.log1p(-shrink)
    return m * math.ceil(steps)


def message_bound(n: int, f: int, eps: float, delta: float, alpha: Fraction, k: int) -> int:
    return phase_bound(n, f, eps, delta, alpha) * k * n * n


@dataclass
class ConvergenceReport:
    delta: float
    gap_series: list
    p_epsilon: int | None
    rounds_to_eps: int | None
    messages_sent: int
    messages_to_eps: int | None
    alpha_k: Fraction | None
    phase_bound: int | None
    message_bound: int | None
    validity_ok: bool
    epsilon: float

    @property
    def within_phase_bound(self) -> bool | None:
        if self.delta <= self.epsilon:
            return True
        if self.p_epsilon is None or self.phase_bound is None:
            return None
        return self.p_epsilon <= self.phase_bound

    @property
    def within_message_bound(self) -> bool | None:
        if self.delta <= self.epsilon:
            return True
        if self.messages_to_eps is None or self.message_bound is None:
            return None
        return self.messages_to_eps <= self.message_bound

    def as_record(self) -> dict:
        rec = asdict(self)
        rec["alpha_k"] = None if self.alpha_k is None else str(self.alpha_k)
        rec["within_phase_bound"] = self.within_phase_bound
        rec["within_message_bound"] = self.within_message_bound
        return rec

    def gap_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "gap"])
        for p, gap in enumerate(self.gap_series):
            w.writerow([p, repr(gap)])
        return buf.getvalue()


def validity_ok(trace: Trace) -> bool:
    lo = min(vs[0] for vs in trace.values.values())
    hi = max(vs[0] for vs in trace.values.values())
    return all(lo <= v <= hi for vs in trace.values.values() for v in vs)


def analyze(trace: Trace, eps: float, g: DiGraph | None = None, k: int | None = None) -> ConvergenceReport:
    """Gap series over completed phases, validity, first epsilon phase and
    the bounds for comparison.

    ``g`` and ``k`` enable the bounds; ``k`` defaults to the relay depth in
    the trace config.
    """
    if not trace.values or any(not vs for vs in trace.values.values()):
        raise MetricsError("malformed trace: missing values")
    delta = trace.gap(0)
    gaps = [trace.gap(p) for p in range(trace.complete_phases() + 1)]
    if any(x is None or x < 0 for x in gaps):
        raise MetricsError("malformed trace: phase without values")
    p_eps = next((p for p in range(1, len(gaps)) if gaps[p] <= eps), None)

    rounds = None
    msgs_to_eps = None
    if p_eps is not None:
        rounds = max(trace.completion[i][p_eps] for i, vs in trace.values.items() if len(vs) > p_eps)
        msgs_to_eps = sum(1 for e in trace.events if e["type"] == "send" and e["round"] <= rounds)

    alpha = pb = mb = None
    if g is not None:
        k = k if k is not None else int(trace.config["k"])
        k = min(k, g.n)
        f = int(trace.config["f"])
        try:
            alpha = alpha_k(g, k)
            pb = phase_bound(g.n, f, eps, delta, alpha)
            mb = message_bound(g.n, f, eps, delta, alpha, k)
        except MetricsError:
            alpha = pb = mb = None

    return ConvergenceReport(
        delta=delta,
        gap_series=gaps,
        p_epsilon=p_eps,
        rounds_to_eps=rounds,
        messages_sent=trace.messages_sent,
        messages_to_eps=msgs_to_eps,
        alpha_k=alpha,
        phase_bound=pb,
        message_bound=mb,
        validity_ok=validity_ok(trace),
        epsilon=eps,
    )


__all__ = ["ConvergenceReport", "MetricsError", "alpha_k", "analyze", "message_bound", "phase_bound", "validity_ok"]

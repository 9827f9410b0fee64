import pytest

from kcca import protocols as P
from kcca.graph import example_g, k_hop_in_view, ring, two_cliques
from kcca.protocols import (
    LBC,
    LEARN,
    LWA,
    VALUE,
    EstGraph,
    KLocWA,
    LocWA,
    Message,
    ProtocolKind,
    StrongKLocWA,
    find_wait_k,
    local_view,
    mean,
    on_receive,
    start,
    try_update,
    wait_1,
    wait_k,
    wait_lwa,
    wait_strong,
)


def S(g, *names):
    return frozenset(g.node(x) for x in names)


# -- kinds -------------------------------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [("locwa", LocWA()), ("klocwa:2", KLocWA(2)), ("strong-klocwa:3", StrongKLocWA(3)),
     ("k-locwa:2", KLocWA(2)), ("lwa", LWA()), ("lbc", LBC())],
)
def test_parse(text, expected):
    assert ProtocolKind.parse(text) == expected
    assert ProtocolKind.parse(str(expected)) == expected


@pytest.mark.parametrize("bad", ["paxos", "klocwa", "klocwa:0"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        ProtocolKind.parse(bad)


def test_relay_depth():
    assert LocWA().relay_depth(5) == 1
    assert KLocWA(3).relay_depth(5) == 3
    assert LWA().relay_depth(5) == 5 and LBC().floods


# -- wait conditions ---------------------------------------------------------


def test_wait_example_g_node_d():
    g = example_g()
    d = g.node("D")
    view = k_hop_in_view(g, d, 2)
    heard = S(g, "D", "C")
    assert wait_1(heard, g.in_nbrs(d), 1)
    assert not wait_k(heard, view, d, 1, 2)
    assert wait_strong(heard, view, d, 1, 2)
    heard2 = heard | S(g, "A")
    assert wait_k(heard2, view, d, 1, 2)
    assert find_wait_k(heard2, view, d, 1, 2) == S(g, "B")


def test_wait_ring4_alone_is_not_enough():
    g = ring(4)
    a = g.node("a")
    assert not wait_1({a}, g.in_nbrs(a), 1)
    assert not wait_strong({a}, k_hop_in_view(g, a, 2), a, 1, 2)
    assert wait_1({a, g.node("b")}, g.in_nbrs(a), 1)


def test_wait_lwa_ring4():
    g = ring(4)
    est = EstGraph(frozenset(g.nodes), g.edges)
    a, b = g.node("a"), g.node("b")
    assert not wait_lwa(est, a, {a, b}, 1)
    assert wait_lwa(est, a, {a, b, g.node("c")}, 1)
    # a single star into a: only its in-neighbors matter
    star = EstGraph.star_into(g.in_nbrs(a), a)
    assert wait_lwa(star, a, {a, b}, 1)


def test_wait_1_counts_in_neighbors_only():
    g = ring(4)
    a = g.node("a")
    assert not wait_1({a, g.node("c")}, g.in_nbrs(a), 1)


def test_est_graph_reach():
    est = EstGraph.star_into({1, 2}, 0) | EstGraph.star_into({3}, 1)
    assert est.reach_into(0) == {1, 2, 3}
    assert est.reach_into(0, {1}) == {2}


def test_mean_clamps():
    assert mean([0.1, 0.2, 0.3]) == pytest.approx(0.2)
    vals = [0.1] * 7
    assert mean(vals) == 0.1


# -- transitions -------------------------------------------------------------


def test_start_broadcasts_value():
    g = ring(4)
    view = local_view(g, 0, KLocWA(2))
    out = start(view, KLocWA(2), 0.5)
    assert out.new_state.phase == 1 and out.new_state.R == [0.5] and out.new_state.heard == {0}
    assert sorted(j for j, _ in out.sends) == sorted(g.out_nbrs(0))
    m = out.sends[0][1]
    assert m.kind == VALUE and m.hop_budget == 1 and m.value == 0.5


def _node_state(g, i, kind, value=0.0):
    return start(local_view(g, i, kind), kind, value).new_state


def test_relay_respects_budget_and_dedup():
    g = ring(4)
    kind = KLocWA(2)
    view = local_view(g, 1, kind)
    s = _node_state(g, 1, kind)
    m = Message(VALUE, 0, 1, 1.0, hop_budget=1)
    out = on_receive(s, m, view, kind)
    assert {j for j, _ in out.sends} == set(g.out_nbrs(1))
    assert all(f.hop_budget == 0 for _, f in out.sends)
    assert out.new_state.R == [0.0, 1.0]
    again = on_receive(out.new_state, m, view, kind)
    assert again.sends == () and again.new_state.R == [0.0, 1.0]
    spent = on_receive(s, Message(VALUE, 0, 1, 1.0, hop_budget=0), view, kind)
    assert spent.sends == ()


def test_relay_again_when_budget_improves():
    g = ring(5)
    kind = KLocWA(3)
    view = local_view(g, 1, kind)
    s = _node_state(g, 1, kind)
    low = on_receive(s, Message(VALUE, 3, 1, 1.0, hop_budget=1), view, kind)
    assert all(m.hop_budget == 0 for _, m in low.sends)
    high = on_receive(low.new_state, Message(VALUE, 3, 1, 1.0, hop_budget=2), view, kind)
    assert high.sends and all(m.hop_budget == 1 for _, m in high.sends)
    assert high.new_state.R.count(1.0) == 1


def test_own_message_not_relayed_or_recorded():
    g = ring(4)
    kind = LWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind)
    out = on_receive(s, Message(VALUE, 0, 1, 0.0, hop_budget=2, in_nbrs=g.in_nbrs(0)), view, kind)
    assert out.sends == () and out.new_state.R == [0.0]


def test_late_messages_relayed_not_recorded_future_buffered():
    g = ring(4)
    kind = LocWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind)
    s.phase = 3
    late = on_receive(s, Message(VALUE, 1, 2, 9.0), view, kind)
    assert late.new_state.R == s.R
    fut = on_receive(s, Message(VALUE, 1, 5, 9.0), view, kind)
    assert fut.new_state.future and fut.new_state.R == s.R


def test_update_averages_and_advances():
    g = ring(4)
    kind = LocWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind, 0.0)
    assert not try_update(s, view, kind, 1).phase_advanced
    s = on_receive(s, Message(VALUE, 1, 1, 1.0), view, kind).new_state
    out = try_update(s, view, kind, 1)
    assert out.phase_advanced
    assert out.new_state.phase == 2 and out.new_state.value == 0.5
    assert out.new_state.R == [0.5] and out.new_state.heard == {0}


def test_buffered_message_replayed_on_phase_entry():
    g = ring(4)
    kind = LocWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind, 0.0)
    s = on_receive(s, Message(VALUE, 3, 2, 4.0), view, kind).new_state
    s = on_receive(s, Message(VALUE, 1, 1, 1.0), view, kind).new_state
    t = try_update(s, view, kind, 1).new_state
    assert t.phase == 2 and t.R == [0.5, 4.0] and t.heard == {0, 3}


def test_lwa_estimate_grows_from_piggyback():
    g = ring(4)
    kind = LWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind)
    assert s.est == EstGraph.star_into(g.in_nbrs(0), 0)
    m = Message(VALUE, 2, 1, 1.0, hop_budget=2, in_nbrs=g.in_nbrs(2))
    t = on_receive(s, m, view, kind).new_state
    assert (1, 2) in t.est.edges and (3, 2) in t.est.edges
    assert t.est.edges <= g.edges


def test_crashed_node_is_inert():
    g = ring(4)
    kind = LocWA()
    view = local_view(g, 0, kind)
    s = _node_state(g, 0, kind)
    s.crashed = True
    assert on_receive(s, Message(VALUE, 1, 1, 1.0), view, kind).new_state is s
    assert not try_update(s, view, kind, 1).phase_advanced


def test_lbc_learn_then_consensus():
    g = ring(4)
    kind = LBC()
    views = [local_view(g, i, kind) for i in g.nodes]
    out = start(views[0], kind, 0.0)
    s = out.new_state
    assert s.learning and s.phase == 0
    assert {m.kind for _, m in out.sends} == {LEARN}
    grown = EstGraph(frozenset(g.nodes), g.edges)
    step = P.lbc_step(s, Message(LEARN, 2, 0, graph=grown), views[0])
    t = step.new_state
    assert not t.learning and t.phase == 1
    kinds = [m.kind for _, m in step.sends]
    assert LEARN in kinds and VALUE in kinds
    # nothing new: no re-send
    assert P.lbc_step(t, Message(LEARN, 2, 0, graph=grown), views[0]).sends == ()


def test_lbc_requires_undirected():
    with pytest.raises(ValueError):
        local_view(example_g(), 0, LBC())
    local_view(two_cliques(6, 2), 0, LBC())

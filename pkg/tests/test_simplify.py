from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from cegames.ceg import build_ceg, canonical_digest, check_ceg
from cegames.ci import histories
from cegames.game_model import Decision, TreeBuilder, push_edge_utilities_to_leaves
from cegames.generate import random_game
from cegames.simplify import (
    BarrenDeleted,
    Coalesced,
    SimplificationError,
    coalesce_positions,
    delete_barren,
    delete_barren_root,
    find_barren,
    parsimonize,
    replay,
    trace_from_json,
    trace_to_json,
)
from cegames.solve import propagate, tree_rollback


@pytest.fixture(scope="module")
def naive(radicalisation):
    return build_ceg(radicalisation)


@pytest.fixture(scope="module")
def parsimonious(naive):
    return parsimonize(naive)


def test_barren_x4_positions_are_those_after_cuts(radicalisation, naive):
    hist = histories(radicalisation)
    barren_x4 = {p for p in find_barren(naive) if naive.positions[p].var == "X4"}
    after_cuts = {
        p for p, pos in naive.positions.items()
        if pos.var == "X4" and all(hist[m]["X3"] == "cuts" for m in pos.members)
    }
    assert len(after_cuts) == 4
    assert barren_x4 == after_cuts


def test_single_edge_position_is_barren():
    b = TreeBuilder(("A",))
    t = b.build(b.decision("A", [("a", b.chance([("x", b.leaf(1), 1)])), ("b", b.leaf(2))]))
    g = build_ceg(t)
    assert {g.positions[p].kind.__class__.__name__ for p in find_barren(g)} == {"Chance"}


def test_distinct_targets_give_no_barren_decisions():
    b = TreeBuilder(("A",))
    t = b.build(b.decision("A", [("a", b.leaf(1)), ("b", b.leaf(2))]))
    assert find_barren(build_ceg(t)) == set()


def _barren_chance_game():
    b = TreeBuilder(("A",))
    w = b.chance([("x", b.leaf(7), "1/2"), ("y", b.leaf(7), "1/2")])
    w2 = b.chance([("x", b.leaf(7), "1/2"), ("y", b.leaf(7), "1/2")])
    parent = b.chance([("p", w, "1/3"), ("q", w2, "2/3")])
    return b.build(b.decision("A", [("go", parent), ("stop", b.leaf(1))]))


def test_chance_parent_edges_merge_with_summed_probability():
    g = build_ceg(_barren_chance_game())
    parent = next(p for p, pos in g.positions.items() if pos.kind.__class__.__name__ == "Chance"
                  and len(g.children(p)) == 1 and g.positions[g.children(p)[0]].kind.__class__.__name__ == "Chance")
    (w,) = g.children(parent)
    g2 = delete_barren(g, w)
    out = [g2.edges[i] for i in g2.out_edges[parent]]
    assert len(out) == 1
    assert out[0].prob == Fraction(1)
    assert out[0].labels == ("p", "q")
    assert check_ceg(g2) == []
    assert propagate(g2).root_vector == propagate(g).root_vector


def test_delete_barren_preconditions(naive):
    non_barren = next(p for p in naive.positions if p not in find_barren(naive) and p != naive.root)
    with pytest.raises(SimplificationError):
        delete_barren(naive, non_barren)
    with pytest.raises(SimplificationError):
        delete_barren_root(naive)


def test_delete_barren_root_promotes_child():
    b = TreeBuilder(("A",))
    inner = b.decision("A", [("a", b.leaf(1)), ("b", b.leaf(2))])
    inner2 = b.decision("A", [("a", b.leaf(1)), ("b", b.leaf(2))])
    t = b.build(b.chance([("x", inner, "1/4"), ("y", inner2, "3/4")]))
    g = build_ceg(t)
    before = propagate(g).root_vector
    with pytest.raises(SimplificationError):
        delete_barren(g, g.root)
    (child,) = g.children(g.root)
    g2 = delete_barren_root(g)
    assert g2.root == child
    assert propagate(g2).root_vector == before == (2,)


def test_parsimonious_level_counts(parsimonious):
    g, _ = parsimonious
    assert g.count_by_var() == {"D1(A)": 1, "D1(B)": 2, "X3": 4, "D2(A)": 1, "D2(B)": 2, "X4": 4, "U": 3}
    assert len(g.positions) == 17
    assert g.positions[g.root].var == "D1(A)"
    assert check_ceg(g) == []


def test_cascade_order(parsimonious):
    _, trace = parsimonious
    barren_vars = [s.var for s in trace if isinstance(s, BarrenDeleted)]
    first = {v: barren_vars.index(v) for v in ("X4", "D2(B)", "D2(A)", "X1")}
    assert first["X4"] < first["D2(B)"] < first["D2(A)"]
    assert barren_vars[-1] == "X1"
    assert trace[-1].was_root if isinstance(trace[-1], BarrenDeleted) else True


def test_replay_reproduces_output(naive, parsimonious):
    g, trace = parsimonious
    assert replay(naive, trace) == g
    restored = trace_from_json(json.loads(json.dumps(trace_to_json(trace))))
    assert restored == trace
    assert replay(naive, restored) == g


def test_monotone_node_count(naive, parsimonious):
    _, trace = parsimonious
    g = naive
    sizes = [len(g.positions)]
    for step in trace:
        g = replay(g, [step])
        sizes.append(len(g.positions))
    assert all(a > b for a, b in zip(sizes, sizes[1:]))
    assert len(trace) <= sizes[0]


def test_fixpoint_is_idempotent(parsimonious):
    g, _ = parsimonious
    again, trace = parsimonize(g)
    assert trace == [] and again == g
    assert coalesce_positions(g) == g


def test_already_parsimonious_input_has_empty_trace():
    b = TreeBuilder(("A", "B"))
    inner = b.chance([("x", b.leaf(1, 0), "1/3"), ("y", b.leaf(2, 0), "2/3")])
    t = b.build(b.decision("B", [("l", inner), ("r", b.leaf(0, 5))]))
    g = build_ceg(t)
    out, trace = parsimonize(g)
    assert trace == [] and out == g


def test_coalescence_merges_equivalent_decisions(naive):
    g = naive
    for w in sorted(find_barren(g)):
        if g.positions[w].var == "X4":
            g = delete_barren(g, w)
    merged = coalesce_positions(g)
    assert merged.count_by_var()["X4"] == 4
    assert len(merged.positions) < len(g.positions)


def test_edge_utilities_rejected(oil):
    with pytest.raises(SimplificationError):
        parsimonize(build_ceg(oil))


@pytest.mark.parametrize("seed", range(40))
def test_solution_preserved(seed):
    t = push_edge_utilities_to_leaves(random_game(seed))
    g = build_ceg(t)
    p, _ = parsimonize(g)
    assert propagate(p).root_vector == propagate(g).root_vector == tree_rollback(t).root_vector


@pytest.mark.parametrize("seed", range(40))
def test_coalesced_decisions_share_tree_optimal_actions(seed):
    t = push_edge_utilities_to_leaves(random_game(seed, with_ties=seed % 2 == 1))
    p, _ = parsimonize(build_ceg(t))
    ceg_sol = propagate(p)
    tree_sol = tree_rollback(t)
    covered = set()
    for pid, pos in p.positions.items():
        if isinstance(pos.kind, Decision):
            for m in pos.members:
                assert tree_sol.optimal_actions(m) == ceg_sol.optimal_actions(pid)
                covered.add(m)
    for nid, node in t.nodes.items():
        if isinstance(node.kind, Decision) and nid not in covered:
            # absorbed by a barren deletion: every action is optimal there
            assert tree_sol.optimal_actions(nid) == {e.label for e in node.edges}


@pytest.mark.parametrize("seed", range(10))
def test_random_order_reaches_same_fixpoint(seed):
    g = build_ceg(push_edge_utilities_to_leaves(random_game(seed)))
    ref = canonical_digest(parsimonize(g)[0])
    for k in range(5):
        out, trace = parsimonize(g, rng=random.Random(k))
        assert canonical_digest(out) == ref
        assert replay(g, trace) == out


def test_trace_json_shape(parsimonious):
    _, trace = parsimonious
    records = trace_to_json(trace)
    assert {r["kind"] for r in records} == {"barren_deleted", "coalesced"}
    coalesced = [s for s in trace if isinstance(s, Coalesced)]
    assert all(s.into in s.positions for s in coalesced)

from __future__ import annotations

from fractions import Fraction
from itertools import product

import pytest

from cegames import fixtures
from cegames.ceg import Ceg
from cegames.game_model import Chance, Decision, GameTree, Utility

ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def radicalisation() -> GameTree:
    return fixtures.load("radicalisation")


@pytest.fixture(scope="session")
def oil() -> GameTree:
    return fixtures.load("oil")


def subtree_equivalent(t: GameTree, a: str, b: str, memo: dict | None = None) -> bool:
    """Recursive pairwise comparison of two rooted subtrees (quadratic oracle)."""
    if memo is None:
        memo = {}
    key = (a, b)
    if key in memo:
        return memo[key]
    na, nb = t.nodes[a], t.nodes[b]
    if type(na.kind) is not type(nb.kind):
        res = False
    elif isinstance(na.kind, Utility):
        res = na.kind.u == nb.kind.u
    elif isinstance(na.kind, Decision) and na.kind.owner != nb.kind.owner:
        res = False
    else:
        ea = {e.label: e for e in na.edges}
        eb = {e.label: e for e in nb.edges}
        res = set(ea) == set(eb) and all(
            ea[lab].prob == eb[lab].prob
            and ea[lab].utility == eb[lab].utility
            and subtree_equivalent(t, ea[lab].target, eb[lab].target, memo)
            for lab in ea
        )
    memo[key] = res
    return res


def tree_sink_distribution(t: GameTree, g: Ceg, choice: dict[str, str]) -> dict[str, Fraction]:
    """Reach probability of each sink by enumerating tree paths.

    ``choice`` maps CEG decision positions to an action label; a tree decision
    node follows the choice of the position containing it.
    """
    out: dict[str, Fraction] = {}
    stack = [(t.root, Fraction(1))]
    while stack:
        nid, p = stack.pop()
        node = t.nodes[nid]
        if isinstance(node.kind, Utility):
            sink = g.position_of_member(nid)
            out[sink] = out.get(sink, Fraction(0)) + p
            continue
        for e in node.edges:
            if isinstance(node.kind, Chance):
                stack.append((e.target, p * e.prob))
            elif choice[g.position_of_member(nid)] == e.label:
                stack.append((e.target, p))
    return out


def ceg_sink_distribution(g: Ceg, choice: dict[str, str]) -> dict[str, Fraction]:
    from cegames.ceg import topological_order

    reach = {p: Fraction(0) for p in g.positions}
    reach[g.root] = Fraction(1)
    for p in topological_order(g):
        kind = g.positions[p].kind
        for i in g.out_edges[p]:
            e = g.edges[i]
            if isinstance(kind, Chance):
                reach[e.target] += reach[p] * e.prob
            elif isinstance(kind, Decision) and choice[p] in e.labels:
                reach[e.target] += reach[p]
    return {p: r for p, r in reach.items() if isinstance(g.positions[p].kind, Utility) and r}


def all_position_choices(g: Ceg, limit: int = 64):
    decisions = sorted(p for p, pos in g.positions.items() if isinstance(pos.kind, Decision))
    options = [[g.edges[i].labels[0] for i in g.out_edges[p]] for p in decisions]
    for k, combo in enumerate(product(*options)):
        if k >= limit:
            return
        yield dict(zip(decisions, combo))

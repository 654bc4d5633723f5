"""Seeded random games for property tests and the ``generate`` command."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .game_model import Chance, Decision, GameTree, Node, TreeEdge, Utility

PLAYERS = ("A", "B", "C")
DECISION_LABELS = ("a", "b", "c")
CHANCE_LABELS = ("x", "y", "z")


@dataclass
class _Level:
    var: str
    owner: str | None  # None for chance levels
    branching: int
    parents: tuple[str, ...]  # earlier variables the level's distribution depends on


def random_distribution(rng: random.Random, k: int, max_denominator: int = 12) -> tuple[Fraction, ...]:
    """k strictly positive rationals summing to 1, denominators at most ``max_denominator``."""
    d = rng.randint(k, max_denominator)
    cuts = sorted(rng.sample(range(1, d), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [d])]
    return tuple(Fraction(p, d) for p in parts)


def random_game(
    seed: int,
    *,
    with_ties: bool = False,
    max_nodes: int = 200,
    max_depth: int = 8,
    players: int | None = None,
) -> GameTree:
    """A stratified game tree.

    Every level is one variable. Chance distributions and leaf utilities
    depend only on a random subset of earlier variables, so stages, shared
    positions and barren vertices all occur. Leaves appear early at random
    and whenever the node budget runs out, which makes the tree asymmetric.
    Utilities are distinct integers in [-50, 50]; ``with_ties`` adds one
    decision whose first two actions give its owner an equal, maximal payoff
    of 60 with different payoffs for the others.
    """
    rng = random.Random(seed)
    n_players = players or rng.choice((2, 3))
    names = PLAYERS[:n_players]
    depth = rng.randint(2, max_depth)

    levels: list[_Level] = []
    for k in range(depth):
        var = f"V{k + 1}"
        earlier = [lv.var for lv in levels]
        parents = tuple(sorted(rng.sample(earlier, min(len(earlier), rng.randint(0, 2))), key=earlier.index))
        owner = rng.choice(names) if rng.random() < 0.5 else None
        if with_ties and k == 0:
            owner = rng.choice(names)
        levels.append(_Level(var, owner, rng.choice((2, 2, 3)), parents))
    variables = tuple(lv.var for lv in levels)

    relevant = sorted(rng.sample(variables, min(len(variables), rng.randint(0, 3))), key=variables.index)
    pool = rng.sample(range(-50, 51), 101)
    utilities: dict[tuple, tuple[Fraction, ...]] = {}
    distributions: dict[tuple, tuple[Fraction, ...]] = {}

    def utility_for(history: dict[str, str]) -> tuple[Fraction, ...]:
        key = tuple(history.get(v) for v in relevant)
        if key not in utilities:
            if len(pool) >= n_players:
                utilities[key] = tuple(Fraction(pool.pop()) for _ in range(n_players))
            else:
                utilities[key] = tuple(Fraction(rng.randint(-50, 50)) for _ in range(n_players))
        return utilities[key]

    nodes: dict[str, Node] = {}
    count = 0

    def new_id() -> str:
        nonlocal count
        count += 1
        return f"n{count - 1}"

    root = new_id()
    # (node id, level index, history); the node is materialised when popped
    queue = deque([(root, 0, {})])
    tie_placed = not with_ties
    while queue:
        nid, k, history = queue.popleft()
        if k >= depth or (k > 0 and rng.random() < 0.1):
            nodes[nid] = Node(Utility(utility_for(history)))
            continue
        lv = levels[k]
        if count + lv.branching > max_nodes:
            nodes[nid] = Node(Utility(utility_for(history)))
            continue
        if lv.owner is not None:
            labels = DECISION_LABELS[:lv.branching]
            probs: tuple = (None,) * lv.branching
            kind = Decision(lv.owner)
        else:
            labels = CHANCE_LABELS[:lv.branching]
            dkey = (lv.var,) + tuple(history.get(v) for v in lv.parents)
            if dkey not in distributions:
                distributions[dkey] = random_distribution(rng, lv.branching)
            probs = distributions[dkey]
            kind = Chance()
        edges = []
        for j, (label, p) in enumerate(zip(labels, probs)):
            child = new_id()
            h = dict(history)
            h[lv.var] = label
            if not tie_placed and j < 2:
                me = names.index(lv.owner)
                u = [Fraction(rng.randint(-50, 50)) for _ in names]
                u[me] = Fraction(60)
                if j == 1:
                    for i in range(n_players):
                        if i != me:
                            u[i] = nodes[edges[0].target].kind.u[i] + 1
                    tie_placed = True
                nodes[child] = Node(Utility(tuple(u)))
                edges.append(TreeEdge(label, child, p))
                continue
            skip = 2 if k + 2 <= depth and rng.random() < 0.1 else 1
            queue.append((child, k + skip, h))
            edges.append(TreeEdge(label, child, p))
        nodes[nid] = Node(kind, tuple(edges), lv.var)

    ordered = {f"n{i}": nodes[f"n{i}"] for i in range(count)}
    return GameTree(names, names[0], ordered, root, variables)

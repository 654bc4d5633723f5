"""Subgame-perfect equilibria by backward propagation of utility vectors.

:func:`propagate` works on a CEG; :func:`tree_rollback` is an independent
backward induction on the raw tree, and :func:`enumerate_policies` checks both
by brute force over pure strategy profiles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Union

from .ceg import Ceg, CycleError, natural_key, topological_order
from .game_model import Chance, Decision, GameTree, Utility, format_number

__all__ = [
    "Choice",
    "CycleError",
    "GuardExceeded",
    "Solution",
    "enumerate_policies",
    "extract_strategy",
    "is_subgame_perfect",
    "nash_profiles",
    "propagate",
    "topological_order",
    "tree_rollback",
]


class GuardExceeded(RuntimeError):
    """The requested enumeration is larger than the configured limit."""


@dataclass(frozen=True)
class Solution:
    """Propagated vectors and optimal actions for every node of a game graph.

    Edge ids index ``edges``, whose items are ``(source, labels, target)``.
    """

    players: tuple[str, ...]
    root: str
    order: tuple[str, ...]
    vector_at: Mapping[str, tuple[Fraction, ...]]
    edges: tuple[tuple[str, tuple[str, ...], str], ...]
    owner_of: Mapping[str, str]
    optimal_edges: Mapping[str, frozenset[int]]
    chosen_edge: Mapping[str, int]
    suboptimal_edges: frozenset[int]

    @property
    def root_vector(self) -> tuple[Fraction, ...]:
        return self.vector_at[self.root]

    def optimal_actions(self, node: str) -> frozenset[str]:
        return frozenset(lab for i in self.optimal_edges[node] for lab in self.edges[i][1])

    def chosen_action(self, node: str) -> str:
        return self.edges[self.chosen_edge[node]][1][0]

    def to_dict(self) -> dict[str, Any]:
        def vec(u):
            return {p: format_number(x) for p, x in zip(self.players, u)}

        def edge(i):
            src, labels, dst = self.edges[i]
            return {"labels": list(labels), "to": dst}

        decisions = {}
        for node in sorted(self.optimal_edges, key=natural_key):
            decisions[node] = {
                "owner": self.owner_of[node],
                "chosen": self.chosen_action(node),
                "optimal_actions": sorted(self.optimal_actions(node)),
                "optimal_edges": [edge(i) for i in sorted(self.optimal_edges[node])],
                "suboptimal_edges": [
                    edge(i) for i, e in enumerate(self.edges) if e[0] == node and i in self.suboptimal_edges
                ],
            }
        return {
            "players": list(self.players),
            "root": self.root,
            "root_vector": vec(self.root_vector),
            "order": list(self.order),
            "vectors": {n: vec(self.vector_at[n]) for n in self.order},
            "decisions": decisions,
        }


@dataclass(frozen=True)
class Choice:
    action: str
    optimal: tuple[str, ...]


def _edge_value(g: Ceg, i: int, vector_at: Mapping[str, tuple[Fraction, ...]]) -> tuple[Fraction, ...]:
    e = g.edges[i]
    child = vector_at[e.target]
    if e.utility is None:
        return child
    return tuple(a + b for a, b in zip(child, e.utility))


def propagate(g: Ceg) -> Solution:
    """Local propagation from the sinks to the root.

    Chance positions take the probability-weighted sum over all outgoing
    edges (parallel edges included); decision positions copy the vector of
    the edge maximising the owner's component. Ties keep every maximising
    edge as optimal and choose the one with the smallest label.
    """
    order = topological_order(g)
    index = {p: k for k, p in enumerate(g.players)}
    vector_at: dict[str, tuple[Fraction, ...]] = {}
    optimal: dict[str, frozenset[int]] = {}
    chosen: dict[str, int] = {}
    owner_of: dict[str, str] = {}
    decision_edges: set[int] = set()

    for pid in reversed(order):
        kind = g.positions[pid].kind
        outs = g.out_edges[pid]
        if isinstance(kind, Utility):
            vector_at[pid] = kind.u
        elif isinstance(kind, Chance):
            total = [Fraction(0)] * len(g.players)
            for i in outs:
                for k, x in enumerate(_edge_value(g, i, vector_at)):
                    total[k] += g.edges[i].prob * x
            vector_at[pid] = tuple(total)
        else:
            k = index[kind.owner]
            values = {i: _edge_value(g, i, vector_at) for i in outs}
            best = max(v[k] for v in values.values())
            opt = frozenset(i for i, v in values.items() if v[k] == best)
            pick = min(opt, key=lambda i: (g.edges[i].labels[0], i))
            optimal[pid], chosen[pid], owner_of[pid] = opt, pick, kind.owner
            vector_at[pid] = values[pick]
            decision_edges.update(outs)

    suboptimal = frozenset(decision_edges - set().union(*optimal.values()) if optimal else ())
    return Solution(
        players=g.players,
        root=g.root,
        order=tuple(order),
        vector_at=vector_at,
        edges=tuple((e.source, e.labels, e.target) for e in g.edges),
        owner_of=owner_of,
        optimal_edges=optimal,
        chosen_edge=chosen,
        suboptimal_edges=suboptimal,
    )


def extract_strategy(g: Ceg, s: Solution) -> dict[str, dict[str, Choice]]:
    """Per player, the chosen action (and full optimal set) at each of their positions."""
    out: dict[str, dict[str, Choice]] = {p: {} for p in g.players}
    for pid in s.order:
        if pid in s.chosen_edge:
            out[s.owner_of[pid]][pid] = Choice(s.chosen_action(pid), tuple(sorted(s.optimal_actions(pid))))
    return out


def tree_rollback(t: GameTree) -> Solution:
    """Backward induction directly on the uncoalesced tree."""
    order = t.level_order()
    edges: list[tuple[str, tuple[str, ...], str]] = []
    edge_ids: dict[str, list[int]] = {}
    for nid in order:
        edge_ids[nid] = []
        for e in t.nodes[nid].edges:
            edge_ids[nid].append(len(edges))
            edges.append((nid, (e.label,), e.target))

    value: dict[str, tuple[Fraction, ...]] = {}
    optimal: dict[str, frozenset[int]] = {}
    chosen: dict[str, int] = {}
    owner_of: dict[str, str] = {}
    losers: set[int] = set()

    for nid in reversed(order):
        node = t.nodes[nid]
        if isinstance(node.kind, Utility):
            value[nid] = node.kind.u
            continue
        through = []
        for e in node.edges:
            v = value[e.target]
            if e.utility is not None:
                v = tuple(a + b for a, b in zip(v, e.utility))
            through.append(v)
        if isinstance(node.kind, Chance):
            value[nid] = tuple(
                sum((e.prob * v[k] for e, v in zip(node.edges, through)), Fraction(0))
                for k in range(len(t.players))
            )
            continue
        k = t.players.index(node.kind.owner)
        best = max(v[k] for v in through)
        winners = [j for j, v in enumerate(through) if v[k] == best]
        first = min(winners, key=lambda j: node.edges[j].label)
        ids = edge_ids[nid]
        optimal[nid] = frozenset(ids[j] for j in winners)
        chosen[nid] = ids[first]
        owner_of[nid] = node.kind.owner
        losers.update(ids[j] for j in range(len(ids)) if j not in winners)
        value[nid] = through[first]

    return Solution(
        players=t.players,
        root=t.root,
        order=tuple(order),
        vector_at=value,
        edges=tuple(edges),
        owner_of=owner_of,
        optimal_edges=optimal,
        chosen_edge=chosen,
        suboptimal_edges=frozenset(losers),
    )


# -- brute force -----------------------------------------------------------

Game = Union[GameTree, Ceg]
Profile = dict  # decision point -> action label


@dataclass(frozen=True)
class _Arc:
    labels: tuple[str, ...]
    prob: Fraction | None
    utility: tuple[Fraction, ...] | None
    target: str


def _view(game: Game) -> tuple[str, dict[str, Any], dict[str, list[_Arc]], tuple[str, ...]]:
    if isinstance(game, GameTree):
        kinds = {n: node.kind for n, node in game.nodes.items()}
        arcs = {n: [_Arc((e.label,), e.prob, e.utility, e.target) for e in node.edges] for n, node in game.nodes.items()}
        return game.root, kinds, arcs, game.players
    kinds = {p: pos.kind for p, pos in game.positions.items()}
    arcs = {
        p: [_Arc(game.edges[i].labels, game.edges[i].prob, game.edges[i].utility, game.edges[i].target)
            for i in game.out_edges[p]]
        for p in game.positions
    }
    return game.root, kinds, arcs, game.players


def _evaluate(root, kinds, arcs, n_players, profile) -> dict[str, tuple[Fraction, ...]]:
    memo: dict[str, tuple[Fraction, ...]] = {}

    def through(a: _Arc) -> tuple[Fraction, ...]:
        v = value(a.target)
        return v if a.utility is None else tuple(x + y for x, y in zip(v, a.utility))

    def value(n: str) -> tuple[Fraction, ...]:
        if n in memo:
            return memo[n]
        kind = kinds[n]
        if isinstance(kind, Utility):
            out = kind.u
        elif isinstance(kind, Chance):
            out = tuple(Fraction(0) for _ in range(n_players))
            for a in arcs[n]:
                out = tuple(x + a.prob * y for x, y in zip(out, through(a)))
        else:
            (a,) = [a for a in arcs[n] if a.labels[0] == profile[n]]
            out = through(a)
        memo[n] = out
        return out

    for n in kinds:
        value(n)
    return memo


def enumerate_policies(game: Game, limit: int = 2**20) -> list[tuple[Profile, tuple[Fraction, ...]]]:
    """Expected utility vector of every pure strategy profile.

    A profile names one action per decision point (tree decision node or CEG
    decision position); merged CEG edges are named by their first label.
    """
    root, kinds, arcs, players = _view(game)
    points = sorted((n for n, k in kinds.items() if isinstance(k, Decision)), key=natural_key)
    choices = [[a.labels[0] for a in arcs[n]] for n in points]
    total = 1
    for c in choices:
        total *= len(c)
        if total > limit:
            raise GuardExceeded(f"more than {limit} joint policies")
    out = []
    for combo in itertools.product(*choices):
        profile = dict(zip(points, combo))
        out.append((profile, _evaluate(root, kinds, arcs, len(players), profile)[root]))
    return out


def nash_profiles(game: Game, results: list[tuple[Profile, tuple[Fraction, ...]]]) -> list[Profile]:
    """Profiles in ``results`` from which no player gains by a unilateral change of plan."""
    _, kinds, _, players = _view(game)
    owner = {n: k.owner for n, k in kinds.items() if isinstance(k, Decision)}
    survivors = []
    for profile, vec in results:
        stable = True
        for k, player in enumerate(players):
            others = {n: a for n, a in profile.items() if owner[n] != player}
            for other, ovec in results:
                if ovec[k] > vec[k] and all(other[n] == a for n, a in others.items()):
                    stable = False
                    break
            if not stable:
                break
        if stable:
            survivors.append(profile)
    return survivors


def is_subgame_perfect(game: Game, profile: Profile) -> bool:
    """True when no decision point admits a profitable one-shot deviation."""
    root, kinds, arcs, players = _view(game)
    values = _evaluate(root, kinds, arcs, len(players), profile)
    for n, kind in kinds.items():
        if not isinstance(kind, Decision):
            continue
        k = players.index(kind.owner)

        def through(a: _Arc) -> Fraction:
            v = values[a.target][k]
            return v if a.utility is None else v + a.utility[k]

        picked = [a for a in arcs[n] if a.labels[0] == profile[n]][0]
        if any(through(a) > through(picked) for a in arcs[n]):
            return False
    return True

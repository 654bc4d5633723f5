"""Stage and position partitions of game trees, and Chain Event Graph construction."""

from __future__ import annotations

import hashlib
import heapq
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Mapping

from .game_model import (
    Chance,
    Decision,
    GameTree,
    NodeKind,
    Utility,
    format_number,
    format_vector,
)

PALETTE = (
    "red", "blue", "green3", "orange", "purple", "gold", "cyan3", "magenta",
    "brown", "darkgreen", "navy", "deeppink", "olivedrab", "sienna", "steelblue", "tomato",
)


class CycleError(ValueError):
    """The graph handed to an ordering routine is not acyclic."""


def natural_key(s: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s))


def _kind_key(kind: NodeKind) -> tuple:
    if isinstance(kind, Utility):
        return ("U", kind.u)
    if isinstance(kind, Decision):
        return ("D", kind.owner)
    return ("C",)


# -- partitions on trees ---------------------------------------------------


@dataclass(frozen=True)
class StagePartition:
    """Vertex -> stage id. Utility vertices carry no stage."""

    stage_of: Mapping[str, int]

    @cached_property
    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for v, s in self.stage_of.items():
            out.setdefault(s, []).append(v)
        return out

    def colour_of(self, stage: int) -> int | None:
        """Palette index for stages shared by two or more vertices, else None."""
        shared = sorted(s for s, m in self.members.items() if len(m) > 1)
        if stage not in shared:
            return None
        return shared.index(stage) % len(PALETTE)


@dataclass(frozen=True)
class PositionPartition:
    position_of: Mapping[str, int]

    @cached_property
    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for v, s in self.position_of.items():
            out.setdefault(s, []).append(v)
        return out


def stage_signature(t: GameTree, nid: str) -> tuple | None:
    node = t.nodes[nid]
    if isinstance(node.kind, Utility):
        return None
    if isinstance(node.kind, Decision):
        return ("D", node.kind.owner, frozenset((e.label, e.utility) for e in node.edges))
    return ("C", frozenset((e.label, e.prob, e.utility) for e in node.edges))


def compute_stages(t: GameTree) -> StagePartition:
    """Group non-utility vertices by identical immediate futures."""
    groups: dict[tuple, list[str]] = {}
    for nid in t.nodes:
        sig = stage_signature(t, nid)
        if sig is not None:
            groups.setdefault(sig, []).append(nid)
    ordered = sorted(groups.values(), key=lambda m: min(natural_key(v) for v in m))
    return StagePartition({v: k for k, members in enumerate(ordered) for v in members})


def compute_positions(t: GameTree) -> PositionPartition:
    """Coarsest partition of vertices with identical complete futures.

    One reverse breadth-first pass: each vertex's signature refers to the
    (already assigned) classes of its children, so equal signatures mean
    isomorphic subtrees. Edge utilities, when present, are part of the edge.
    """
    order = t.level_order()
    interned: dict[tuple, int] = {}
    raw: dict[str, int] = {}
    for nid in reversed(order):
        node = t.nodes[nid]
        edges = tuple(sorted(
            ((e.label, e.prob, e.utility, raw[e.target]) for e in node.edges),
            key=repr,
        ))
        sig = (_kind_key(node.kind), edges)
        raw[nid] = interned.setdefault(sig, len(interned))
    renumber: dict[int, int] = {}
    for nid in order:
        renumber.setdefault(raw[nid], len(renumber))
    return PositionPartition({nid: renumber[raw[nid]] for nid in order})


# -- the graph -------------------------------------------------------------


@dataclass(frozen=True)
class Position:
    id: str
    kind: NodeKind
    var: str | None = None
    members: frozenset[str] = frozenset()


@dataclass(frozen=True)
class CegEdge:
    source: str
    labels: tuple[str, ...]
    target: str
    prob: Fraction | None = None
    utility: tuple[Fraction, ...] | None = None

    @property
    def label(self) -> str:
        return "|".join(self.labels)


@dataclass(frozen=True)
class Ceg:
    """A rooted DAG of positions. Multi-edges between two positions are allowed."""

    players: tuple[str, ...]
    perspective: str
    positions: Mapping[str, Position]
    edges: tuple[CegEdge, ...]
    root: str

    @cached_property
    def out_edges(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {p: [] for p in self.positions}
        for i, e in enumerate(self.edges):
            out[e.source].append(i)
        return out

    @cached_property
    def in_edges(self) -> dict[str, list[int]]:
        inc: dict[str, list[int]] = {p: [] for p in self.positions}
        for i, e in enumerate(self.edges):
            inc[e.target].append(i)
        return inc

    def children(self, pid: str) -> list[str]:
        seen: dict[str, None] = {}
        for i in self.out_edges[pid]:
            seen.setdefault(self.edges[i].target)
        return list(seen)

    def parents(self, pid: str) -> list[str]:
        seen: dict[str, None] = {}
        for i in self.in_edges[pid]:
            seen.setdefault(self.edges[i].source)
        return list(seen)

    def sinks(self) -> list[str]:
        return sorted((p for p, pos in self.positions.items() if isinstance(pos.kind, Utility)), key=natural_key)

    def has_edge_utilities(self) -> bool:
        return any(e.utility is not None for e in self.edges)

    @cached_property
    def _member_index(self) -> dict[str, str]:
        return {m: p for p, pos in self.positions.items() for m in pos.members}

    def position_of_member(self, tree_node: str) -> str | None:
        """Position currently representing a tree vertex; None once it was deleted."""
        return self._member_index.get(tree_node)

    def count_by_var(self) -> dict[str | None, int]:
        out: dict[str | None, int] = {}
        for pos in self.positions.values():
            key = "U" if isinstance(pos.kind, Utility) else pos.var
            out[key] = out.get(key, 0) + 1
        return out

    @cached_property
    def stage_of(self) -> dict[str, int]:
        """Stage ids of chance positions, grouping identical outgoing (labels, prob) sets."""
        groups: dict[tuple, list[str]] = {}
        for pid in topological_order(self):
            pos = self.positions[pid]
            if isinstance(pos.kind, Chance):
                sig = tuple(sorted(
                    (repr((self.edges[i].labels, self.edges[i].prob, self.edges[i].utility)) for i in self.out_edges[pid])
                ))
                groups.setdefault(sig, []).append(pid)
        return {p: k for k, members in enumerate(groups.values()) for p in members}


def topological_order(g: Ceg) -> list[str]:
    """Root first, children after parents, utility sinks in the final slots.

    Ties are broken by position id so the order is deterministic.
    """
    indeg = {p: 0 for p in g.positions}
    for e in g.edges:
        indeg[e.target] += 1
    sinks = [p for p, pos in g.positions.items() if isinstance(pos.kind, Utility)]
    sink_set = set(sinks)
    heap = [(natural_key(p), p) for p, d in indeg.items() if d == 0 and p not in sink_set]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        _, p = heapq.heappop(heap)
        order.append(p)
        for i in g.out_edges[p]:
            c = g.edges[i].target
            indeg[c] -= 1
            if indeg[c] == 0 and c not in sink_set:
                heapq.heappush(heap, (natural_key(c), c))
    if len(order) != len(g.positions) - len(sinks):
        raise CycleError("graph contains a cycle")
    if order and order[0] != g.root:
        raise ValueError(f"root {g.root} is not the unique source")
    return order + sorted(sinks, key=natural_key)


def check_ceg(g: Ceg) -> list[str]:
    """Structural problems with ``g``; empty when it is a valid graph."""
    problems: list[str] = []
    if g.root not in g.positions:
        return [f"root {g.root} missing"]
    for e in g.edges:
        if e.source not in g.positions or e.target not in g.positions:
            problems.append(f"dangling edge {e}")
    if problems:
        return problems
    try:
        order = topological_order(g)
    except ValueError as exc:
        return [str(exc)]
    reach = {g.root}
    for p in order:
        if p in reach:
            reach.update(g.children(p))
    for p in sorted(set(g.positions) - reach, key=natural_key):
        problems.append(f"{p} unreachable")
    for pid, pos in g.positions.items():
        outs = [g.edges[i] for i in g.out_edges[pid]]
        if isinstance(pos.kind, Utility):
            if outs:
                problems.append(f"{pid} utility position has outgoing edges")
            continue
        if not outs:
            problems.append(f"{pid} non-utility position has no outgoing edges")
        labels = [lab for e in outs for lab in e.labels]
        if len(labels) != len(set(labels)):
            problems.append(f"{pid} repeats an outgoing label")
        if isinstance(pos.kind, Chance):
            if any(e.prob is None for e in outs):
                problems.append(f"{pid} chance edge without probability")
            elif sum((e.prob for e in outs), Fraction(0)) != 1:
                problems.append(f"{pid} probabilities do not sum to 1")
    return problems


def build_ceg(t: GameTree) -> Ceg:
    """Coalesce the vertices of ``t`` that share a position."""
    part = compute_positions(t)
    order = t.level_order()
    pid = {k: f"w{k + 1}" for k in part.members}
    positions: dict[str, Position] = {}
    edges: list[CegEdge] = []
    for k, members in sorted(part.members.items()):
        rep = t.nodes[members[0]]
        vars_ = {t.nodes[m].var for m in members}
        positions[pid[k]] = Position(pid[k], rep.kind, vars_.pop() if len(vars_) == 1 else None, frozenset(members))
        for e in rep.edges:
            edges.append(CegEdge(pid[k], (e.label,), pid[part.position_of[e.target]], e.prob, e.utility))
    return Ceg(t.players, t.perspective, positions, tuple(edges), pid[part.position_of[order[0]]])


def canonical_digest(g: Ceg) -> str:
    """Digest of the graph's unfolding from the root, invariant under renaming.

    Two fully coalesced graphs are isomorphic iff their digests agree.
    """
    digest: dict[str, str] = {}
    for p in reversed(topological_order(g)):
        pos = g.positions[p]
        edges = sorted(
            repr((g.edges[i].labels, g.edges[i].prob, g.edges[i].utility, digest[g.edges[i].target]))
            for i in g.out_edges[p]
        )
        payload = repr((_kind_key(pos.kind), edges))
        digest[p] = hashlib.sha256(payload.encode()).hexdigest()
    return digest[g.root]


# -- serialization ---------------------------------------------------------


def ceg_to_dict(g: Ceg) -> dict[str, Any]:
    positions: dict[str, Any] = {}
    for pid, pos in g.positions.items():
        rec: dict[str, Any] = {"members": sorted(pos.members, key=natural_key)}
        if isinstance(pos.kind, Utility):
            rec["kind"] = "utility"
            rec["u"] = {p: format_number(x) for p, x in zip(g.players, pos.kind.u)}
        elif isinstance(pos.kind, Decision):
            rec["kind"] = "decision"
            rec["owner"] = pos.kind.owner
        else:
            rec["kind"] = "chance"
            rec["stage"] = g.stage_of[pid]
        if pos.var is not None:
            rec["var"] = pos.var
        positions[pid] = rec
    edges = []
    for e in g.edges:
        rec = {"from": e.source, "to": e.target, "labels": list(e.labels)}
        if e.prob is not None:
            rec["p"] = format_number(e.prob)
        if e.utility is not None:
            rec["edge_utility"] = {p: format_number(x) for p, x in zip(g.players, e.utility)}
        edges.append(rec)
    return {
        "players": list(g.players),
        "perspective": g.perspective,
        "root": g.root,
        "order": topological_order(g),
        "positions": positions,
        "edges": edges,
    }


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: Ceg, sol: Any = None) -> str:
    """Render ``g`` as Graphviz DOT text.

    With a solution, decision edges it marks as sub-optimal are dashed.
    """
    order = topological_order(g)
    stage_of = g.stage_of
    stage_sizes: dict[int, int] = {}
    for s in stage_of.values():
        stage_sizes[s] = stage_sizes.get(s, 0) + 1
    shared = sorted(s for s, n in stage_sizes.items() if n > 1)
    dashed = set(sol.suboptimal_edges) if sol is not None else set()

    lines = ["digraph ceg {"]
    for pid in order:
        pos = g.positions[pid]
        name = pos.var or pid
        if isinstance(pos.kind, Decision):
            attrs = f'shape=box, label="{_dot_escape(name)}\\n{_dot_escape(pos.kind.owner)}"'
        elif isinstance(pos.kind, Utility):
            attrs = f'shape=diamond, label="{_dot_escape(format_vector(pos.kind.u))}"'
        else:
            attrs = f'shape=ellipse, label="{_dot_escape(name)}"'
            s = stage_of[pid]
            if s in shared:
                attrs += f', color="{PALETTE[shared.index(s) % len(PALETTE)]}"'
        lines.append(f"  {pid} [{attrs}];")
    rank = {p: k for k, p in enumerate(order)}
    for i in sorted(range(len(g.edges)), key=lambda i: (rank[g.edges[i].source], i)):
        e = g.edges[i]
        label = ", ".join(e.labels)
        if e.prob is not None:
            label += f" : {format_number(e.prob)}"
        if e.utility is not None:
            label += f" {format_vector(e.utility)}"
        attrs = f'label="{_dot_escape(label)}"'
        if i in dashed:
            attrs += ", style=dashed"
        lines.append(f"  {e.source} -> {e.target} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""Reduction of a CEG to parsimonious form.

Two step types are applied from the leaves towards the root until neither
changes the graph: deletion of barren positions (every outgoing edge ends in
the same child) and coalescence of positions rooting identical sub-graphs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Iterable, Union

from .ceg import Ceg, CegEdge, Position, _kind_key, natural_key, topological_order
from .game_model import Utility


class SimplificationError(ValueError):
    pass


@dataclass(frozen=True)
class BarrenDeleted:
    position: str
    absorbed_into: str
    var: str | None = None
    was_root: bool = False


@dataclass(frozen=True)
class Coalesced:
    positions: tuple[str, ...]
    into: str
    var: str | None = None


Step = Union[BarrenDeleted, Coalesced]


def trace_to_json(trace: Iterable[Step]) -> list[dict[str, Any]]:
    out = []
    for step in trace:
        if isinstance(step, BarrenDeleted):
            rec: dict[str, Any] = {
                "kind": "barren_deleted",
                "position": step.position,
                "absorbed_into": step.absorbed_into,
                "root": step.was_root,
            }
        else:
            rec = {"kind": "coalesced", "positions": list(step.positions), "into": step.into}
        if step.var is not None:
            rec["var"] = step.var
        out.append(rec)
    return out


def trace_from_json(records: Iterable[dict[str, Any]]) -> list[Step]:
    steps: list[Step] = []
    for rec in records:
        if rec["kind"] == "barren_deleted":
            steps.append(BarrenDeleted(rec["position"], rec["absorbed_into"], rec.get("var"), rec.get("root", False)))
        elif rec["kind"] == "coalesced":
            steps.append(Coalesced(tuple(rec["positions"]), rec["into"], rec.get("var")))
        else:
            raise ValueError(f"unknown step kind {rec['kind']!r}")
    return steps


def _require_leaf_utilities(g: Ceg) -> None:
    if g.has_edge_utilities():
        raise SimplificationError("simplification needs utilities on the sinks only; push edge utilities first")


def is_barren(g: Ceg, pid: str) -> bool:
    if isinstance(g.positions[pid].kind, Utility):
        return False
    return len(g.children(pid)) == 1


def find_barren(g: Ceg) -> set[str]:
    """Non-utility positions whose outgoing edges all end in one position."""
    return {p for p in g.positions if is_barren(g, p)}


def _fuse_parallel(edges: Iterable[CegEdge]) -> tuple[CegEdge, ...]:
    """Collapse edges sharing a source and target into one edge.

    The survivor sits where the first of them was, carries the sorted union of
    their labels and, for chance edges, the sum of their probabilities.
    """
    slots: dict[tuple[str, str], list[CegEdge]] = {}
    for e in edges:
        slots.setdefault((e.source, e.target), []).append(e)
    out = []
    for (source, target), group in slots.items():
        if len(group) == 1:
            out.append(group[0])
            continue
        labels = tuple(sorted({lab for e in group for lab in e.labels}))
        prob = None if group[0].prob is None else sum((e.prob for e in group), Fraction(0))
        out.append(CegEdge(source, labels, target, prob))
    return tuple(out)


def delete_barren(g: Ceg, w: str) -> Ceg:
    """Route every parent of barren ``w`` straight to its only child.

    A parent's edges into ``w`` (and any edge it already had into the child)
    become one edge carrying the sorted union of their labels and, for a
    chance parent, the sum of their probabilities.
    """
    _require_leaf_utilities(g)
    if w not in g.positions or not is_barren(g, w):
        raise SimplificationError(f"{w} is not a barren position")
    if w == g.root:
        raise SimplificationError(f"{w} is the root; use delete_barren_root")
    (child,) = g.children(w)
    edges = _fuse_parallel(
        replace(e, target=child) if e.target == w else e for e in g.edges if e.source != w
    )
    positions = {p: pos for p, pos in g.positions.items() if p != w}
    return replace(g, positions=positions, edges=edges)


def delete_barren_root(g: Ceg) -> Ceg:
    """Drop a barren root; its only child becomes the root."""
    _require_leaf_utilities(g)
    if not is_barren(g, g.root):
        raise SimplificationError(f"root {g.root} is not barren")
    (child,) = g.children(g.root)
    positions = {p: pos for p, pos in g.positions.items() if p != g.root}
    edges = tuple(e for e in g.edges if e.source != g.root)
    return replace(g, positions=positions, edges=edges, root=child)


def _merge(g: Ceg, into: dict[str, str]) -> Ceg:
    """Merge positions per ``into`` (member -> representative)."""
    groups: dict[str, list[str]] = {}
    for m, rep in into.items():
        groups.setdefault(rep, []).append(m)
    positions: dict[str, Position] = {}
    for pid, pos in g.positions.items():
        if pid in into and into[pid] != pid:
            continue
        if pid in groups:
            members = [g.positions[m] for m in groups[pid]]
            vars_ = {m.var for m in members}
            pos = replace(
                pos,
                var=vars_.pop() if len(vars_) == 1 else None,
                members=frozenset().union(*(m.members for m in members)),
            )
        positions[pid] = pos
    edges = _fuse_parallel(
        replace(e, target=into.get(e.target, e.target))
        for e in g.edges
        if into.get(e.source, e.source) == e.source
    )
    root = into.get(g.root, g.root)
    return replace(g, positions=positions, edges=edges, root=root)


def _coalesce(g: Ceg) -> tuple[Ceg, list[Step]]:
    cls: dict[str, int] = {}
    interned: dict[tuple, int] = {}
    for p in reversed(topological_order(g)):
        # edges into one class would be fused by the merge, so compare them fused
        fused = _fuse_parallel(
            CegEdge(p, g.edges[i].labels, str(cls[g.edges[i].target]), g.edges[i].prob)
            for i in g.out_edges[p]
        )
        sig = (_kind_key(g.positions[p].kind), tuple(sorted(repr((e.labels, e.prob, e.target)) for e in fused)))
        cls[p] = interned.setdefault(sig, len(interned))
    groups: dict[int, list[str]] = {}
    for p, c in cls.items():
        groups.setdefault(c, []).append(p)
    into: dict[str, str] = {}
    steps: list[Step] = []
    for members in groups.values():
        if len(members) < 2:
            continue
        members.sort(key=natural_key)
        for m in members:
            into[m] = members[0]
        steps.append(Coalesced(tuple(members), members[0], g.positions[members[0]].var))
    if not steps:
        return g, []
    steps.sort(key=lambda s: natural_key(s.into))
    return _merge(g, into), steps


def coalesce_positions(g: Ceg) -> Ceg:
    """Merge every class of the coarsest position partition of ``g``."""
    return _coalesce(g)[0]


def _local_classes(g: Ceg) -> list[tuple[str, ...]]:
    """Groups of positions with identical kind and identical outgoing edges."""
    groups: dict[tuple, list[str]] = {}
    for p in g.positions:
        sig = (
            _kind_key(g.positions[p].kind),
            tuple(sorted(
                repr((g.edges[i].labels, g.edges[i].prob, g.edges[i].utility, g.edges[i].target))
                for i in g.out_edges[p]
            )),
        )
        groups.setdefault(sig, []).append(p)
    return [tuple(sorted(m, key=natural_key)) for m in groups.values() if len(m) > 1]


def _delete(g: Ceg, w: str) -> tuple[Ceg, Step]:
    (child,) = g.children(w)
    step = BarrenDeleted(w, child, g.positions[w].var, w == g.root)
    return (delete_barren_root(g) if w == g.root else delete_barren(g, w)), step


def parsimonize(g: Ceg, rng: random.Random | None = None) -> tuple[Ceg, list[Step]]:
    """Run barren deletion and coalescence to a fixpoint.

    By default each round is a full barren sweep in reverse topological order
    followed by one coarsest coalescence. With ``rng`` a random admissible
    single step is applied at each iteration instead; this exists to check
    that the fixpoint does not depend on step order.
    """
    _require_leaf_utilities(g)
    trace: list[Step] = []
    if rng is not None:
        while True:
            options: list[tuple[str, Any]] = [("delete", w) for w in sorted(find_barren(g), key=natural_key)]
            options += [("merge", cls) for cls in _local_classes(g)]
            if not options:
                return g, trace
            kind, arg = rng.choice(options)
            if kind == "delete":
                g, step = _delete(g, arg)
            else:
                g = _merge(g, {m: arg[0] for m in arg})
                step = Coalesced(arg, arg[0], g.positions[arg[0]].var)
            trace.append(step)

    while True:
        changed = False
        for w in reversed(topological_order(g)):
            if w in g.positions and is_barren(g, w):
                g, step = _delete(g, w)
                trace.append(step)
                changed = True
        g, steps = _coalesce(g)
        trace.extend(steps)
        if not changed and not steps:
            return g, trace


def replay(g: Ceg, trace: Iterable[Step]) -> Ceg:
    """Apply a recorded trace to ``g``."""
    for step in trace:
        if isinstance(step, BarrenDeleted):
            if step.was_root:
                if g.root != step.position:
                    raise SimplificationError(f"trace expects root {step.position}, graph root is {g.root}")
                g = delete_barren_root(g)
            else:
                g = delete_barren(g, step.position)
        else:
            g = _merge(g, {m: step.into for m in step.positions})
    return g


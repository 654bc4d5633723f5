"""Conditional-independence statements read from stage and position cuts.

A cut collects the vertices annotated with one variable. A statement
``T ⟂ S | R`` is emitted when the cut's classes (stage or position) are a
function of the values taken by the variables in ``R`` on the way to each
vertex, for the smallest such ``R``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

from .ceg import compute_positions, compute_stages, PositionPartition, StagePartition
from .game_model import Chance, Decision, GameTree, Utility, push_edge_utilities_to_leaves
from .solve import GuardExceeded

UTILITY = "U"
POSITION_TARGET_NOTE = "position cuts list the cut variable, every later chance variable and U as targets"


class CiError(ValueError):
    pass


@dataclass(frozen=True)
class CiStatement:
    targets: tuple[str, ...]
    superfluous: tuple[str, ...]
    conditioners: tuple[str, ...]
    context: tuple[tuple[str, str], ...] = ()
    kind: str = "stage"
    variable: str = ""
    alternative: bool = False
    alternatives: tuple[CiStatement, ...] = field(default=(), compare=False)

    def render(self) -> str:
        text = f"{_group(self.targets)} ⟂ {_group(self.superfluous)} | {_group(self.conditioners)}"
        if self.context:
            text += " [ctx: " + ", ".join(f"{v}={x}" for v, x in self.context) + "]"
        return text

    __str__ = render

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.render(),
            "kind": self.kind,
            "variable": self.variable,
            "targets": list(self.targets),
            "superfluous": list(self.superfluous),
            "conditioners": list(self.conditioners),
            "context": [{"variable": v, "value": x} for v, x in self.context],
            "alternative": self.alternative,
        }


def _group(names: tuple[str, ...]) -> str:
    if not names:
        return "∅"
    if len(names) == 1:
        return names[0]
    return "(" + ", ".join(names) + ")"


# -- tree helpers ----------------------------------------------------------


def histories(t: GameTree) -> dict[str, dict[str, str]]:
    """Variable values fixed on the path from the root to each vertex (exclusive)."""
    out = {t.root: {}}
    for nid in t.level_order():
        node = t.nodes[nid]
        for e in node.edges:
            h = dict(out[nid])
            if node.var is not None:
                h[node.var] = e.label
            out[e.target] = h
    return out


def slice_tree(t: GameTree, context: Iterable[tuple[str, str]]) -> GameTree:
    """Keep only the paths on which each context variable takes its given value."""
    fixed = dict(context)
    nodes = {}
    for nid, node in t.nodes.items():
        if node.var in fixed:
            node = replace(node, edges=tuple(e for e in node.edges if e.label == fixed[node.var]))
        nodes[nid] = node
    reached = set()
    stack = [t.root]
    while stack:
        nid = stack.pop()
        reached.add(nid)
        stack.extend(e.target for e in nodes[nid].edges)
    return replace(t, nodes={n: nodes[n] for n in t.nodes if n in reached})


def _vertices(t: GameTree, v: str) -> list[str]:
    return [n for n in t.level_order() if t.nodes[n].var == v]


def _is_chance_var(t: GameTree, v: str) -> bool:
    kinds = {type(t.nodes[n].kind) for n in t.nodes if t.nodes[n].var == v}
    return kinds == {Chance}


def _priors(t: GameTree, v: str, context: tuple[tuple[str, str], ...]) -> list[str]:
    fixed = {c for c, _ in context}
    upto = len(t.variables) if v == UTILITY else t.variables.index(v)
    return [x for x in t.variables[:upto] if x not in fixed]


def _check(t: GameTree, v: str) -> None:
    if not t.variables:
        raise CiError("the game has no variable annotation")
    if v != UTILITY and v not in t.variables:
        raise CiError(f"unknown variable {v!r}")


def minimal_conditioners(units: list[tuple[dict[str, str], Any, tuple]], priors: list[str]) -> list[tuple[str, ...]]:
    """All smallest subsets R of ``priors`` on which the unit values are functional.

    ``units`` holds ``(history, value, extra_key)`` triples. Subsets are tried
    by size, and within a size in variable order.
    """
    for size in range(len(priors) + 1):
        found = []
        for subset in itertools.combinations(priors, size):
            seen: dict[tuple, Any] = {}
            if all(
                seen.setdefault(tuple(h.get(r) for r in subset) + extra, val) == val
                for h, val, extra in units
            ):
                found.append(subset)
        if found:
            return found
    return []


def _statement(
    found: list[tuple[str, ...]],
    priors: list[str],
    *,
    targets: tuple[str, ...],
    kind: str,
    variable: str,
    context: tuple[tuple[str, str], ...],
    prefix: tuple[str, ...] = (),
) -> CiStatement | None:
    if not priors or not found or len(found[0]) == len(priors):
        return None
    made = [
        CiStatement(
            targets=targets,
            superfluous=tuple(x for x in priors if x not in r),
            conditioners=prefix + r,
            context=context,
            kind=kind,
            variable=variable,
            alternative=k > 0,
        )
        for k, r in enumerate(found)
    ]
    return replace(made[0], alternatives=tuple(made[1:]))


def stage_cut_statement(
    t: GameTree,
    stages: StagePartition,
    v: str,
    context: tuple[tuple[str, str], ...] = (),
) -> CiStatement | None:
    """Statement about the immediate future of chance variable ``v``."""
    _check(t, v)
    if not _is_chance_var(t, v):
        raise CiError(f"{v!r} is not a chance variable")
    hist = histories(t)
    units = [(hist[n], stages.stage_of[n], ()) for n in _vertices(t, v)]
    priors = _priors(t, v, context)
    return _statement(
        minimal_conditioners(units, priors), priors,
        targets=(v,), kind="stage", variable=v, context=context,
    )


def position_cut_statement(
    t: GameTree,
    positions: PositionPartition,
    v: str,
    context: tuple[tuple[str, str], ...] = (),
) -> CiStatement | None:
    """Statement about the complete future from the ``v`` cut.

    ``v`` may be a chance variable, :data:`UTILITY` for the cut through the
    leaves, or a decision variable. For a decision variable the position
    reached by each action is examined, giving a statement of the form
    ``U_owner ⟂ S | (D, R)``: the information in ``S`` can be ignored when
    choosing at ``D``.
    """
    _check(t, v)
    hist = histories(t)
    priors = _priors(t, v, context)
    if v == UTILITY:
        leaves = [n for n in t.level_order() if isinstance(t.nodes[n].kind, Utility)]
        units = [(hist[n], positions.position_of[n], ()) for n in leaves]
        return _statement(
            minimal_conditioners(units, priors), priors,
            targets=(UTILITY,), kind="utility", variable=v, context=context,
        )
    vertices = _vertices(t, v)
    if _is_chance_var(t, v):
        later = t.variables[t.variables.index(v) + 1:]
        targets = (UTILITY, v) + tuple(x for x in later if _is_chance_var(t, x))
        units = [(hist[n], positions.position_of[n], ()) for n in vertices]
        return _statement(
            minimal_conditioners(units, priors), priors,
            targets=targets, kind="position", variable=v, context=context,
        )
    owners = {t.nodes[n].kind.owner for n in vertices if isinstance(t.nodes[n].kind, Decision)}
    if len(owners) != 1 or any(not isinstance(t.nodes[n].kind, Decision) for n in vertices):
        raise CiError(f"{v!r} mixes vertex kinds or owners")
    utility = f"{UTILITY}_{owners.pop()}"
    units = [
        (hist[n], positions.position_of[e.target], (e.label,))
        for n in vertices
        for e in t.nodes[n].edges
    ]
    return _statement(
        minimal_conditioners(units, priors), priors,
        targets=(utility,), kind="decision", variable=v, context=context, prefix=(v,),
    )


def _cut_statements(t: GameTree, v: str, context: tuple[tuple[str, str], ...]) -> list[CiStatement]:
    stages = compute_stages(t)
    positions = compute_positions(t)
    found = []
    if v != UTILITY and _is_chance_var(t, v):
        found.append(stage_cut_statement(t, stages, v, context))
    found.append(position_cut_statement(t, positions, v, context))
    return [s for s in found if s is not None]


def context_statements(t: GameTree, v: str, ctx: tuple[str, str]) -> list[CiStatement]:
    """Statements for ``v`` restricted to the paths where ``ctx[0] == ctx[1]``."""
    _check(t, v)
    var, _value = ctx
    if var not in t.variables:
        raise CiError(f"unknown context variable {var!r}")
    if v != UTILITY and t.variables.index(var) >= t.variables.index(v):
        raise CiError(f"context variable {var!r} must precede {v!r}")
    sliced = slice_tree(push_edge_utilities_to_leaves(t), [ctx])
    if v == UTILITY:
        present = any(isinstance(n.kind, Utility) for n in sliced.nodes.values())
    else:
        present = any(n.var == v for n in sliced.nodes.values())
    if not present or not any(t.nodes[n].var == var and any(e.label == _value for e in t.nodes[n].edges) for n in t.nodes):
        raise CiError(f"empty slice for {v!r} in context {var}={_value}")
    return _cut_statements(sliced, v, (tuple(ctx),))


def _redundant(ctx_stmt: CiStatement, base: dict[tuple[str, str], CiStatement]) -> bool:
    """A context statement adds nothing when the unconditioned one never used the context variable."""
    plain = base.get((ctx_stmt.kind, ctx_stmt.variable))
    if plain is None:
        return False
    var = ctx_stmt.context[0][0]
    return var not in plain.conditioners and set(plain.conditioners) == set(ctx_stmt.conditioners)


def _flatten(stmts: Iterable[CiStatement]) -> list[CiStatement]:
    out = []
    for s in stmts:
        out.append(replace(s, alternatives=()))
        out.extend(s.alternatives)
    return out


def all_statements(t: GameTree, max_vars: int = 12) -> list[CiStatement]:
    """Every cut statement of the game plus single-variable context statements."""
    if not t.variables:
        raise CiError("the game has no variable annotation")
    if len(t.variables) > max_vars:
        raise GuardExceeded(f"{len(t.variables)} variables exceed the subset-search limit of {max_vars}")
    t = push_edge_utilities_to_leaves(t)
    cut_vars = [v for v in t.variables if any(n.var == v for n in t.nodes.values())] + [UTILITY]

    base: list[CiStatement] = []
    for v in cut_vars:
        base.extend(_cut_statements(t, v, ()))
    by_cut = {(s.kind, s.variable): s for s in base}

    contextual: list[CiStatement] = []
    order = t.level_order()
    for var in cut_vars[:-1]:
        values: dict[str, None] = {}
        for n in order:
            if t.nodes[n].var == var:
                for e in t.nodes[n].edges:
                    values.setdefault(e.label)
        later = cut_vars[cut_vars.index(var) + 1:]
        for value in values:
            sliced = slice_tree(t, [(var, value)])
            for v in later:
                if v != UTILITY and not any(n.var == v for n in sliced.nodes.values()):
                    continue
                for s in _cut_statements(sliced, v, ((var, value),)):
                    if not _redundant(s, by_cut):
                        contextual.append(s)

    out: list[CiStatement] = []
    seen = set()
    for s in _flatten(base) + _flatten(contextual):
        key = (s.kind, s.render())
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


# -- brute-force check -----------------------------------------------------


def _futures(t: GameTree) -> dict[str, frozenset]:
    """Every complete future from each vertex as a multiset of explicit paths."""
    out: dict[str, frozenset] = {}
    for nid in reversed(t.level_order()):
        node = t.nodes[nid]
        if isinstance(node.kind, Utility):
            out[nid] = frozenset({((("leaf", node.kind.u),), 1)})
            continue
        tag = ("D", node.kind.owner) if isinstance(node.kind, Decision) else ("C",)
        paths: dict[tuple, int] = {}
        for e in node.edges:
            for path, count in out[e.target]:
                key = ((tag, e.label, e.prob),) + path
                paths[key] = paths.get(key, 0) + count
        out[nid] = frozenset(paths.items())
    return out


def verify_statement(t: GameTree, s: CiStatement) -> bool:
    """Check ``s`` by enumerating the raw probabilities and futures of the tree.

    Partitions are not consulted: stage statements compare each vertex's
    outgoing (label, probability) set and the other kinds compare the explicit
    set of root-to-leaf continuations.
    """
    t = slice_tree(push_edge_utilities_to_leaves(t), s.context)
    hist = histories(t)
    futures = _futures(t)
    cond = list(s.conditioners)
    units: list[tuple[dict[str, str], Any, tuple]] = []
    if s.kind == "stage":
        for n in _vertices(t, s.variable):
            units.append((hist[n], frozenset((e.label, e.prob) for e in t.nodes[n].edges), ()))
    elif s.kind == "utility":
        for n, node in t.nodes.items():
            if isinstance(node.kind, Utility):
                units.append((hist[n], node.kind.u, ()))
    elif s.kind == "position":
        for n in _vertices(t, s.variable):
            units.append((hist[n], futures[n], ()))
    else:
        cond = cond[1:]
        for n in _vertices(t, s.variable):
            for e in t.nodes[n].edges:
                units.append((hist[n], futures[e.target], (e.label,)))
    seen: dict[tuple, Any] = {}
    for h, val, extra in units:
        key = tuple(h.get(r) for r in cond) + extra
        if seen.setdefault(key, val) != val:
            return False
    return True

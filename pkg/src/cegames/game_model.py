"""Game documents: exact-arithmetic tree model, parsing, validation, serialization."""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field, replace
from decimal import Decimal
from fractions import Fraction
from typing import Any, Iterator, Mapping, Union

Rat = Fraction
UtilityVector = tuple  # tuple[Fraction, ...] in player order

_NUMBER_RE = re.compile(r"^[+-]?(\d+|\d+\.\d+|\d+/\d+)$")


class GameFormatError(ValueError):
    """Raised when a game document cannot be read (syntax or schema)."""

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class GameValidationError(ValueError):
    """Raised by :func:`parse_game` when the document violates tree invariants."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Decision:
    owner: str


@dataclass(frozen=True)
class Chance:
    pass


@dataclass(frozen=True)
class Utility:
    u: tuple[Fraction, ...]


NodeKind = Union[Decision, Chance, Utility]


@dataclass(frozen=True)
class TreeEdge:
    label: str
    target: str
    prob: Fraction | None = None
    utility: tuple[Fraction, ...] | None = None


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    edges: tuple[TreeEdge, ...] = ()
    var: str | None = None


@dataclass(frozen=True)
class GameTree:
    """A rooted game tree.

    ``nodes`` maps node ids to :class:`Node`; utility vectors are indexed by
    ``players``. ``perspective`` names the player whose subjective model this is.
    """

    players: tuple[str, ...]
    perspective: str
    nodes: Mapping[str, Node]
    root: str
    variables: tuple[str, ...] = ()

    def player_index(self, name: str) -> int:
        return self.players.index(name)

    def level_order(self) -> list[str]:
        """Breadth-first node ids from the root, following edge order."""
        return list(_bfs(self.nodes, self.root))

    def decision_variables(self) -> set[str]:
        return {n.var for n in self.nodes.values() if isinstance(n.kind, Decision) and n.var}

    def has_edge_utilities(self) -> bool:
        return any(e.utility is not None for n in self.nodes.values() for e in n.edges)


@dataclass(frozen=True)
class Diagnostic:
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


def _bfs(nodes: Mapping[str, Node], root: str) -> Iterator[str]:
    seen = {root}
    queue = deque([root])
    while queue:
        nid = queue.popleft()
        yield nid
        node = nodes.get(nid)
        if node is None:
            continue
        for e in node.edges:
            if e.target not in seen and e.target in nodes:
                seen.add(e.target)
                queue.append(e.target)


# -- numbers ---------------------------------------------------------------


def parse_number(value: Any) -> Fraction:
    """Convert a number-string (or exact JSON number) to a Fraction without rounding."""
    if isinstance(value, bool):
        raise GameFormatError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise GameFormatError(f"not a finite number: {value}")
        return Fraction(value)
    if isinstance(value, str) and _NUMBER_RE.match(value):
        r = Fraction(value)
        if "/" in value and int(value.split("/")[1]) == 0:
            raise GameFormatError(f"zero denominator: {value!r}")
        return r
    raise GameFormatError(f"not a number-string: {value!r}")


def format_number(r: Fraction) -> str:
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def format_vector(u: tuple[Fraction, ...]) -> str:
    return "(" + ", ".join(format_number(x) for x in u) + ")"


def add_vectors(a: tuple[Fraction, ...], b: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    return tuple(x + y for x, y in zip(a, b))


# -- parsing ---------------------------------------------------------------


def _require(obj: Mapping, key: str, where: str) -> Any:
    if key not in obj:
        raise GameFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _check_keys(obj: Any, allowed: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise GameFormatError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise GameFormatError(f"{where}: unknown field(s) {sorted(extra)}")


def _player_vector(obj: Any, players: tuple[str, ...], where: str) -> tuple[Fraction, ...]:
    if not isinstance(obj, dict):
        raise GameFormatError(f"{where}: utility must be an object keyed by player")
    if set(obj) != set(players):
        raise GameFormatError(f"{where}: utility keys {sorted(obj)} do not match players")
    try:
        return tuple(parse_number(obj[p]) for p in players)
    except GameFormatError as exc:
        raise GameFormatError(f"{where}: {exc}") from None


def game_from_dict(doc: Any) -> GameTree:
    """Build a GameTree from decoded JSON, checking the document schema."""
    _check_keys(doc, {"players", "perspective", "variables", "root", "nodes"}, "document")
    players = _require(doc, "players", "document")
    if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
        raise GameFormatError("document: 'players' must be an array of strings")
    players = tuple(players)
    perspective = _require(doc, "perspective", "document")
    if not isinstance(perspective, str):
        raise GameFormatError("document: 'perspective' must be a string")
    variables = doc.get("variables", [])
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        raise GameFormatError("document: 'variables' must be an array of strings")
    root = _require(doc, "root", "document")
    if not isinstance(root, str):
        raise GameFormatError("document: 'root' must be a string")
    raw_nodes = _require(doc, "nodes", "document")
    if not isinstance(raw_nodes, dict):
        raise GameFormatError("document: 'nodes' must be an object")

    nodes: dict[str, Node] = {}
    for nid, raw in raw_nodes.items():
        where = f"node {nid!r}"
        _check_keys(raw, {"kind", "owner", "u", "edges", "var"}, where)
        kind_name = _require(raw, "kind", where)
        var = raw.get("var")
        if var is not None and not isinstance(var, str):
            raise GameFormatError(f"{where}: 'var' must be a string")
        if kind_name == "utility":
            if "edges" in raw or "owner" in raw:
                raise GameFormatError(f"{where}: utility nodes take only 'u'")
            kind: NodeKind = Utility(_player_vector(_require(raw, "u", where), players, where))
            nodes[nid] = Node(kind, (), var)
            continue
        if kind_name == "decision":
            owner = _require(raw, "owner", where)
            if not isinstance(owner, str):
                raise GameFormatError(f"{where}: 'owner' must be a string")
            kind = Decision(owner)
        elif kind_name == "chance":
            if "owner" in raw:
                raise GameFormatError(f"{where}: chance nodes have no owner")
            kind = Chance()
        else:
            raise GameFormatError(f"{where}: unknown kind {kind_name!r}")
        if "u" in raw:
            raise GameFormatError(f"{where}: only utility nodes carry 'u'")
        raw_edges = _require(raw, "edges", where)
        if not isinstance(raw_edges, list):
            raise GameFormatError(f"{where}: 'edges' must be an array")
        edges = []
        for i, re_ in enumerate(raw_edges):
            ewhere = f"{where} edge {i}"
            _check_keys(re_, {"label", "to", "p", "edge_utility"}, ewhere)
            label = _require(re_, "label", ewhere)
            target = _require(re_, "to", ewhere)
            if not isinstance(label, str) or not isinstance(target, str):
                raise GameFormatError(f"{ewhere}: 'label' and 'to' must be strings")
            prob = None
            if isinstance(kind, Chance):
                try:
                    prob = parse_number(_require(re_, "p", ewhere))
                except GameFormatError as exc:
                    raise GameFormatError(f"{ewhere}: {exc}") from None
            elif "p" in re_:
                raise GameFormatError(f"{ewhere}: decision edges carry no probability")
            util = None
            if "edge_utility" in re_:
                util = _player_vector(re_["edge_utility"], players, ewhere)
            edges.append(TreeEdge(label, target, prob, util))
        nodes[nid] = Node(kind, tuple(edges), var)

    return GameTree(players, perspective, nodes, root, tuple(variables))


def parse_game(text: str | bytes, *, check: bool = True) -> GameTree:
    """Parse a JSON game document.

    Numbers are read exactly. With ``check`` (the default) the tree is
    validated and :class:`GameValidationError` raised on any violation.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"syntax error: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    tree = game_from_dict(doc)
    if check:
        diags = validate(tree)
        if diags:
            raise GameValidationError(diags)
    return tree


# -- validation ------------------------------------------------------------


def validate(t: GameTree) -> list[Diagnostic]:
    """Return one diagnostic per violated invariant; empty iff the tree is valid."""
    out: list[Diagnostic] = []
    n_players = len(t.players)

    if not t.players:
        out.append(Diagnostic("players", "no players declared"))
    if len(set(t.players)) != n_players:
        out.append(Diagnostic("players", "duplicate player names"))
    if any(not p for p in t.players):
        out.append(Diagnostic("players", "empty player name"))
    if t.perspective not in t.players:
        out.append(Diagnostic("perspective", f"{t.perspective!r} is not a player"))
    if len(set(t.variables)) != len(t.variables):
        out.append(Diagnostic("variables", "duplicate variable names"))
    if t.root not in t.nodes:
        out.append(Diagnostic("root", f"root {t.root!r} is not a node"))
        return out

    var_index = {v: i for i, v in enumerate(t.variables)}
    indegree: dict[str, int] = {nid: 0 for nid in t.nodes}

    for nid, node in t.nodes.items():
        where = f"node {nid}"
        kind = node.kind
        if node.var is not None and node.var not in var_index:
            out.append(Diagnostic(where, f"variable {node.var!r} is not declared"))
        if isinstance(kind, Utility):
            if len(kind.u) != n_players:
                out.append(Diagnostic(where, "utility vector length differs from player count"))
            if node.edges:
                out.append(Diagnostic(where, "utility node has outgoing edges"))
            continue
        if isinstance(kind, Decision) and kind.owner not in t.players:
            out.append(Diagnostic(where, f"owner {kind.owner!r} is not a player"))
        if not node.edges:
            out.append(Diagnostic(where, "leaf is not a utility node"))
        labels = [e.label for e in node.edges]
        for label in sorted({lab for lab in labels if labels.count(lab) > 1}):
            out.append(Diagnostic(where, f"duplicate sibling label {label!r}"))
        for e in node.edges:
            ewhere = f"{where} edge {e.label!r}"
            if not e.label:
                out.append(Diagnostic(ewhere, "empty label"))
            if e.target not in t.nodes:
                out.append(Diagnostic(ewhere, f"target {e.target!r} is not a node"))
            else:
                indegree[e.target] += 1
            if e.utility is not None and len(e.utility) != n_players:
                out.append(Diagnostic(ewhere, "edge utility length differs from player count"))
            if isinstance(kind, Chance):
                if e.prob is None:
                    out.append(Diagnostic(ewhere, "chance edge without probability"))
                elif not 0 <= e.prob <= 1:
                    out.append(Diagnostic(ewhere, f"probability {format_number(e.prob)} outside [0, 1]"))
            elif e.prob is not None:
                out.append(Diagnostic(ewhere, "decision edge carries a probability"))
        if isinstance(kind, Chance) and all(e.prob is not None for e in node.edges):
            total = sum((e.prob for e in node.edges), Fraction(0))
            if total != 1:
                out.append(Diagnostic(where, f"probabilities sum to {format_number(total)} ≠ 1"))

    if indegree[t.root]:
        out.append(Diagnostic(f"node {t.root}", "root has incoming edges"))
    for nid, d in indegree.items():
        if d > 1:
            out.append(Diagnostic(f"node {nid}", f"{d} incoming edges (not a tree)"))

    reached = set(_bfs(t.nodes, t.root))
    for nid in sorted(set(t.nodes) - reached):
        out.append(Diagnostic(f"node {nid}", "unreachable from root"))

    # variable order along each path; the tree check above guarantees termination
    if not any(d > 1 for d in indegree.values()) and not indegree[t.root]:
        stack = [(t.root, -1)]
        while stack:
            nid, last = stack.pop()
            node = t.nodes[nid]
            idx = var_index.get(node.var, None) if node.var is not None else None
            if idx is not None:
                if idx <= last:
                    out.append(Diagnostic(f"node {nid}", f"variable {node.var!r} out of order on its path"))
                last = max(last, idx)
            for e in node.edges:
                if e.target in t.nodes:
                    stack.append((e.target, last))
    return out


# -- utilities on edges ----------------------------------------------------


def push_edge_utilities_to_leaves(t: GameTree) -> GameTree:
    """Move all edge utilities onto the leaves below them (leaf-only form)."""
    if not t.has_edge_utilities():
        return t
    zero = tuple(Fraction(0) for _ in t.players)
    nodes: dict[str, Node] = {}
    stack = [(t.root, zero)]
    while stack:
        nid, acc = stack.pop()
        node = t.nodes[nid]
        if isinstance(node.kind, Utility):
            nodes[nid] = replace(node, kind=Utility(add_vectors(node.kind.u, acc)))
            continue
        nodes[nid] = replace(node, edges=tuple(replace(e, utility=None) for e in node.edges))
        for e in node.edges:
            stack.append((e.target, acc if e.utility is None else add_vectors(acc, e.utility)))
    ordered = {nid: nodes[nid] for nid in t.nodes if nid in nodes}
    return replace(t, nodes=ordered)


# -- serialization ---------------------------------------------------------


def _vector_dict(players: tuple[str, ...], u: tuple[Fraction, ...]) -> dict[str, str]:
    return {p: format_number(x) for p, x in zip(players, u)}


def game_to_dict(t: GameTree) -> dict[str, Any]:
    nodes: dict[str, Any] = {}
    for nid, node in t.nodes.items():
        kind = node.kind
        obj: dict[str, Any]
        if isinstance(kind, Utility):
            obj = {"kind": "utility", "u": _vector_dict(t.players, kind.u)}
        else:
            obj = {"kind": "decision", "owner": kind.owner} if isinstance(kind, Decision) else {"kind": "chance"}
            edges = []
            for e in node.edges:
                rec: dict[str, Any] = {"label": e.label, "to": e.target}
                if e.prob is not None:
                    rec["p"] = format_number(e.prob)
                if e.utility is not None:
                    rec["edge_utility"] = _vector_dict(t.players, e.utility)
                edges.append(rec)
            obj["edges"] = edges
        if node.var is not None:
            obj["var"] = node.var
        nodes[nid] = obj
    doc: dict[str, Any] = {
        "players": list(t.players),
        "perspective": t.perspective,
        "root": t.root,
        "nodes": nodes,
    }
    if t.variables:
        doc["variables"] = list(t.variables)
    return doc


def dumps(obj: Any) -> str:
    """Canonical JSON text used for every document this package writes."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def serialize_game(t: GameTree) -> str:
    return dumps(game_to_dict(t))


@dataclass
class TreeBuilder:
    """Small helper for assembling trees in code (fixtures, generators, tests)."""

    players: tuple[str, ...]
    perspective: str | None = None
    variables: tuple[str, ...] = ()
    nodes: dict[str, Node] = field(default_factory=dict)
    _count: int = 0

    def _new_id(self) -> str:
        nid = f"n{self._count}"
        self._count += 1
        return nid

    def leaf(self, *u: Any, var: str | None = None) -> str:
        nid = self._new_id()
        self.nodes[nid] = Node(Utility(tuple(Fraction(x) for x in u)), (), var)
        return nid

    def decision(self, owner: str, edges: list[tuple], var: str | None = None) -> str:
        """``edges`` items are ``(label, target)`` or ``(label, target, edge_utility)``."""
        nid = self._new_id()
        built = []
        for item in edges:
            label, target, *rest = item
            util = tuple(Fraction(x) for x in rest[0]) if rest and rest[0] is not None else None
            built.append(TreeEdge(label, target, None, util))
        self.nodes[nid] = Node(Decision(owner), tuple(built), var)
        return nid

    def chance(self, edges: list[tuple], var: str | None = None) -> str:
        """``edges`` items are ``(label, target, prob)`` with an optional edge utility."""
        nid = self._new_id()
        built = []
        for item in edges:
            label, target, prob, *rest = item
            util = tuple(Fraction(x) for x in rest[0]) if rest and rest[0] is not None else None
            built.append(TreeEdge(label, target, Fraction(prob), util))
        self.nodes[nid] = Node(Chance(), tuple(built), var)
        return nid

    def build(self, root: str) -> GameTree:
        return GameTree(
            self.players,
            self.perspective or self.players[0],
            dict(self.nodes),
            root,
            self.variables,
        )


def relabel_level_order(t: GameTree, prefix: str = "n") -> GameTree:
    """Rename node ids to ``<prefix><k>`` with ``k`` the breadth-first index."""
    order = t.level_order()
    new_id = {nid: f"{prefix}{k}" for k, nid in enumerate(order)}
    nodes = {
        new_id[nid]: replace(
            t.nodes[nid],
            edges=tuple(replace(e, target=new_id[e.target]) for e in t.nodes[nid].edges),
        )
        for nid in order
    }
    return replace(t, nodes=nodes, root=new_id[t.root])

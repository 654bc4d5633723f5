"""The two shipped example games.

``oil`` is a single decision maker choosing whether to test ground for oil,
with costs and rewards on the edges. ``radicalisation`` is a two player game
between a website provider (A) and a government department (B), modelled
from A's point of view.

Radicalisation leaf utilities follow this (U_A, U_B) table:

=================  ==============  ==============
X3 \\ X4            tells           no_tell
=================  ==============  ==============
increases          (+10, 0)        (+30, +10)
cuts               (-10, +10)      (-10, +10)
=================  ==============  ==============

A narrative variant of the example quotes (+20, +10) for increases/no_tell;
the fixture uses +30, which is the value the solved example relies on.
Probabilities are fixture choices: X2 depends on (X1, D1(A), D1(B)), X3 on
(D1(A), D1(B)) and X4 on (D2(A), D2(B)), with distinct values per stage.
"""

from __future__ import annotations

from fractions import Fraction as F
from importlib import resources

from .game_model import GameTree, TreeBuilder, parse_game, relabel_level_order

RADICALISATION_VARIABLES = ("X1", "D1(A)", "D1(B)", "X2", "X3", "D2(A)", "D2(B)", "X4")

LABELS = {
    "X1": ("posts", "contacts_rg"),
    "D1(A)": ("contact_vp", "contact_rg"),
    "D1(B)": ("pose_as_rg", "shut_down"),
    "X2": ("aware", "unaware"),
    "X3": ("increases", "cuts"),
    "D2(A)": ("pose_as_vp", "pose_as_sympathiser"),
    "D2(B)": ("arrest", "no_arrest"),
    "X4": ("tells", "no_tell"),
}

P_X1_POSTS = F(1, 3)
# p(X2 = aware | X1, D1(A), D1(B)), keyed by label indices
P_X2_AWARE = {
    (i, j, k): F(1 + 4 * i + 2 * j + k, 9)
    for i in (0, 1) for j in (0, 1) for k in (0, 1)
}
# p(X3 = increases | D1(A), D1(B))
P_X3_INCREASES = {(0, 0): F(1, 2), (0, 1): F(1, 5), (1, 0): F(2, 3), (1, 1): F(3, 10)}
# p(X4 = no_tell | D2(A), D2(B))
P_X4_NO_TELL = {(0, 0): F(3, 4), (0, 1): F(1, 3), (1, 0): F(2, 5), (1, 1): F(3, 5)}

UTILITIES = {
    ("increases", "tells"): (10, 0),
    ("increases", "no_tell"): (30, 10),
    ("cuts", "tells"): (-10, 10),
    ("cuts", "no_tell"): (-10, 10),
}


def build_radicalisation() -> GameTree:
    b = TreeBuilder(("A", "B"), "A", RADICALISATION_VARIABLES)

    def x4(x3: int, a2: int, b2: int) -> str:
        p = P_X4_NO_TELL[(a2, b2)]
        x3_label = LABELS["X3"][x3]
        kids = [b.leaf(*UTILITIES[(x3_label, lab)]) for lab in LABELS["X4"]]
        return b.chance(list(zip(LABELS["X4"], kids, (1 - p, p))), var="X4")

    def d2b(x3: int, a2: int) -> str:
        kids = [x4(x3, a2, b2) for b2 in (0, 1)]
        return b.decision("B", list(zip(LABELS["D2(B)"], kids)), var="D2(B)")

    def d2a(x3: int) -> str:
        kids = [d2b(x3, a2) for a2 in (0, 1)]
        return b.decision("A", list(zip(LABELS["D2(A)"], kids)), var="D2(A)")

    def x3(a1: int, b1: int) -> str:
        p = P_X3_INCREASES[(a1, b1)]
        kids = [d2a(v) for v in (0, 1)]
        return b.chance(list(zip(LABELS["X3"], kids, (p, 1 - p))), var="X3")

    def x2(x1: int, a1: int, b1: int) -> str:
        p = P_X2_AWARE[(x1, a1, b1)]
        kids = [x3(a1, b1) for _ in (0, 1)]
        return b.chance(list(zip(LABELS["X2"], kids, (p, 1 - p))), var="X2")

    def d1b(x1: int, a1: int) -> str:
        kids = [x2(x1, a1, b1) for b1 in (0, 1)]
        return b.decision("B", list(zip(LABELS["D1(B)"], kids)), var="D1(B)")

    def d1a(x1: int) -> str:
        kids = [d1b(x1, a1) for a1 in (0, 1)]
        return b.decision("A", list(zip(LABELS["D1(A)"], kids)), var="D1(A)")

    kids = [d1a(x1) for x1 in (0, 1)]
    root = b.chance(list(zip(LABELS["X1"], kids, (P_X1_POSTS, 1 - P_X1_POSTS))), var="X1")
    return relabel_level_order(b.build(root))


OIL_VARIABLES = ("test", "result", "drill", "oil")


def build_oil(p_good: F = F(2, 5), p_oil_good: F = F(3, 4), p_oil_bad: F = F(1, 4)) -> GameTree:
    """Oil drilling with decomposed (edge) utilities.

    Outcome edges list ``bad`` before ``good`` so that, in breadth-first
    order, the drill decisions are test/bad, test/good, pass/bad.
    """
    b = TreeBuilder(("DM",), "DM", OIL_VARIABLES)

    def oil(p: F) -> str:
        return b.chance([("oil", b.leaf(100), p), ("dry", b.leaf(0), 1 - p)], var="oil")

    def drill(p: F, sell_fee: int) -> str:
        return b.decision("DM", [("drill", oil(p), (-30,)), ("sell", b.leaf(0), (sell_fee,))], var="drill")

    tested = b.chance(
        [("bad", drill(p_oil_bad, 10), 1 - p_good), ("good", drill(p_oil_good, 40), p_good)],
        var="result",
    )
    passed = b.chance(
        [("bad", drill(p_oil_bad, 10), 1 - p_good), ("good", b.leaf(0), p_good)],
        var="result",
    )
    root = b.decision("DM", [("test", tested, (-10,)), ("pass", passed, (20,))], var="test")
    return relabel_level_order(b.build(root))


def load(name: str) -> GameTree:
    """Read a shipped fixture document (``"oil"`` or ``"radicalisation"``)."""
    text = resources.files("cegames").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return parse_game(text)

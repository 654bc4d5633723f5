"""Chain event graphs for extensive-form Bayesian games.

Trees are compiled into chain event graphs, reduced to parsimonious form and
solved for a subgame-perfect equilibrium by local propagation.
"""

from .ceg import (
    Ceg,
    CegEdge,
    Position,
    PositionPartition,
    StagePartition,
    build_ceg,
    compute_positions,
    compute_stages,
    export_dot,
    topological_order,
)
from .ci import CiStatement, all_statements, context_statements, position_cut_statement, stage_cut_statement
from .game_model import (
    Chance,
    Decision,
    GameTree,
    Node,
    TreeEdge,
    Utility,
    parse_game,
    push_edge_utilities_to_leaves,
    serialize_game,
    validate,
)
from .simplify import coalesce_positions, delete_barren, delete_barren_root, find_barren, parsimonize
from .solve import Solution, enumerate_policies, extract_strategy, propagate, tree_rollback

__version__ = "0.1.0"

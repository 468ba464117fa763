"""Coalitional extensive-form games: model, solvers, oracle, and rendering."""

from .errors import (
    CefgError,
    GameFormatError,
    GameValidationError,
    ImperfectInformation,
    InfeasibleCoalition,
    MixedEquilibriumUnsupported,
    NotASubgameRoot,
    TooLarge,
)
from .gamefile import GameSpec, load_game, load_game_text, parse_game, serialize_game
from .model import (
    GameTree,
    Node,
    SupergameView,
    UtilitySystem,
    build_supergame,
    coalition_utility,
    feasible_coalitions_containing,
    individual_utility,
    root_of,
    subgame_at,
    subtree_at,
    validate_game,
)
from .noncoop import LocalSolution, backward_induction, best_response_at, spne_in_subgame
from .oracle import OracleReport, equivalence_check, oracle_bi, oracle_solve, random_game
from .render import (
    bracket_entry,
    bracket_summary,
    export_dot,
    profile_to_json,
    render_solution,
    render_trace,
)
from .ri import (
    ReferencePoint,
    SolutionProfile,
    SolveStep,
    check_ir_invariants,
    combine_chance_root,
    enumerate_reference_points,
    index_reference_point,
    ir_chain,
    solve_game,
    solve_ri,
    solve_ri_imperfect,
)

__version__ = "0.1.0"

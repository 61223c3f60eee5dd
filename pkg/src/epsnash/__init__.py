"""Stationary (epsilon-)Nash equilibria in turn-based stochastic games with terminal rewards."""

from .evaluate import BestResponse, ValueVector, approx_mdp_decision, expected_payoffs, mc_value, mdp_best_response
from .fpnum import FloatDist, FloatL, fp_add, fp_div, fp_mul, fp_sub, is_close, is_dl_member, rel, round_distribution, truncate
from .model import (
    Game,
    GameError,
    StationaryProfile,
    parse_game,
    parse_profile,
    reachable_support,
    serialize_game,
    serialize_profile,
    validate_game,
    validate_profile,
)
from .generators import (
    CnfFormula,
    build_gn,
    build_sat_game,
    gn_epsilon_ne,
    gn_exact_ne,
    parse_dimacs,
    sat_ne_from_valuation,
)
from .search import SearchConfig, SearchResult, search_constrained_ne, support_newton
from .etr_export import EtrSystem, build_etr, check_assignment, emit_smtlib
from .verify import VerificationReport, check_etr_constraints, verify_constrained, verify_epsilon_ne

__version__ = "0.1.0"

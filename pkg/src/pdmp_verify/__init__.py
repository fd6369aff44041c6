"""Verification toolkit for controlled jump-flow (piecewise deterministic) processes.

Compile chemical-reaction networks into hybrid jump-flow characteristics,
simulate them exactly, and verify viability, invariance and reachability of
mode-box sets via normal-cone checks, Monte Carlo value estimation, grid
solves of the discounted nonlocal equations, and dual certificates.
"""

__version__ = "0.1.0"

from .geometry import (CheckReport, ModeBoxSet, NormalCone, capped_distance,
                       check_invariance, check_viability, jump_escape_mass, normal_cone)
from .hjb import (GridFunction, ReachabilityDecision, SolveReport, decide_reachability,
                  dual_certificate_value, generator_apply, reach_cost, solve_discounted,
                  viability_cost)
from .models import (CookParams, OnOffParams, PhageParams, build_cook, build_onoff,
                     build_phage, piecewise_linear)
from .network import (AssumptionReport, ProbeSpec, Reaction, ReactionNetwork,
                      SmoothingProfile, Species, compile as compile_network, propensity,
                      smooth_gate, validate_assumptions)
from .pdmp import (ControlPolicy, HybridState, IntegrationError, PdmpCharacteristics,
                   PerturbationPolicy, Trajectory, flow_step, run_ensemble,
                   sample_jump_time, sample_jump_time_thinning, sample_post_jump, simulate)
from .value_mc import (HittingEstimate, SweepEntry, ValueEstimate, best_over_policies,
                       convergence_sweep, estimate_hitting_probability,
                       estimate_invariance_value, estimate_reach_value,
                       estimate_viability_value, wilson_interval)

__all__ = [
    "AssumptionReport", "CheckReport", "ControlPolicy", "CookParams", "GridFunction",
    "HittingEstimate", "HybridState", "IntegrationError", "ModeBoxSet", "NormalCone",
    "OnOffParams", "PdmpCharacteristics", "PerturbationPolicy", "PhageParams", "ProbeSpec",
    "Reaction", "ReactionNetwork", "ReachabilityDecision", "SmoothingProfile", "SolveReport",
    "Species", "SweepEntry", "Trajectory", "ValueEstimate", "best_over_policies",
    "build_cook", "build_onoff", "build_phage", "capped_distance", "check_invariance",
    "check_viability", "compile_network", "convergence_sweep", "decide_reachability",
    "dual_certificate_value", "estimate_hitting_probability", "estimate_invariance_value",
    "estimate_reach_value", "estimate_viability_value", "flow_step", "generator_apply",
    "jump_escape_mass", "normal_cone", "piecewise_linear", "propensity", "reach_cost",
    "run_ensemble", "sample_jump_time", "sample_jump_time_thinning", "sample_post_jump",
    "simulate", "smooth_gate", "solve_discounted", "validate_assumptions", "viability_cost",
    "wilson_interval",
]

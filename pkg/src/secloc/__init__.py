"""Secure range-based localization via a variance-dilation SDP relaxation."""

from .conic import ConicProgram, SolverResult, SolverSettings, Status, check_feasibility, solve
from .crlb import FisherPartition, crlb_position, fim_attack_model, fim_dilation_model
from .estimator import CcpSettings, EstimateReport, build_ccp_subproblem, detect, normalize_instance, run_ccp
from .measurement import RangeObservations, aggregate_median, sample_ranges
from .oracle import GridSpec, gauss_newton_ls, grid_search, profile_objective
from .scenario import ConfigError, Scenario, ScenarioConfig, assign_attackers, generate_deployment, make_rng

__version__ = "0.1.0"

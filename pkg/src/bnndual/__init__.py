"""Exact MILP value functions, subadditive duals and BNN training."""

from .autodiff import ChainField, ConservativeField, IterationTrace, Rule, chain, field, iterate, select
from .bnn import BnnArchitecture, Dataset, Loss, WeightAssignment, decode, encode, forward
from .dualfit import FitConfig, MatchSamples, MaximizeAt, SegmentedParam, fit, refine
from .errors import BnnDualError
from .model import ConicMip, Sense, check_nice, ralphs_example, validate
from .pwl import Interval, PwlFunction, compose
from .solve import MipSolution, Status, solve_lp, solve_mip, value_sweep
from .subadditive import Mode, check_dual_feasible, check_subadditive, dual_constraints, weak_duality_gap

__version__ = "0.1.0"

__all__ = [
    "BnnArchitecture", "BnnDualError", "ChainField", "ConicMip", "ConservativeField", "Dataset",
    "FitConfig", "Interval", "IterationTrace", "Loss", "MatchSamples", "MaximizeAt", "MipSolution",
    "Mode", "PwlFunction", "Rule", "SegmentedParam", "Sense", "Status", "WeightAssignment", "chain",
    "check_dual_feasible", "check_nice", "check_subadditive", "compose", "decode", "dual_constraints",
    "encode", "field", "fit", "forward", "iterate", "ralphs_example", "refine", "select", "solve_lp",
    "solve_mip", "validate", "value_sweep", "weak_duality_gap",
]

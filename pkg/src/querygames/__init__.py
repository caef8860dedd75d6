"""Solvers and a verification harness for adaptive query games with integer feedback."""

from .core import (BoundViolation, BudgetExceeded, CompositionGap, EXACT,
                   ImpossibleState, InconsistentOracle, NonTermination,
                   Prediction, QueryGameError, Reduced, Report, ShapeError,
                   SimplicityViolation, Step, Strategy, SupportOverlap,
                   SyntheticOracle, Transcript, WeightViolation, ZERO,
                   PredictabilityViolation, concat, info_lower_bound,
                   merge_queries, replay, run_strategy, verify_exhaustive)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

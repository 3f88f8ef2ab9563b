"""Principal eigenvalues of time-periodic parabolic operators under large advection."""
from __future__ import annotations

from .catalog import builtin_catalog
from .discretize import BoundaryKind, BoundaryPair, SpaceTimeGrid, assemble
from .errors import (AdvLimitError, AmbiguousSign, DegenerateWidth, HypothesisViolation,
                     NoConvergence, ParseError, SingularSystem, ValidationError)
from .floquet import (EigenResult, GridPolicy, MonodromyOperator, SweepTable, alpha_sweep,
                      build_monodromy, principal_eigenvalue)
from .limits import (LimitPrediction, classify, curve_average, predict_limit_nondegenerate,
                     predict_limit_spatial)
from .scenario import Coefficients, CurveAnnotation, Scenario, load_scenario
from .subdomain import MovingInterval, subdomain_eigenvalue, transform_to_fixed_domain
from .temporal import (TemporalPartition, build_period_operator, limit_eigenvalue_temporal,
                       mixed_degenerate_eigenvalue, partition_time)

__all__ = [
    "AdvLimitError", "AmbiguousSign", "BoundaryKind", "BoundaryPair", "Coefficients",
    "CurveAnnotation", "DegenerateWidth", "EigenResult", "GridPolicy", "HypothesisViolation",
    "LimitPrediction", "MonodromyOperator", "MovingInterval", "NoConvergence", "ParseError",
    "Scenario", "SingularSystem", "SpaceTimeGrid", "SweepTable", "TemporalPartition",
    "ValidationError", "alpha_sweep", "assemble", "build_monodromy", "build_period_operator",
    "builtin_catalog", "classify", "curve_average", "limit_eigenvalue_temporal", "load_scenario",
    "mixed_degenerate_eigenvalue", "partition_time", "predict_limit_nondegenerate",
    "predict_limit_spatial", "principal_eigenvalue", "subdomain_eigenvalue",
    "transform_to_fixed_domain",
]

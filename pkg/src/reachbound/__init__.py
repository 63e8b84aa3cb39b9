"""Certified lower bounds, empirical estimates and random-model tails for the reach of real algebraic varieties."""

__version__ = "0.1.0"

from .condition import GlobalCondResult, ConditionReport, cond_global, cond_homog, cond_local
from .errors import (
    BudgetExceeded,
    ConfigError,
    DegreeOverflowError,
    EmptySample,
    NoAdmissiblePairs,
    NonSurjective,
    NoRouteApplicable,
    NotAZero,
    NotOnBoundary,
    PolySyntaxError,
    PreconditionViolated,
    ReachBoundError,
)
from .experiment import Geometry, TailCurve, TrialOptions, mc_tail_experiment
from .federer import VarietySample, estimate_local_reach, estimate_reach, sample_variety, tangent_distance
from .linalg import minvalue_inf_two, opnorm_inf_two, pseudoinverse, tensor_22_norm_bounds
from .parse import parse_poly_text
from .poly import PolyTuple, derivative_tensor, evaluate, jacobian, one_norm
from .random_models import RandomModelSpec, model_constants, sample_tuple, tail_bound_cont, tail_bound_disc
from .reach import (
    ReachBoundReport,
    kantorovich_K_upper,
    reach_bounds,
    reach_lb_cond_global,
    reach_lb_cond_local,
    reach_lb_gamma,
    reach_lb_kantorovich,
    smale_beta,
    smale_gamma,
    worstcase_bit_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Infinite string coupled to a nonlinear oscillator at the origin.

Reduces the wave problem to a forced scalar (m = 0) or Lienard (m > 0)
oscillator, computes its Poincare map and periodic regimes, and rebuilds
the string field and its time-periodic limit.
"""
from ._backend import BACKEND
from .expr import ExprSyntaxError, differentiate, evaluate, parse_force, simplify, to_string
from .field import (
    FieldFrame,
    field_convergence,
    jump_residual,
    limit_profile,
    reconstruct,
    reconstruct_incoming,
    reconstruct_incoming_limit,
    reconstruct_limit,
    uniform_grid,
    wave_residual,
)
from .force import ConditionReport, CoercivityError, ForceField, classify, make_force, potential
from .model import (
    InitialData,
    OscillatorState,
    PeriodicProfile,
    StringParams,
    ValidationError,
    make_params,
)
from .oscillator import (
    IntegrationError,
    OdeProblem,
    Trajectory,
    energy,
    energy_inequality_check,
    propagate,
    propagator_U,
)
from .poincare import (
    AttractorEstimate,
    BracketB,
    DissipativityError,
    FixedPointSet,
    PoincareMap,
    attractor_sample,
    build_map,
    convergence_metric,
    find_bracket,
    fixed_point_newton_m,
    fixed_points_m0,
    iterate_to_fixed_point,
)
from .reduction import (
    DalembertSplit,
    Drive,
    IncomingScenario,
    build_drive,
    incoming_wave_data,
    split,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]

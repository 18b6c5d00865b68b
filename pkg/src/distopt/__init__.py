"""Distributed constrained consensus optimization with nonuniform stepsizes."""

from .convex import Ball, Box, Halfspace, Intersection, distance, dykstra, project
from .ct_solver import ct_rhs, euler_step, simulate_ct
from .dt_solver import DtParams, dt_step, simulate_dt
from .errors import (
    NonConvergenceError,
    PreconditionError,
    ScenarioParseError,
    ScenarioValidationError,
    SimulationError,
    StepAlignmentError,
)
from .graph import (
    GraphSchedule,
    WeightedDigraph,
    is_balanced,
    is_doubly_stochastic,
    is_strongly_connected,
    laplacian,
    laplacian_spectrum_check,
    metropolis_weights,
    union_graph,
    validate_schedule,
)
from .metrics import centralized_oracle, measure, verify_kkt
from .objective import Quadratic, ShiftedPower, Sum, grad_check, minimizer_set_bound
from .scenario import Scenario, builtin_benchmark, parse_scenario, run, serialize_scenario
from .trajectory import AgentState, SwarmState, Trajectory

__version__ = "0.1.0"

"""Iterative, variational and continuous-time solvers for ill-posed ``Au = f``."""

from . import operators, oracle, problems, solvers, stopping
from .operators import (
    LinearOperator,
    RegParam,
    ShiftMode,
    adjoint,
    b_op,
    cogram,
    complex_shifted_resolvent,
    gram,
    shifted_solve,
    smoothing_op,
)
from .oracle import decompose, minimal_norm_solution, project_off_nullspace
from .problems import TestProblem, add_noise
from .solvers import (
    DsmSchedule,
    DsmTrace,
    IterationTrace,
    NumericalError,
    dsm_duhamel,
    dsm_solve,
    fixed_point_iteration,
    selfadjoint_iteration,
    tikhonov_functional,
    tikhonov_minimizer,
    tikhonov_minimizer_via_Q,
)
from .stopping import (
    NoisyData,
    ScheduleParams,
    discrepancy_stop,
    error_envelope,
    noise_study,
    stopping_index,
)

__version__ = "0.1.0"

"""Majorization along quantum adiabatic evolutions with a projector driver and diagonal cost."""

from .majorization import (
    Distribution,
    MajorizationVerdict,
    PartialSumCurve,
    Relation,
    check_majorization,
    distribution_from_state,
    lorenz_deficit,
    partial_sums,
)
from .model import (
    OperatorHandle,
    ProblemSpec,
    ScheduleSpec,
    apply_hamiltonian,
    build_problem,
    dense_hamiltonian,
    eval_schedule,
    grover_problem,
    random_int_problem,
)
from .spectrum import (
    GroundStateSolution,
    SpectralReport,
    crossing_index,
    dense_spectrum_oracle,
    ground_derivatives,
    ground_state,
    secular_residual,
    solve_t,
    spectral_report,
)
from .evolution import (
    EvolutionState,
    Trajectory,
    convergence_probe,
    evolve,
    gauge_fixed_overlap,
    propagate,
)
from .analysis import (
    BoundMargins,
    MajorizationReport,
    SweepResult,
    bound_margins,
    delta_sandwich_check,
    delta_threshold_check,
    ground_report,
    oscillation_amplitude,
    oscillation_sweep,
    trajectory_report,
)

__version__ = "0.1.0"

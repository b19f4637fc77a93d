"""Atomic signaling games: dynamics, exact chain analysis, replicator baseline."""

__version__ = "0.1.0"

from .chain import (
    DEFAULT_MAX_STATES,
    ImitationChain,
    LocalizedChain,
    ResistanceGraph,
    StateSpace,
    StochasticPotentialResult,
    VerifyReport,
    make_chain,
    stationary,
    stochastic_potential,
    sweep_stationary,
    verify_stability,
)
from .dynamics import (
    ImitationParams,
    LocalParams,
    Trajectory,
    aligned_census,
    fraction_aligned,
    run,
    step_imitation,
    step_localized,
)
from .errors import CapExceededError, ConvergenceError
from .languages import (
    GameParams,
    Language,
    LanguageTable,
    Profile,
    avg_fitness,
    trace_raising_neighbor,
    cross_trace,
    delta_scaled,
    disk,
    enumerate_languages,
    fitness_scaled,
    get_table,
    hamming_q,
    is_aligned,
    is_optimal,
    language_count,
    permute,
    potential_scaled,
)
from .replicator import integrate, mean_fitness, payoff_matrix, replicator_rhs

__all__ = [
    "CapExceededError",
    "ConvergenceError",
    "DEFAULT_MAX_STATES",
    "GameParams",
    "ImitationChain",
    "ImitationParams",
    "Language",
    "LanguageTable",
    "LocalParams",
    "LocalizedChain",
    "Profile",
    "ResistanceGraph",
    "StateSpace",
    "StochasticPotentialResult",
    "Trajectory",
    "VerifyReport",
    "aligned_census",
    "avg_fitness",
    "trace_raising_neighbor",
    "cross_trace",
    "delta_scaled",
    "disk",
    "enumerate_languages",
    "fitness_scaled",
    "fraction_aligned",
    "get_table",
    "hamming_q",
    "integrate",
    "is_aligned",
    "is_optimal",
    "language_count",
    "make_chain",
    "mean_fitness",
    "payoff_matrix",
    "permute",
    "potential_scaled",
    "replicator_rhs",
    "run",
    "stationary",
    "step_imitation",
    "step_localized",
    "stochastic_potential",
    "sweep_stationary",
    "verify_stability",
]

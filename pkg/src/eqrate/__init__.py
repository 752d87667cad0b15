"""Rate strategies by their payoff under game-theoretic equilibria.

The usual entry points are :func:`rate` (solve, then rate),
:func:`solve` and the game constructors in :mod:`eqrate.standard_games`.
"""

from .constraints import (Concept, build_constraints, epsilon_min, epsilon_uniform,
                          max_violation)
from .elimination import (EliminationMapping, eliminate_exact_duplicates, redistribute_mass,
                          repeat_weights, similarity_matrix)
from .errors import (ConvergenceError, EqRateError, GameFormatError, InfeasibleEpsilonError,
                     IngestError, SolverError)
from .game import (JointDistribution, NormalFormGame, conditional, dump_game, expected_payoff,
                   load_game, marginal, outer_product, read_game)
from .rating import (RatingReport, UndefinedPolicy, epsilon_sweep, mass_rating, payoff_rating,
                     rank_from_ratings, rate, uniform_rating)
from .solvers import (EpsilonMode, EquilibriumSolution, Selection, SolveConfig, resolve_epsilon,
                      solve, solve_max_entropy, solve_max_gini, solve_max_welfare,
                      solve_mene_2p0s)

__version__ = "0.1.0"

"""Follow-the-regularized-leader dynamics in constant-sum and polymatrix games.

Modules
-------
game         normal-form and polymatrix games, payoffs, JSON I/O
regularizer  entropic and Euclidean regularizers, conjugates, choice maps
dynamics     score dynamics, integrators, reduced coordinates
analysis     coupling, regret, divergence, recurrence, boundary classification
equilibrium  zero-sum value, essential strategies, maximal-support equilibrium
cli          ``forel`` command-line front end
"""
from .analysis import (CONVERGED_TO_PURE, CONVERGING_TO_FACE, INTERIOR_RECURRENT, UNDETERMINED,
                       coupling_drift, coupling_series, coupling_weights, divergence_check,
                       face_mass, fenchel_coupling, make_reference, max_deviation, max_reduced_norm,
                       recurrence_stats, regret, regret_bound, regret_margin, support_classification)
from .dynamics import (ForelSystem, IntegrationDiverged, Trajectory, embed, forel_field, integrate,
                       integrate_field, integrate_many, make_regularizers, mwu_step, projection_field,
                       reduce, reduced_field, replicator_field)
from .equilibrium import (EquilibriumError, EquilibriumReport, essential_strategies,
                          interior_equilibrium, max_support_equilibrium, verify_nash, zero_sum_solve)
from .game import (GameError, GameSpec, cycle_game, expected_payoff, expected_payoffs, game_from_dict,
                   game_to_dict, matching_pennies, payoff_vector, payoff_vectors,
                   uniform_profile, validate_constant_sum)
from .regularizer import (RegularizerError, RegularizerSpec, choice_map, conjugate, entropic,
                          euclidean, h_value, omega, project_simplex, strong_convexity_constant)

__version__ = "0.1.0"

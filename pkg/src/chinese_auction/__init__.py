"""Solvers, certificates and simulators for Chinese auctions.

Players spread ticket weight over item baskets; each item goes to the owner
of a ticket drawn with probability proportional to weight.
"""

from .continuous import (
    BestResponseResult,
    DynamicsConfig,
    DynamicsResult,
    best_response,
    best_response_costly,
    best_response_dynamics,
    best_response_given,
    symmetric_equilibrium_costly,
    symmetric_equilibrium_given,
)
from .discrete import (
    algorithm2,
    enumerate_player_strategies,
    exhaustive_equilibrium_search,
    greedy_symmetric_players,
    greedy_trace,
    two_item_asymmetric,
)
from .model import (
    COSTLY,
    GIVEN,
    AuctionInstance,
    ContinuousBudget,
    DiscreteAssignment,
    DiscreteBudget,
    WinProbabilities,
    expected_utility,
    validate_instance,
    win_probabilities,
)
from .verify import (
    AuditReport,
    EquilibriumCertificate,
    epsilon_nash_check,
    epsilon_nash_check_continuous,
    exact_nash_check_discrete,
    monte_carlo_utilities,
    nonexistence_grid_audit,
)

__version__ = "0.1.0"

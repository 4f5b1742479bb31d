"""Named end-to-end reproductions with pinned parameters and expected verdicts.

Each entry runs a solver, checker or audit and returns ``(ok, message)``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

import numpy as np

from .continuous import (
    DynamicsConfig,
    best_response_dynamics,
    symmetric_equilibrium_costly,
    symmetric_equilibrium_given,
)
from .discrete import (
    algorithm2,
    exhaustive_equilibrium_search,
    greedy_symmetric_players,
    joint_profile_count,
    two_item_asymmetric,
)
from .model import COSTLY, AuctionInstance, DiscreteAssignment
from .verify import (
    epsilon_nash_check_continuous,
    exact_nash_check_discrete,
    nonexistence_grid_audit,
)

Result = tuple[bool, str]

# Two players, player 1 indifferent to item 0: no equilibrium without an auctioneer.
ZERO_VALUE_GIVEN = AuctionInstance.continuous([[0, 1], [1, 3]], [1, 1])
# Costly variant: player 1 does not value item 1, player 2 values both.
ZERO_VALUE_COSTLY = AuctionInstance.continuous([[1, 0], [1, 1]], [0, 0], mode=COSTLY)
# Three unit tickets against one, two equally valued items.
THREE_VS_ONE = AuctionInstance.discrete([[1, 1], [1, 1]], [[1, 1, 1], [1]])


def _continuous_cert(inst, x, eps) -> Result:
    cert = epsilon_nash_check_continuous(inst, x)
    return cert.epsilon <= eps, f"epsilon {cert.epsilon:.3g} (bound {eps:g})"


def proportional_asymmetric_budgets() -> Result:
    inst = AuctionInstance.continuous([[1, 3], [1, 3]], [2, 1])
    x = symmetric_equilibrium_given(inst)
    if not np.allclose(x, [[0.5, 1.5], [0.25, 0.75]], rtol=0, atol=1e-15):
        return False, f"unexpected profile {x.tolist()}"
    return _continuous_cert(inst, x, 1e-9)


def proportional_symmetric_budgets() -> Result:
    inst = AuctionInstance.continuous([[2, 5, 3]] * 3, [1, 1, 1])
    x = symmetric_equilibrium_given(inst)
    if not np.all(x == x[0]):
        return False, "profile is not symmetric"
    return _continuous_cert(inst, x, 1e-9)


def zero_value_audit() -> Result:
    report = nonexistence_grid_audit(ZERO_VALUE_GIVEN, 0.01, 0.001)
    cert = epsilon_nash_check_continuous(ZERO_VALUE_GIVEN, np.array([[0.0, 1.0], [0.0, 1.0]]))
    ok = report.min_gap > 0 and cert.gaps[1] > 0 and not cert.attained[1]
    return ok, report.summary()


def auctioneer_restores_given() -> Result:
    inst = ZERO_VALUE_GIVEN.with_delta([0.01, 0.01])
    res = best_response_dynamics(inst, None, DynamicsConfig(epsilon=1e-6))
    ok, msg = _continuous_cert(inst, res.profile, 1e-6)
    return res.converged and ok, f"converged={res.converged} in {res.rounds} rounds, {msg}"


def positive_values_dynamics() -> Result:
    inst = AuctionInstance.continuous([[1, 2], [3, 1]], [1, 2])
    res = best_response_dynamics(inst, None, DynamicsConfig(epsilon=1e-8))
    ok, msg = _continuous_cert(inst, res.profile, 1e-8)
    return res.converged and ok, f"converged={res.converged} in {res.rounds} rounds, {msg}"


def greedy_common_values() -> Result:
    inst = AuctionInstance.discrete([[4, 2]] * 3, [[2], [1], [1]])
    a = greedy_symmetric_players(inst)
    cert = exact_nash_check_discrete(inst, a)
    ok = a.items == ((0,), (1,), (0,)) and cert.is_exact_nash
    return ok, f"assignment {a.items}, exact gaps {[str(g) for g in cert.exact_gaps]}"


def three_vs_one_tickets() -> Result:
    found = exhaustive_equilibrium_search(THREE_VS_ONE)
    count = joint_profile_count(THREE_VS_ONE)
    # Player 2 shares item 0 with two of player 1's tickets and can move to item 1.
    witness = DiscreteAssignment(((0, 0, 1), (0,)))
    gap = exact_nash_check_discrete(THREE_VS_ONE, witness).exact_gaps[1]
    ok = not found and count == 8 and gap == Fraction(1, 2) - Fraction(1, 3)
    return ok, f"{count} profiles, {len(found)} equilibria, witness gap {gap}"


def two_items_weighted() -> Result:
    inst = AuctionInstance.discrete([[1, 2], [3, 1]], [[1], [1]])
    a = two_item_asymmetric(inst)
    cert = exact_nash_check_discrete(inst, a)
    return a.items == ((1,), (0,)) and cert.is_exact_nash, f"assignment {a.items}"


def arrival_cascade() -> Result:
    # Both later arrivals push player 0 to the other item.
    inst = AuctionInstance.discrete([[4, 5], [2, 5], [5, 1]], [[1]] * 3)
    moves: list[int] = []
    a = algorithm2(inst, moves)
    cert = exact_nash_check_discrete(inst, a)
    ok = cert.is_exact_nash and a.items == ((1,), (1,), (0,)) and moves == [0, 1, 1]
    return ok, f"assignment {a.items}, moves per arrival {moves}, epsilon {cert.epsilon}"


def costly_symmetric() -> Result:
    inst = AuctionInstance.continuous([[9, 3, 6]] * 3, [0, 0, 0], mode=COSTLY)
    return _continuous_cert(inst, symmetric_equilibrium_costly(inst), 1e-9)


def costly_zero_value_audit() -> Result:
    report = nonexistence_grid_audit(ZERO_VALUE_COSTLY, 0.01, 0.001)
    return report.min_gap > 0, report.summary()


def auctioneer_restores_costly() -> Result:
    inst = ZERO_VALUE_COSTLY.with_delta([0.01, 0.01])
    res = best_response_dynamics(inst, None, DynamicsConfig(epsilon=1e-8))
    ok, msg = _continuous_cert(inst, res.profile, 1e-8)
    return res.converged and ok, f"converged={res.converged} in {res.rounds} rounds, {msg}"


REGISTRY: dict[str, tuple[str, Callable[[], Result]]] = {
    "thm32": ("proportional split is an equilibrium (symmetric values, unequal budgets)", proportional_asymmetric_budgets),
    "cor33": ("equal budgets give a symmetric equilibrium", proportional_symmetric_budgets),
    "prop35": ("zero valuations, given tickets: grid audit finds no equilibrium", zero_value_audit),
    "thm36": ("auctioneer tickets restore an equilibrium (given tickets)", auctioneer_restores_given),
    "thm38-dynamics": ("strictly positive values: dynamics reach a certified equilibrium", positive_values_dynamics),
    "thm310": ("greedy placement for common values and single tickets", greedy_common_values),
    "prop311": ("three unit tickets against one: no pure equilibrium", three_vs_one_tickets),
    "prop312": ("two items, single tickets: sweep to item 1", two_items_weighted),
    "alg2": ("equal single tickets: arrival and cascade construction", arrival_cascade),
    "thm42": ("costly tickets: symmetric (n-1)/n^2 profile", costly_symmetric),
    "prop43": ("zero valuations, costly tickets: grid audit finds no equilibrium", costly_zero_value_audit),
    "thm44": ("auctioneer tickets restore an equilibrium (costly tickets)", auctioneer_restores_costly),
}


def run(name: str) -> Result:
    return REGISTRY[name][1]()

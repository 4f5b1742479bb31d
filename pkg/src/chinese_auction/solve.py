"""Pick and run an equilibrium solver from the shape of an instance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import continuous, discrete
from .continuous import DynamicsConfig
from .model import GIVEN, AuctionInstance, Profile, expected_utility
from .verify import EquilibriumCertificate, epsilon_nash_check

SOLVERS = ("proportional", "costly-symmetric", "dynamics", "greedy", "two-item", "algorithm2", "exhaustive")


def describe_shape(inst: AuctionInstance) -> str:
    budget = "continuous" if inst.is_continuous else "discrete" if inst.is_discrete else "mixed"
    parts = [inst.mode, budget, "symmetric" if inst.is_symmetric() else "asymmetric"]
    if inst.is_discrete:
        single = all(len(t) == 1 for t in inst.tickets)
        parts.append("indivisible" if single else "multi-ticket")
        if single and len({t[0] for t in inst.tickets}) == 1:
            parts.append("equal-tickets")
    if inst.has_auctioneer:
        parts.append("auctioneer")
    return " ".join(parts)


def choose_solver(inst: AuctionInstance) -> str:
    if inst.is_continuous:
        if inst.is_symmetric() and not inst.has_auctioneer:
            return "proportional" if inst.mode == GIVEN else "costly-symmetric"
        return "dynamics"
    if all(len(t) == 1 for t in inst.tickets):
        if inst.is_symmetric():
            return "greedy"
        if len({t[0] for t in inst.tickets}) == 1:
            return "algorithm2"
        if inst.m == 2:
            return "two-item"
    return "exhaustive"


@dataclass
class SolveOutcome:
    solver: str
    profile: Profile | None
    certificate: EquilibriumCertificate | None
    converged: bool = True
    rounds: int = 0
    note: str = ""


def solve(
    inst: AuctionInstance,
    solver: str | None = None,
    cfg: DynamicsConfig = DynamicsConfig(),
    threads: int = 1,
) -> SolveOutcome:
    """Run ``solver`` (auto-detected when None) and certify its output.

    Returns ``profile=None`` when exhaustive search proves there is no pure
    equilibrium.  Solver exceptions propagate.
    """
    inst.require_valid()
    name = solver or choose_solver(inst)
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")
    rounds, converged, note = 0, True, ""
    if name == "proportional":
        x: Profile = continuous.symmetric_equilibrium_given(inst)
    elif name == "costly-symmetric":
        x = continuous.symmetric_equilibrium_costly(inst)
    elif name == "dynamics":
        res = continuous.best_response_dynamics(inst, None, cfg)
        x, rounds, converged = res.profile, res.rounds, res.converged
        if not converged:
            note = f"dynamics stopped after {rounds} rounds at gap {res.final_gap:.3g}"
    elif name == "greedy":
        x = discrete.greedy_symmetric_players(inst)
    elif name == "two-item":
        x = discrete.two_item_asymmetric(inst)
    elif name == "algorithm2":
        x = discrete.algorithm2(inst)
    else:
        found = discrete.exhaustive_equilibrium_search(inst, threads=threads)
        if not found:
            return SolveOutcome(name, None, None, False, 0, "no pure equilibrium exists")
        x = found[0]
        note = f"{len(found)} pure equilibria found"
    return SolveOutcome(name, x, epsilon_nash_check(inst, x), converged, rounds, note)


def utilities(inst: AuctionInstance, x: Profile) -> list[float]:
    return np.asarray(expected_utility(inst, x)).tolist()

"""Best responses, closed-form equilibria and best-response dynamics for
continuous budgets.

With opposing weight ``A_j`` on item ``j`` (the auctioneer ticket included),
player ``i`` facing a given budget maximises ``sum_j v_j y_j / (A_j + y_j)``
over the simplex ``sum_j y_j = w_i``.  The objective is strictly concave, so
the KKT point is the unique optimum and has the water-filling form

    y_j(lam) = max(0, sqrt(v_j A_j / lam) - A_j).

For costly tickets there is no coupling constraint and each item is solved on
its own: ``y_j = max(0, sqrt(v_j A_j) - A_j)``.

Whenever some valued item carries no opposing weight at all, the player would
like to put "an infinitesimal" amount on it.  The supremum is then not
attained; these cases are reported with ``attained=False`` together with a
small feasible witness allocation instead of being silently rounded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import (
    AllZeroValuations,
    AsymmetricValuations,
    BestResponseNotAttained,
    NegativeInput,
    WrongBudgetKind,
)
from .model import COSTLY, GIVEN, AuctionInstance, check_profile, utilities_from_weights

log = logging.getLogger(__name__)

# Total mass spread over unopposed items by a non-attained witness.
ETA = 1e-6


@dataclass(frozen=True)
class BestResponseResult:
    """Outcome of a single player's best-response problem.

    ``value`` is the optimum, or the supremum when ``attained`` is false.
    ``witness_value`` is the utility actually obtained by ``allocation``; the
    two coincide for attained optima.
    """

    allocation: NDArray[np.float64]
    value: float
    attained: bool
    lam: float = 0.0
    witness_value: float = float("nan")
    unopposed: tuple[int, ...] = ()


def opposing_totals(inst: AuctionInstance, x: NDArray, i: int) -> NDArray[np.float64]:
    """``A_j = delta_j + sum_{k != i} x_kj``."""
    x = np.asarray(x, dtype=float)
    return inst.delta + x.sum(axis=0) - x[i]


def _proportional_value(v, a, y) -> float:
    tot = a + y
    return float(np.sum(np.where(tot > 0, v * y / np.where(tot > 0, tot, 1.0), 0.0)))


def water_fill(v: NDArray, a: NDArray, budget: float) -> tuple[NDArray, float]:
    """Maximise ``sum v_j y_j / (a_j + y_j)`` subject to ``sum y = budget``, ``y >= 0``.

    Requires ``v > 0`` and ``a > 0`` elementwise.  Items become active in
    decreasing order of ``v_j / a_j`` (the multiplier level at which they
    first receive weight); for a given active set the multiplier has the
    closed form ``sqrt(lam) = sum sqrt(v a) / (budget + sum a)``.

    Returns ``(y, lam)``.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    if budget <= 0:
        return np.zeros_like(v), float(np.max(v / a)) if v.size else 0.0
    order = np.argsort(-(v / a), kind="stable")
    root_va = np.sqrt(v * a)[order]
    thresholds = np.sqrt(v / a)[order]
    s = 0.0
    sa = 0.0
    root_lam = 0.0
    for k in range(order.size):
        s += root_va[k]
        sa += a[order[k]]
        root_lam = s / (budget + sa)
        if k + 1 == order.size or thresholds[k + 1] <= root_lam:
            break
    lam = root_lam * root_lam
    y = np.maximum(0.0, np.sqrt(v * a) / root_lam - a)
    # Rounding can leave |sum y - budget| at a few ulps; absorb it in the largest entry.
    y[np.argmax(y)] += budget - y.sum()
    return y, lam


def best_response_given(inst: AuctionInstance, i: int, a: NDArray) -> BestResponseResult:
    """Best response of player ``i`` with an endowed continuous budget."""
    a = np.asarray(a, dtype=float)
    v = inst.valuations[i]
    w = inst.budgets[i].total
    if np.any(a < 0) or w < 0:
        raise NegativeInput("opposing totals and budget must be nonnegative")
    m = v.size
    y = np.zeros(m)
    valued = v > 0
    unopposed = valued & (a == 0)
    opposed = valued & (a > 0)
    z = tuple(int(j) for j in np.flatnonzero(unopposed))

    if not valued.any():
        y[:] = w / m
        return BestResponseResult(y, 0.0, True, 0.0, 0.0)
    if w == 0:
        lam = float(np.max(v[opposed] / a[opposed])) if opposed.any() else 0.0
        return BestResponseResult(y, 0.0, True, lam, 0.0)
    if not unopposed.any():
        y[opposed], lam = water_fill(v[opposed], a[opposed], w)
        val = _proportional_value(v, a, y)
        return BestResponseResult(y, val, True, lam, val)
    if not opposed.any():
        # Every valued item is free: any split with positive mass on each wins them all.
        y[unopposed] = w / len(z)
        val = float(v[unopposed].sum())
        return BestResponseResult(y, val, True, 0.0, val, z)

    y_full, _ = water_fill(v[opposed], a[opposed], w)
    sup = float(v[unopposed].sum()) + _proportional_value(v[opposed], a[opposed], y_full)
    eta = min(ETA, w / 2)
    y[unopposed] = eta / len(z)
    y[opposed], lam = water_fill(v[opposed], a[opposed], w - eta)
    return BestResponseResult(y, sup, False, lam, _proportional_value(v, a, y), z)


def best_response_costly(inst: AuctionInstance, i: int, a: NDArray) -> BestResponseResult:
    """Best response of player ``i`` when every unit of weight costs one unit."""
    a = np.asarray(a, dtype=float)
    v = inst.valuations[i]
    if np.any(a < 0):
        raise NegativeInput("opposing totals must be nonnegative")
    y = np.zeros(v.size)
    opposed = (v > 0) & (a > 0)
    unopposed = (v > 0) & (a == 0)
    z = tuple(int(j) for j in np.flatnonzero(unopposed))
    y[opposed] = np.maximum(0.0, np.sqrt(v[opposed] * a[opposed]) - a[opposed])
    gains = np.where(y > 0, (np.sqrt(v) - np.sqrt(a)) ** 2, 0.0)
    value = float(gains.sum() + v[unopposed].sum())
    if not z:
        return BestResponseResult(y, value, True, 0.0, value)
    y[unopposed] = np.minimum(ETA / len(z), v[unopposed] / 2)
    witness = _proportional_value(v, a, y) - float(y.sum())
    return BestResponseResult(y, value, False, 0.0, witness, z)


def best_response(inst: AuctionInstance, i: int, a: NDArray) -> BestResponseResult:
    if not inst.is_continuous:
        raise WrongBudgetKind("best responses are defined for continuous budgets")
    if inst.mode == COSTLY:
        return best_response_costly(inst, i, a)
    return best_response_given(inst, i, a)


def best_response_gaps(inst: AuctionInstance, x: NDArray) -> tuple[NDArray, list[BestResponseResult]]:
    """Per-player improvement ``sup_y u_i(y, x_-i) - u_i(x)`` and the responses."""
    x = np.asarray(x, dtype=float)
    u = utilities_from_weights(inst, x)
    results = [best_response(inst, i, opposing_totals(inst, x, i)) for i in range(inst.n)]
    gaps = np.array([r.value for r in results]) - u
    return gaps, results


def _require_symmetric(inst: AuctionInstance) -> None:
    if not inst.is_continuous:
        raise WrongBudgetKind("closed forms need continuous budgets")
    if not inst.is_symmetric(1e-12):
        raise AsymmetricValuations("valuations differ across players")


def symmetric_equilibrium_given(inst: AuctionInstance) -> NDArray[np.float64]:
    """Every player splits their budget in proportion to the common item values.

    ``x_ij = w_i * v_j / sum_k v_k``.  Assumes no auctioneer tickets.
    """
    if inst.mode != GIVEN:
        raise WrongBudgetKind("the proportional profile is for given tickets")
    _require_symmetric(inst)
    v = inst.valuations[0]
    total = v.sum()
    if total <= 0:
        raise AllZeroValuations("all item values are zero")
    return np.outer(inst.weights, v / total)


def symmetric_equilibrium_costly(inst: AuctionInstance) -> NDArray[np.float64]:
    """``x_ij = (n - 1) / n**2 * v_j`` for every player (zero when ``n == 1``)."""
    if inst.mode != COSTLY:
        raise WrongBudgetKind("this profile is for costly tickets")
    _require_symmetric(inst)
    n = inst.n
    return np.tile((n - 1) / n**2 * inst.valuations[0], (n, 1))


@dataclass(frozen=True)
class DynamicsConfig:
    max_rounds: int = 10_000
    theta: float = 0.5
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class DynamicsResult:
    profile: NDArray[np.float64]
    converged: bool
    rounds: int
    final_gap: float


def default_start(inst: AuctionInstance) -> NDArray[np.float64]:
    """Uniform split of the budget (given) or half the box (costly)."""
    if inst.mode == COSTLY:
        return inst.valuations / 2
    return np.outer(inst.weights, np.full(inst.m, 1.0 / inst.m))


def best_response_dynamics(
    inst: AuctionInstance,
    start: NDArray | None = None,
    cfg: DynamicsConfig = DynamicsConfig(),
) -> DynamicsResult:
    """Round-robin damped best-response updates ``x_i <- (1-theta) x_i + theta BR_i``.

    Stops as soon as every player's best-response gap is at most
    ``cfg.epsilon``.  Failing to get there within ``cfg.max_rounds`` is
    reported through ``converged=False``.
    """
    inst.require_valid()
    if not inst.is_continuous:
        raise WrongBudgetKind("best-response dynamics needs continuous budgets")
    x = default_start(inst) if start is None else np.array(start, dtype=float)
    problems = check_profile(inst, x)
    if problems:
        raise ValueError("infeasible start: " + "; ".join(problems))
    skip = [inst.mode == GIVEN and not np.any(inst.valuations[i] > 0) for i in range(inst.n)]

    def gap() -> float:
        gaps, results = best_response_gaps(inst, x)
        for i, r in enumerate(results):
            if not r.attained and not skip[i]:
                raise BestResponseNotAttained(i, r.unopposed)
        return float(max((g for g, s in zip(gaps, skip) if not s), default=0.0))

    g = gap()
    rounds = 0
    while g > cfg.epsilon and rounds < cfg.max_rounds:
        rounds += 1
        for i in range(inst.n):
            if skip[i]:
                continue
            br = best_response(inst, i, opposing_totals(inst, x, i))
            if not br.attained:
                raise BestResponseNotAttained(i, br.unopposed)
            x[i] = (1 - cfg.theta) * x[i] + cfg.theta * br.allocation
        g = gap()
    converged = g <= cfg.epsilon
    if not converged:
        log.info("dynamics stopped after %d rounds with gap %.3g", rounds, g)
    return DynamicsResult(x, converged, rounds, g)

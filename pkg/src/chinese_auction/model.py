"""Instances, strategy profiles and the expected-utility semantics.

A Chinese auction has ``n`` players and ``m`` items.  Every player spreads a
budget of ticket weight over the item baskets and each item goes to the owner
of a ticket drawn with probability proportional to its weight.  The auctioneer
may put a fixed weight ``delta[j]`` into basket ``j``; if that weight is drawn
nobody gets the item.  An item with no weight at all stays with the auctioneer.

Two cost regimes are supported:

``given``
    Tickets are endowed.  ``u_i = sum_j sigma_ij * v_ij`` and the budget must
    be spent in full.
``costly``
    Every unit of weight costs one unit of utility,
    ``u_i = sum_j (sigma_ij * v_ij - x_ij)``.  Continuous players choose
    ``0 <= x_ij <= v_ij``; discrete players always pay for all their tickets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, InvalidInstance

GIVEN = "given"
COSTLY = "costly"
MODES = (GIVEN, COSTLY)

# Feasibility slack used for budget sums and box constraints.
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class ContinuousBudget:
    weight: float

    @property
    def total(self) -> float:
        return float(self.weight)


@dataclass(frozen=True)
class DiscreteBudget:
    """A multiset of indivisible tickets, stored in the order given."""

    tickets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "tickets", tuple(float(t) for t in self.tickets))

    @property
    def total(self) -> float:
        return float(sum(self.tickets))


Budget = Union[ContinuousBudget, DiscreteBudget]


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AuctionInstance:
    """An immutable auction: valuations, budgets, cost mode and auctioneer tickets.

    The constructor normalises types but does not validate; call
    :func:`validate_instance` (or :meth:`require_valid`) for that, so that
    malformed input can be reported rather than rejected mid-parse.
    """

    valuations: NDArray[np.float64]
    budgets: tuple[Budget, ...]
    mode: str = GIVEN
    delta: NDArray[np.float64] | None = None

    def __post_init__(self):
        v = np.array(self.valuations, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        object.__setattr__(self, "valuations", _frozen(v))
        object.__setattr__(self, "budgets", tuple(self.budgets))
        m = v.shape[1] if v.ndim == 2 else 0
        d = np.zeros(m) if self.delta is None else np.array(self.delta, dtype=float).ravel()
        object.__setattr__(self, "delta", _frozen(d))

    @classmethod
    def continuous(cls, valuations, weights, mode=GIVEN, delta=None) -> "AuctionInstance":
        return cls(valuations, tuple(ContinuousBudget(float(w)) for w in weights), mode, delta)

    @classmethod
    def discrete(cls, valuations, tickets, mode=GIVEN, delta=None) -> "AuctionInstance":
        return cls(valuations, tuple(DiscreteBudget(tuple(t)) for t in tickets), mode, delta)

    @property
    def n(self) -> int:
        return len(self.budgets)

    @property
    def m(self) -> int:
        return self.valuations.shape[1]

    @property
    def weights(self) -> NDArray[np.float64]:
        """Total budget ``w_i`` of every player."""
        return np.array([b.total for b in self.budgets])

    @property
    def is_continuous(self) -> bool:
        return all(isinstance(b, ContinuousBudget) for b in self.budgets)

    @property
    def is_discrete(self) -> bool:
        return all(isinstance(b, DiscreteBudget) for b in self.budgets)

    @property
    def tickets(self) -> tuple[tuple[float, ...], ...]:
        return tuple(b.tickets for b in self.budgets if isinstance(b, DiscreteBudget))

    @property
    def has_auctioneer(self) -> bool:
        return bool(np.any(self.delta > 0))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True when every player values the items identically."""
        v = self.valuations
        return bool(np.all(np.abs(v - v[0]) <= tol))

    def with_delta(self, delta) -> "AuctionInstance":
        return AuctionInstance(self.valuations, self.budgets, self.mode, delta)

    def require_valid(self) -> None:
        problems = validate_instance(self)
        if problems:
            raise InvalidInstance(problems)


def validate_instance(inst: AuctionInstance) -> list[str]:
    """Return every structural problem with ``inst``; an empty list means valid."""
    problems = []
    v = inst.valuations
    if v.ndim != 2:
        return [f"valuations must be a matrix, got {v.ndim} dimensions"]
    if inst.n < 1:
        problems.append("at least one player is required")
    if v.shape[1] < 1:
        problems.append("at least one item is required")
    if v.shape[0] != inst.n:
        problems.append(f"dimension mismatch: {v.shape[0]} valuation rows for {inst.n} players")
    if inst.mode not in MODES:
        problems.append(f"unknown mode {inst.mode!r}")
    if not np.all(np.isfinite(v)):
        problems.append("non-finite valuation")
    elif np.any(v < 0):
        rows, cols = np.nonzero(v < 0)
        problems.append(f"negative valuation at (player {rows[0]}, item {cols[0]})")
    if inst.delta.shape != (v.shape[1],):
        problems.append(f"dimension mismatch: delta has {inst.delta.size} entries for {v.shape[1]} items")
    elif not np.all(np.isfinite(inst.delta)) or np.any(inst.delta < 0):
        problems.append("negative or non-finite auctioneer ticket")
    for i, b in enumerate(inst.budgets):
        if isinstance(b, ContinuousBudget):
            if not np.isfinite(b.weight) or b.weight < 0:
                problems.append(f"negative budget for player {i}")
        elif isinstance(b, DiscreteBudget):
            if not b.tickets:
                problems.append(f"empty tickets for player {i}")
            elif any(not np.isfinite(t) or t <= 0 for t in b.tickets):
                problems.append(f"nonpositive ticket for player {i}")
        else:
            problems.append(f"unknown budget type for player {i}")
    return problems


@dataclass(frozen=True)
class DiscreteAssignment:
    """Item index (0-based) chosen for every ticket of every player."""

    items: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(tuple(int(j) for j in row) for row in self.items))

    def weights(self, inst: AuctionInstance) -> NDArray[np.float64]:
        """Per (player, item) total ticket weight."""
        x = np.zeros((inst.n, inst.m))
        for i, (row, tickets) in enumerate(zip(self.items, inst.tickets)):
            for j, t in zip(row, tickets):
                x[i, j] += t
        return x

    def canonical(self, inst: AuctionInstance) -> "DiscreteAssignment":
        """Sort the item choices within each group of equal-weight tickets.

        Two assignments with the same canonical form place the same weight on
        every item and so are strategically identical.
        """
        out = []
        for row, tickets in zip(self.items, inst.tickets):
            row = list(row)
            groups: dict[float, list[int]] = {}
            for k, t in enumerate(tickets):
                groups.setdefault(t, []).append(k)
            for idx in groups.values():
                for k, j in zip(idx, sorted(row[k] for k in idx)):
                    row[k] = j
            out.append(tuple(row))
        return DiscreteAssignment(tuple(out))

    def replace_player(self, i: int, row: Sequence[int]) -> "DiscreteAssignment":
        items = list(self.items)
        items[i] = tuple(row)
        return DiscreteAssignment(tuple(items))


Profile = Union[NDArray[np.float64], DiscreteAssignment]


def as_weights(inst: AuctionInstance, x: Profile) -> NDArray[np.float64]:
    """Reduce a profile to its ``n x m`` weight matrix."""
    if isinstance(x, DiscreteAssignment):
        if not inst.is_discrete:
            raise DimensionMismatch("a discrete assignment needs an instance with ticket budgets")
        if len(x.items) != inst.n or any(len(r) != len(t) for r, t in zip(x.items, inst.tickets)):
            raise DimensionMismatch("assignment does not cover every ticket exactly once")
        if any(not 0 <= j < inst.m for row in x.items for j in row):
            raise DimensionMismatch("assignment names an item outside 0..m-1")
        return x.weights(inst)
    w = np.asarray(x, dtype=float)
    if w.shape != (inst.n, inst.m):
        raise DimensionMismatch(f"profile shape {w.shape} does not match ({inst.n}, {inst.m})")
    return w


def check_profile(inst: AuctionInstance, x: Profile) -> list[str]:
    """Feasibility problems of ``x`` for ``inst`` (empty when feasible)."""
    try:
        w = as_weights(inst, x)
    except DimensionMismatch as exc:
        return [str(exc)]
    if isinstance(x, DiscreteAssignment):
        return []
    problems = []
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        problems.append("negative or non-finite weight")
    if inst.mode == GIVEN:
        for i, b in enumerate(inst.budgets):
            if isinstance(b, ContinuousBudget):
                if abs(w[i].sum() - b.weight) > FEAS_TOL * max(1.0, b.weight):
                    problems.append(f"player {i} spends {w[i].sum()!r}, budget is {b.weight!r}")
    else:
        over = w > inst.valuations + FEAS_TOL * np.maximum(1.0, inst.valuations)
        if np.any(over):
            i, j = np.argwhere(over)[0]
            problems.append(f"player {i} exceeds the box x <= v on item {j}")
    return problems


@dataclass(frozen=True)
class WinProbabilities:
    sigma: NDArray[np.float64]
    auctioneer_share: NDArray[np.float64]


def sigma_from_weights(x: NDArray, delta: NDArray) -> tuple[NDArray, NDArray]:
    """Winning probabilities for weights ``x`` of shape ``(..., n, m)``.

    Returns ``(sigma, auctioneer_share)``; items with zero total mass get zero
    everywhere.
    """
    total = delta + x.sum(axis=-2)
    positive = total > 0
    safe = np.where(positive, total, 1.0)
    sigma = np.where(positive[..., None, :], x / safe[..., None, :], 0.0)
    share = np.where(positive, delta / safe, 0.0)
    return sigma, share


def utilities_from_weights(inst: AuctionInstance, x: NDArray) -> NDArray:
    """Vectorised expected utilities for weight matrices of shape ``(..., n, m)``."""
    sigma, _ = sigma_from_weights(x, inst.delta)
    u = (sigma * inst.valuations).sum(axis=-1)
    if inst.mode == COSTLY:
        u = u - x.sum(axis=-1)
    return u


def win_probabilities(inst: AuctionInstance, x: Profile) -> WinProbabilities:
    sigma, share = sigma_from_weights(as_weights(inst, x), inst.delta)
    return WinProbabilities(sigma, share)


def expected_utility(inst: AuctionInstance, x: Profile) -> NDArray[np.float64]:
    """Exact expected utility of every player under profile ``x``."""
    return utilities_from_weights(inst, as_weights(inst, x))

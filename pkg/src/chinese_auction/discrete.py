"""Equilibrium constructions for indivisible tickets and exhaustive search.

Utilities are compared in exact rational arithmetic whenever every input
float converts to a fraction with 64-bit numerator and denominator, which is
the case for all "ordinary" inputs.  Otherwise a tolerance of ``1e-12``
(absolute plus relative) is used.  Item and player indices are 0-based.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import (
    AsymmetricValuations,
    ExplosionGuard,
    MultiTicketPlayer,
    NotTwoItems,
    UnequalTicketWeights,
    WrongBudgetKind,
)
from .model import COSTLY, AuctionInstance, DiscreteAssignment

STRATEGY_LIMIT = 10**6
PROFILE_LIMIT = 10**7
FLOAT_TOL = 1e-12
_INT64 = 2**63 - 1


class Arithmetic:
    """Number conversion and comparison shared by every discrete routine."""

    def __init__(self, inst: AuctionInstance):
        values = [*inst.valuations.ravel(), *inst.delta, *(t for ts in inst.tickets for t in ts)]
        fracs = [Fraction(float(x)) for x in values]
        self.exact = all(abs(f.numerator) <= _INT64 and f.denominator <= _INT64 for f in fracs)

    def num(self, x):
        return Fraction(float(x)) if self.exact else float(x)

    def greater(self, a, b) -> bool:
        """Strict ``a > b``; in float mode differences below tolerance are ties."""
        if self.exact:
            return a > b
        return a - b > FLOAT_TOL * max(1.0, abs(a), abs(b))


class DiscreteGame:
    """Exact view of a discrete-budget instance used by all routines here."""

    def __init__(self, inst: AuctionInstance):
        if not inst.is_discrete:
            raise WrongBudgetKind("expected ticket budgets")
        inst.require_valid()
        self.inst = inst
        self.ar = Arithmetic(inst)
        num = self.ar.num
        self.n, self.m = inst.n, inst.m
        self.v = [[num(x) for x in row] for row in inst.valuations]
        self.delta = [num(d) for d in inst.delta]
        self.tickets = [[num(t) for t in ts] for ts in inst.tickets]
        self.costly = inst.mode == COSTLY
        self.spend = [sum(ts, num(0)) for ts in self.tickets]
        self.zero = num(0)

    def load(self, i: int, row: Sequence[int]) -> list:
        """Weight player ``i`` puts on each item under ticket map ``row``."""
        w = [self.zero] * self.m
        for j, t in zip(row, self.tickets[i]):
            w[j] += t
        return w

    def totals(self, loads: Sequence[Sequence]) -> list:
        return [self.delta[j] + sum(ld[j] for ld in loads) for j in range(self.m)]

    def utility(self, i: int, own: Sequence, opp: Sequence):
        """Utility of player ``i`` placing ``own`` against opposing totals ``opp``."""
        u = self.zero
        for j in range(self.m):
            if own[j] and self.v[i][j]:
                u += self.v[i][j] * own[j] / (opp[j] + own[j])
        return u - self.spend[i] if self.costly else u

    def opposing(self, totals: Sequence, own: Sequence) -> list:
        return [t - o for t, o in zip(totals, own)]


def _strategy_count(tickets: Sequence[float], m: int, dedup: bool) -> int:
    if not dedup:
        return m ** len(tickets)
    count = 1
    for g in _weight_groups(tickets):
        count *= math.comb(len(g) + m - 1, m - 1)
    return count


def _weight_groups(tickets: Sequence[float]) -> list[list[int]]:
    groups: dict[float, list[int]] = {}
    for k, t in enumerate(tickets):
        groups.setdefault(t, []).append(k)
    return list(groups.values())


def enumerate_player_strategies(
    inst: AuctionInstance, i: int, dedup: bool = False, limit: int = STRATEGY_LIMIT
) -> Iterator[tuple[int, ...]]:
    """All ticket-to-item maps of player ``i``.

    With ``dedup`` tickets of identical weight are interchangeable and only
    one representative per composition is produced (item choices sorted
    within each weight group, the same form as
    :meth:`DiscreteAssignment.canonical`).
    """
    if not inst.is_discrete:
        raise WrongBudgetKind("strategies are enumerated for ticket budgets")
    tickets = inst.tickets[i]
    m = inst.m
    count = _strategy_count(tickets, m, dedup)
    if count > limit:
        raise ExplosionGuard(f"player {i} has {count} strategies (limit {limit})")
    if not dedup:
        yield from itertools.product(range(m), repeat=len(tickets))
        return
    groups = _weight_groups(tickets)
    per_group = [list(itertools.combinations_with_replacement(range(m), len(g))) for g in groups]
    for combo in itertools.product(*per_group):
        row = [0] * len(tickets)
        for g, choice in zip(groups, combo):
            for k, j in zip(g, choice):
                row[k] = j
        yield tuple(row)


def _player_options(game: DiscreteGame, limit: int) -> list[tuple[list[tuple[int, ...]], list[list]]]:
    out = []
    for i in range(game.n):
        rows = list(enumerate_player_strategies(game.inst, i, dedup=True, limit=limit))
        out.append((rows, [game.load(i, r) for r in rows]))
    return out


def best_deviation(game: DiscreteGame, i: int, opp: Sequence, loads: Sequence[Sequence] | None = None):
    """Best utility player ``i`` can reach against ``opp`` over all ticket maps."""
    if loads is None:
        loads = [game.load(i, r) for r in enumerate_player_strategies(game.inst, i, dedup=True)]
    best = None
    for own in loads:
        u = game.utility(i, own, opp)
        if best is None or u > best:
            best = u
    return best


def deviation_gaps(inst: AuctionInstance, a: DiscreteAssignment, limit: int = STRATEGY_LIMIT):
    """Per-player improvement available by redistributing own tickets.

    Returns ``(gaps, utilities, exact)``; gaps are fractions in exact mode.
    In float mode gaps within tolerance of zero are reported as zero.
    """
    game = DiscreteGame(inst)
    loads = [game.load(i, row) for i, row in enumerate(a.items)]
    totals = game.totals(loads)
    gaps, utils = [], []
    for i in range(game.n):
        opp = game.opposing(totals, loads[i])
        u = game.utility(i, loads[i], opp)
        own_options = [game.load(i, r) for r in enumerate_player_strategies(inst, i, dedup=True, limit=limit)]
        best = best_deviation(game, i, opp, own_options)
        gap = best - u
        if not game.ar.exact and not game.ar.greater(best, u):
            gap = 0.0
        gaps.append(gap)
        utils.append(u)
    return gaps, utils, game.ar.exact


def _decode(index: int, radices: Sequence[int]) -> list[int]:
    digits = []
    for r in reversed(radices):
        index, d = divmod(index, r)
        digits.append(d)
    return digits[::-1]


def _scan_range(inst: AuctionInstance, start: int, stop: int, limit: int) -> list[tuple[int, ...]]:
    """Indices (per-player strategy numbers) of equilibria in ``[start, stop)``."""
    game = DiscreteGame(inst)
    options = _player_options(game, limit)
    radices = [len(rows) for rows, _ in options]
    cache: list[dict] = [{} for _ in range(game.n)]
    found = []
    digits = _decode(start, radices)
    for _ in range(start, stop):
        loads = [options[i][1][d] for i, d in enumerate(digits)]
        totals = game.totals(loads)
        stable = True
        for i in range(game.n):
            opp = tuple(game.opposing(totals, loads[i]))
            best = cache[i].get(opp)
            if best is None:
                best = cache[i][opp] = best_deviation(game, i, opp, options[i][1])
            if game.ar.greater(best, game.utility(i, loads[i], opp)):
                stable = False
                break
        if stable:
            found.append(tuple(digits))
        for pos in range(game.n - 1, -1, -1):
            digits[pos] += 1
            if digits[pos] < radices[pos]:
                break
            digits[pos] = 0
    return found


def joint_profile_count(inst: AuctionInstance, limit: int = STRATEGY_LIMIT) -> int:
    """Number of strategically distinct joint profiles (identical tickets merged)."""
    return math.prod(_strategy_count(ts, inst.m, True) for ts in inst.tickets) if _strategy_guard(inst, limit) else 0


def _strategy_guard(inst: AuctionInstance, limit: int) -> bool:
    for i, ts in enumerate(inst.tickets):
        c = _strategy_count(ts, inst.m, True)
        if c > limit:
            raise ExplosionGuard(f"player {i} has {c} strategies (limit {limit})")
    return True


def exhaustive_equilibrium_search(
    inst: AuctionInstance,
    limit: int = PROFILE_LIMIT,
    threads: int = 1,
) -> list[DiscreteAssignment]:
    """Every exact pure Nash equilibrium, one per class of interchangeable tickets.

    Joint profiles are scanned in lexicographic order of the players'
    strategy numbers, so the output order is deterministic regardless of
    ``threads``.
    """
    game = DiscreteGame(inst)
    total = joint_profile_count(inst)
    if total > limit:
        raise ExplosionGuard(f"{total} joint profiles exceed the limit {limit}")
    if threads > 1 and total > 10_000:
        step = -(-total // threads)
        bounds = [(s, min(s + step, total)) for s in range(0, total, step)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(_scan_range, *zip(*[(inst, s, e, STRATEGY_LIMIT) for s, e in bounds]))
            hits = [h for part in parts for h in part]
    else:
        hits = _scan_range(inst, 0, total, STRATEGY_LIMIT)
    strategies = [list(enumerate_player_strategies(inst, i, dedup=True)) for i in range(game.n)]
    return [DiscreteAssignment(tuple(strategies[i][d] for i, d in enumerate(h))) for h in hits]


def _single_tickets(inst: AuctionInstance) -> list:
    if not inst.is_discrete:
        raise WrongBudgetKind("expected ticket budgets")
    bad = [i for i, ts in enumerate(inst.tickets) if len(ts) != 1]
    if bad:
        raise MultiTicketPlayer(f"players {bad} hold more than one ticket")
    return [ts[0] for ts in inst.tickets]


def _argmax(scores: Sequence, ar: Arithmetic, exclude: int | None = None) -> int:
    best = None
    for j, s in enumerate(scores):
        if j == exclude:
            continue
        if best is None or ar.greater(s, scores[best]):
            best = j
    return best


@dataclass(frozen=True)
class GreedyStep:
    player: int
    ticket: int
    item: int
    score: float


@dataclass(frozen=True)
class GreedyTrace:
    steps: tuple[GreedyStep, ...]
    assignment: DiscreteAssignment

    def replay(self, n: int) -> DiscreteAssignment:
        rows: list[list[int]] = [[] for _ in range(n)]
        for s in self.steps:
            row = rows[s.player]
            row.extend([0] * (s.ticket + 1 - len(row)))
            row[s.ticket] = s.item
        return DiscreteAssignment(tuple(tuple(r) for r in rows))


def greedy_trace(inst: AuctionInstance) -> GreedyTrace:
    """Heaviest ticket first, each to the item maximising ``t / (X_j + t) * v_j``.

    ``X_j`` starts at the auctioneer weight and accumulates the tickets
    already placed.  Ties go to the lower player index and the lower item
    index.
    """
    weights = _single_tickets(inst)
    if not inst.is_symmetric(1e-12):
        raise AsymmetricValuations("the greedy construction needs common item values")
    game = DiscreteGame(inst)
    values = game.v[0]
    load = list(game.delta)
    chosen = [0] * game.n
    steps = []
    for k in sorted(range(game.n), key=lambda k: (-weights[k], k)):
        t = game.tickets[k][0]
        scores = [t / (load[j] + t) * values[j] for j in range(game.m)]
        j = _argmax(scores, game.ar)
        load[j] += t
        chosen[k] = j
        steps.append(GreedyStep(k, 0, j, float(scores[j])))
    return GreedyTrace(tuple(steps), DiscreteAssignment(tuple((j,) for j in chosen)))


def greedy_symmetric_players(inst: AuctionInstance) -> DiscreteAssignment:
    return greedy_trace(inst).assignment


def two_item_asymmetric(inst: AuctionInstance, settle: bool = True) -> DiscreteAssignment:
    """Everyone starts on item 0, then players move to item 1 one at a time.

    Players are visited in increasing order of ``w_i * v_i0 / v_i1`` (infinite
    when ``v_i1 == 0``, ties by index).  A player moves when that strictly
    improves their utility; the sweep stops at the first player who declines.

    With equal ticket weights the sweep alone ends in an equilibrium.  With
    unequal weights the static order can be wrong once item 1 is occupied
    (the true move condition is ``v_i0 / v_i1 * (X_1 + w_i) < X_0``), so by
    default the sweep is followed by strictly improving single moves, lowest
    player index first, until nobody wants to switch.  ``settle=False``
    returns the bare sweep.
    """
    if inst.m != 2:
        raise NotTwoItems(f"expected 2 items, got {inst.m}")
    _single_tickets(inst)
    game = DiscreteGame(inst)
    t = [ts[0] for ts in game.tickets]
    v = game.v

    def key(i):
        return (math.inf if v[i][1] == 0 else t[i] * v[i][0] / v[i][1], i)

    place = [0] * game.n
    load = [game.delta[0] + sum(t, game.zero), game.delta[1]]
    for i in sorted(range(game.n), key=key):
        if v[i][1] == 0:
            break
        stay = t[i] / load[0] * v[i][0]
        move = t[i] / (load[1] + t[i]) * v[i][1]
        if not game.ar.greater(move, stay):
            break
        place[i] = 1
        load[0] -= t[i]
        load[1] += t[i]

    if settle:
        limit = 10 * game.n * game.n + 10
        for _ in range(limit):
            mover = None
            for i in range(game.n):
                here, there = place[i], 1 - place[i]
                if game.ar.greater(t[i] / (load[there] + t[i]) * v[i][there], t[i] / load[here] * v[i][here]):
                    mover = i
                    break
            if mover is None:
                break
            here = place[mover]
            place[mover] = 1 - here
            load[here] -= t[mover]
            load[1 - here] += t[mover]
        else:
            raise RuntimeError(f"improving moves did not settle within {limit} steps")
    return DiscreteAssignment(tuple((j,) for j in place))


def algorithm2(inst: AuctionInstance, trace: list | None = None) -> DiscreteAssignment:
    """Arrival-and-cascade construction for equal single tickets.

    Players arrive in index order and pick the item maximising
    ``v_ij / (d_j + n_j + 1)`` where ``n_j`` counts tickets already there and
    ``d_j`` is the auctioneer weight in ticket units.  After each arrival,
    while some player on the active item strictly prefers another item, the
    lowest-indexed such player moves to their best item, which becomes
    active.  If ``trace`` is a list, each arrival appends its number of moves.
    """
    weights = _single_tickets(inst)
    if any(w != weights[0] for w in weights):
        raise UnequalTicketWeights("all tickets must have the same weight")
    game = DiscreteGame(inst)
    unit = game.tickets[0][0]
    d = [dj / unit for dj in game.delta]
    v = game.v
    count = [0] * game.m
    place = [-1] * game.n

    def join_value(l, k):
        return v[l][k] / (d[k] + count[k] + 1)

    def wants_out(l, a):
        k = _argmax([join_value(l, k) for k in range(game.m)], game.ar, exclude=a)
        if k is None:
            return None
        here = v[l][a] / (d[a] + count[a])
        return k if game.ar.greater(join_value(l, k), here) else None

    for i in range(game.n):
        a = _argmax([join_value(i, j) for j in range(game.m)], game.ar)
        place[i] = a
        count[a] += 1
        moves = 0
        while True:
            mover = target = None
            for l in range(i + 1):
                if place[l] == a:
                    target = wants_out(l, a)
                    if target is not None:
                        mover = l
                        break
            if mover is None:
                break
            moves += 1
            if moves > game.n:
                raise RuntimeError(f"cascade after arrival {i} exceeded {game.n} moves")
            place[mover] = target
            count[a] -= 1
            count[target] += 1
            a = target
        if trace is not None:
            trace.append(moves)
    return DiscreteAssignment(tuple((j,) for j in place))

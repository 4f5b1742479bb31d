"""Equilibrium certificates, non-existence audits and Monte Carlo checks."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from .continuous import best_response, best_response_gaps
from .discrete import deviation_gaps
from .errors import ExplosionGuard, WrongBudgetKind
from .model import (
    COSTLY,
    AuctionInstance,
    DiscreteAssignment,
    Profile,
    as_weights,
    check_profile,
    utilities_from_weights,
)

AUDIT_LIMIT = 10**7


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Best unilateral improvement of every player at a profile.

    ``epsilon`` is the largest gap (floored at zero); the profile is an
    ``epsilon``-Nash equilibrium.  For continuous budgets a player whose best
    response is only a supremum has ``attained[i] == False`` and their gap is
    the supremum gap.  Discrete checks in exact arithmetic also carry
    ``exact_gaps`` as fractions.
    """

    gaps: NDArray[np.float64]
    epsilon: float
    attained: tuple[bool, ...]
    method: str
    exact_gaps: tuple[Fraction, ...] | None = None

    @property
    def is_exact_nash(self) -> bool:
        if self.exact_gaps is not None:
            return all(g <= 0 for g in self.exact_gaps)
        return self.epsilon == 0.0

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "epsilon": self.epsilon,
            "gaps": [float(g) for g in self.gaps],
            "attained": list(self.attained),
        }
        if self.exact_gaps is not None:
            out["exact_gaps"] = [str(g) for g in self.exact_gaps]
        return out


def epsilon_nash_check_continuous(inst: AuctionInstance, x) -> EquilibriumCertificate:
    problems = check_profile(inst, x)
    if problems:
        raise ValueError("infeasible profile: " + "; ".join(problems))
    gaps, results = best_response_gaps(inst, as_weights(inst, x))
    return EquilibriumCertificate(
        gaps=gaps,
        epsilon=max(0.0, float(gaps.max())),
        attained=tuple(r.attained for r in results),
        method=f"best-response/{inst.mode}",
    )


def exact_nash_check_discrete(inst: AuctionInstance, a: DiscreteAssignment) -> EquilibriumCertificate:
    as_weights(inst, a)
    gaps, _, exact = deviation_gaps(inst, a)
    floats = np.array([float(g) for g in gaps])
    return EquilibriumCertificate(
        gaps=floats,
        epsilon=max(0.0, float(floats.max())),
        attained=(True,) * inst.n,
        method="enumeration/exact" if exact else "enumeration/float",
        exact_gaps=tuple(gaps) if exact else None,
    )


def epsilon_nash_check(inst: AuctionInstance, x: Profile) -> EquilibriumCertificate:
    if isinstance(x, DiscreteAssignment):
        return exact_nash_check_discrete(inst, x)
    return epsilon_nash_check_continuous(inst, x)


# --- grid audit -------------------------------------------------------------


def _compositions(k: int, m: int) -> NDArray[np.int64]:
    """All nonnegative integer vectors of length ``m`` summing to ``k``."""
    if m == 1:
        return np.array([[k]])
    rows = []
    for first in range(k, -1, -1):
        for rest in _compositions(k - first, m - 1):
            rows.append([first, *rest])
    return np.array(rows)


def _axis(upper: float, h: float) -> NDArray[np.float64]:
    if upper <= 0:
        return np.zeros(1)
    k = max(1, math.ceil(upper / h - 1e-9))
    return np.linspace(0.0, upper, k + 1)


def strategy_grid(inst: AuctionInstance, i: int, h: float) -> NDArray[np.float64]:
    """Grid of player ``i``'s continuous strategies at resolution ``h``.

    Given tickets: the budget simplex with step ``w_i / ceil(w_i / h)``.
    Costly tickets: the box ``[0, v_ij]`` with per-item step at most ``h``,
    endpoints included.
    """
    if inst.mode == COSTLY:
        axes = [_axis(v, h) for v in inst.valuations[i]]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)
    w = inst.budgets[i].total
    if w <= 0:
        return np.zeros((1, inst.m))
    k = max(1, math.ceil(w / h - 1e-9))
    count = math.comb(k + inst.m - 1, inst.m - 1)
    if count > AUDIT_LIMIT:
        raise ExplosionGuard(f"player {i} simplex grid has {count} points")
    return _compositions(k, inst.m) * (w / k)


@dataclass(frozen=True)
class AuditReport:
    """Outcome of a finite non-existence audit.

    ``gaps[k]`` is the largest improvement any player finds at the ``k``-th
    grid profile (row-major over the players' grids).  A positive
    ``min_gap`` means no profile on this grid is an ``epsilon``-equilibrium
    for any ``epsilon < min_gap``.  It is evidence, not a proof.
    """

    h: float
    h_dev: float
    grid_size: int
    gaps: NDArray[np.float64]
    min_gap: float
    witness: NDArray[np.float64]
    grids: tuple[NDArray[np.float64], ...] = field(repr=False)

    def profile(self, k: int) -> NDArray[np.float64]:
        idx = np.unravel_index(k, [len(g) for g in self.grids])
        return np.stack([g[t] for g, t in zip(self.grids, idx)])

    def summary(self) -> str:
        verdict = (
            f"no {self.min_gap:.6g}-equilibrium on this grid"
            if self.min_gap > 0
            else "grid contains an exact equilibrium"
        )
        return (
            f"audit h={self.h} dev-h={self.h_dev}: {self.grid_size} profiles, "
            f"min gap {self.min_gap:.6g} ({verdict})"
        )

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "dev_h": self.h_dev,
            "grid_size": self.grid_size,
            "min_gap": self.min_gap,
            "witness": self.witness.tolist(),
        }

    def csv_rows(self) -> Iterator[list[float]]:
        for k in range(self.grid_size):
            yield [*self.profile(k).ravel().tolist(), float(self.gaps[k])]


class _DeviationOracle:
    """Best deviation value of one player as a function of opposing totals."""

    def __init__(self, inst: AuctionInstance, i: int, h_dev: float):
        self.inst, self.i = inst, i
        self.v = inst.valuations[i]
        self.cache: dict[bytes, float] = {}
        if inst.mode == COSTLY:
            self.axes = [_axis(v, h_dev) for v in self.v]
        else:
            self.dev = strategy_grid(inst, i, h_dev)

    def _grid_best(self, a: NDArray) -> NDArray:
        """Grid-restricted best value for each row of ``a`` (shape ``(U, m)``)."""
        if self.inst.mode == COSTLY:
            best = np.zeros(len(a))
            for j, axis in enumerate(self.axes):
                d = axis[None, :]
                tot = a[:, j : j + 1] + d
                vals = np.where(tot > 0, self.v[j] * d / np.where(tot > 0, tot, 1.0), 0.0) - d
                best += vals.max(axis=1)
            return best
        out = np.empty(len(a))
        block = max(1, 2_000_000 // max(1, self.dev.size))
        for s in range(0, len(a), block):
            aa = a[s : s + block, None, :]
            d = self.dev[None, :, :]
            tot = aa + d
            vals = np.where(tot > 0, self.v * d / np.where(tot > 0, tot, 1.0), 0.0).sum(axis=-1)
            out[s : s + block] = vals.max(axis=1)
        return out

    def best(self, a: NDArray) -> NDArray:
        uniq, inverse = np.unique(a, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).ravel()
        keys = [row.tobytes() for row in uniq]
        missing = [k for k, key in enumerate(keys) if key not in self.cache]
        if missing:
            grid = self._grid_best(uniq[missing])
            for pos, k in enumerate(missing):
                br = best_response(self.inst, self.i, uniq[k])
                analytic = br.value if br.attained else br.witness_value
                self.cache[keys[k]] = max(float(grid[pos]), analytic)
        vals = np.array([self.cache[key] for key in keys])
        return vals[inverse]


def nonexistence_grid_audit(
    inst: AuctionInstance, h: float = 0.01, h_dev: float = 0.001, chunk: int = 200_000
) -> AuditReport:
    """Largest unilateral improvement at every profile of a finite grid.

    Deviations searched per player: the deviation grid at step ``h_dev``,
    the analytic best response when it is attained, and the small feasible
    witness when it is not (a real strategy, so the reported improvement is
    always achievable).
    """
    inst.require_valid()
    if not inst.is_continuous:
        raise WrongBudgetKind("the grid audit is for continuous budgets")
    if not 0 < h_dev <= h:
        raise ValueError("need 0 < h_dev <= h")
    grids = tuple(strategy_grid(inst, i, h) for i in range(inst.n))
    sizes = [len(g) for g in grids]
    total = math.prod(sizes)
    if total > AUDIT_LIMIT:
        raise ExplosionGuard(f"{total} grid profiles exceed the limit {AUDIT_LIMIT}")
    oracles = [_DeviationOracle(inst, i, h_dev) for i in range(inst.n)]
    gaps = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), sizes)
        p = np.stack([g[t] for g, t in zip(grids, idx)], axis=1)
        u = utilities_from_weights(inst, p)
        worst = np.zeros(len(p))
        for i in range(inst.n):
            # Summed directly (not total minus own) so equal opponent play gives identical rows.
            others = [k for k in range(inst.n) if k != i]
            a = inst.delta + p[:, others].sum(axis=1)
            worst = np.maximum(worst, oracles[i].best(a) - u[:, i])
        gaps[start : start + len(p)] = worst
    k = int(np.argmin(gaps))
    idx = np.unravel_index(k, sizes)
    witness = np.stack([g[t] for g, t in zip(grids, idx)])
    return AuditReport(h, h_dev, total, gaps, float(gaps[k]), witness, grids)


# --- Monte Carlo ------------------------------------------------------------

MC_CHUNK = 100_000


@dataclass(frozen=True)
class MonteCarloResult:
    mean: NDArray[np.float64]
    stderr: NDArray[np.float64]
    win_frequency: NDArray[np.float64]
    trials: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.mean.tolist(),
            "stderr": self.stderr.tolist(),
            "win_frequency": self.win_frequency.tolist(),
        }


def _simulate_chunk(x: NDArray, inst: AuctionInstance, size: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    n, m = x.shape
    u = np.zeros((size, n))
    wins = np.zeros((n, m))
    rows = np.arange(size)
    for j in range(m):
        weights = np.append(x[:, j], inst.delta[j])
        total = weights.sum()
        if total <= 0:
            continue
        cum = np.cumsum(weights) / total
        winner = np.minimum(np.searchsorted(cum, rng.random(size), side="right"), n)
        # Draws that land on a zero-weight slot because of rounding are moved
        # to the owner of the interval they fell into.
        while np.any(weights[winner] == 0):
            bad = weights[winner] == 0
            winner[bad] = np.minimum(winner[bad] + 1, n)
        players = winner < n
        u[rows[players], winner[players]] += inst.valuations[winner[players], j]
        wins[:, j] = np.bincount(winner[players], minlength=n)[:n]
    return u.sum(axis=0), (u * u).sum(axis=0), wins


def monte_carlo_utilities(
    inst: AuctionInstance, x: Profile, trials: int, seed: int = 0, threads: int = 1
) -> MonteCarloResult:
    """Simulate the lotteries ``trials`` times and average the realised utilities.

    Trials are split into fixed-size chunks, each with its own stream spawned
    from ``seed``, so results do not depend on ``threads``.  Ticket costs are
    deterministic and subtracted exactly.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    w = as_weights(inst, x)
    sizes = [min(MC_CHUNK, trials - s) for s in range(0, trials, MC_CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _simulate_chunk(w, inst, *job), jobs))
    else:
        parts = [_simulate_chunk(w, inst, *job) for job in jobs]
    s = sum(p[0] for p in parts)
    ss = sum(p[1] for p in parts)
    wins = sum(p[2] for p in parts)
    mean = s / trials
    var = np.maximum(ss / trials - mean**2, 0.0) * (trials / max(trials - 1, 1))
    stderr = np.sqrt(var / trials)
    if inst.mode == COSTLY:
        mean = mean - w.sum(axis=1)
    return MonteCarloResult(mean, stderr, wins / trials, trials, seed)

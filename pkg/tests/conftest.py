import numpy as np
import pytest
from hypothesis import strategies as st

from chinese_auction import AuctionInstance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symmetric(rng, mode="given", n_max=6, m_max=6, n_min=None):
    """Random instance with common values in (0, 10].

    Costly instances need two players: a lone costly bidder facing no
    auctioneer has no equilibrium (its best response is only a supremum).
    """
    if n_min is None:
        n_min = 2 if mode == "costly" else 1
    n = int(rng.integers(n_min, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    v = rng.uniform(0, 10, size=m)
    v[v == 0] = 10.0
    if mode == "given":
        return AuctionInstance.continuous(np.tile(v, (n, 1)), rng.uniform(0.1, 5, size=n))
    return AuctionInstance.continuous(np.tile(v, (n, 1)), np.zeros(n), mode="costly")


def grid_max_separable(f_tables):
    """Exact maximum of sum_j f_j(k_j) over integer k with sum k = K.

    ``f_tables[j][k]`` is the value of item ``j`` with ``k`` grid units;
    solved by max-plus convolution, independent of any KKT reasoning.
    """
    best = f_tables[0].copy()
    for f in f_tables[1:]:
        K = len(f) - 1
        nxt = np.full(K + 1, -np.inf)
        for k in range(K + 1):
            nxt[k] = np.max(best[: k + 1][::-1] + f[: k + 1])
        best = nxt
    return best[-1]


@st.composite
def continuous_instances(draw, mode=None, max_n=4, max_m=4, with_delta=None):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    mode = mode or draw(st.sampled_from(["given", "costly"]))
    values = st.floats(0, 10, allow_nan=False, allow_infinity=False)
    v = draw(st.lists(st.lists(values, min_size=m, max_size=m), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(0, 5), min_size=n, max_size=n))
    has_delta = draw(st.booleans()) if with_delta is None else with_delta
    delta = draw(st.lists(st.floats(0.01, 2), min_size=m, max_size=m)) if has_delta else None
    return AuctionInstance.continuous(v, w, mode=mode, delta=delta)


@st.composite
def feasible_profiles(draw, inst):
    """A feasible profile for ``inst`` (budget simplex or box)."""
    rows = []
    for i in range(inst.n):
        raw = np.array(draw(st.lists(st.floats(0, 1), min_size=inst.m, max_size=inst.m)))
        if inst.mode == "costly":
            rows.append(raw * inst.valuations[i])
        else:
            w = inst.budgets[i].total
            if raw.sum() == 0:
                raw = np.ones(inst.m)
            row = raw / raw.sum() * w
            rows.append(row)
    return np.array(rows)

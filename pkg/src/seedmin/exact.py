"""Exact brute-force ground truth on tiny instances.

Everything here enumerates. Realization tables cover every diffusion
outcome of a small graph together with its probability; per-realization
reachability is kept as node bitmasks so expected spreads, truncated
spreads, the exact mean of the sampling estimator, and exact expected seed
counts of reference policies all reduce to vectorized table lookups.
Guards keep the state spaces small: these routines pin down the sampled
code paths, they do not scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from seedmin.diffusion import Realization, cascade, sample_realization
from seedmin.graph import ProbGraph

IC_EDGE_LIMIT = 22          # probabilistic (p < 1) edges
LT_TABLE_LIMIT = 4_000_000  # product of per-node option counts
MASK_NODE_LIMIT = 64        # bitmask reachability width
GREEDY_NODE_LIMIT = 10
OPTIMAL_NODE_LIMIT = 6
OPTIMAL_TABLE_LIMIT = 4096


@dataclass
class RealizationTable:
    """Full enumeration of diffusion outcomes for one graph.

    ``reach[t, v]`` is the bitmask of nodes reachable from v under
    realization t (v included). ``probs`` sums to 1. The compact per-model
    payload (`codes` for ic, `picks` for lt) can materialize Realization
    objects on demand.
    """

    model: str
    n: int
    m: int
    probs: np.ndarray
    reach: np.ndarray
    codes: np.ndarray | None = None       # ic: bit i = status of prob_edges[i]
    prob_edges: np.ndarray | None = None  # ic: edge ids with p < 1
    fixed_live: np.ndarray | None = None  # ic: True for p == 1 edges
    picks: np.ndarray | None = None       # lt: (T, n) global in-CSR position or -1

    def __len__(self):
        return int(self.probs.size)

    def realization(self, t: int) -> Realization:
        if self.model == "ic":
            live = self.fixed_live.copy()
            bits = (self.codes[t] >> np.arange(self.prob_edges.size, dtype=np.uint64)) & 1
            live[self.prob_edges] = bits.astype(bool)
            return Realization(model="ic", n=self.n, m=self.m, live=live)
        return Realization(model="lt", n=self.n, m=self.m, pick=self.picks[t].astype(np.int64))

    def realizations(self):
        return [self.realization(t) for t in range(len(self))]


def _compute_reach(n: int, edge_src, edge_dst, live_col, T: int) -> np.ndarray:
    """Per-realization reachability bitmasks by fixpoint over live edges."""
    if n > MASK_NODE_LIMIT:
        raise ValueError(f"reachability masks support n <= {MASK_NODE_LIMIT}")
    reach = np.zeros((T, n), dtype=np.uint64)
    for v in range(n):
        reach[:, v] = np.uint64(1) << np.uint64(v)
    for _ in range(n):
        changed = False
        for e in range(edge_src.size):
            u, v = int(edge_src[e]), int(edge_dst[e])
            if u == v:
                continue
            col = live_col(e)
            new = reach[:, u] | np.where(col, reach[:, v], np.uint64(0))
            if not np.array_equal(new, reach[:, u]):
                reach[:, u] = new
                changed = True
        if not changed:
            break
    return reach


def enumerate_realizations(g: ProbGraph, model: str | None = None) -> RealizationTable:
    """Every diffusion outcome of g with its probability.

    Under ic only edges with p in (0, 1) are enumerated; p == 1 edges are
    fixed live, so deterministic edges do not blow up the table. Under lt
    each node contributes (indegree + 1) options, the no-live-in-edge option
    dropped when its probability is exactly zero.
    """
    model = (model or g.model).lower()
    src, dst, p = g.edge_triples()

    if model == "ic":
        prob_edges = np.nonzero(p < 1.0)[0]
        if prob_edges.size > IC_EDGE_LIMIT:
            raise ValueError(f"too many probabilistic edges: {prob_edges.size} > {IC_EDGE_LIMIT}")
        T = 1 << prob_edges.size
        codes = np.arange(T, dtype=np.uint64)
        probs = np.ones(T, dtype=np.float64)
        for i, e in enumerate(prob_edges):
            bit = ((codes >> np.uint64(i)) & np.uint64(1)).astype(bool)
            probs *= np.where(bit, p[e], 1.0 - p[e])
        fixed_live = (p >= 1.0)
        bit_of_edge = np.full(g.m, -1, dtype=np.int64)
        bit_of_edge[prob_edges] = np.arange(prob_edges.size)

        def live_col(e):
            i = bit_of_edge[e]
            if i < 0:
                return np.ones(T, dtype=bool)
            return ((codes >> np.uint64(i)) & np.uint64(1)).astype(bool)

        reach = _compute_reach(g.n, src, dst, live_col, T)
        return RealizationTable(model="ic", n=g.n, m=g.m, probs=probs, reach=reach,
                                codes=codes, prob_edges=prob_edges, fixed_live=fixed_live)

    if model != "lt":
        raise ValueError(f"unknown model {model!r}")

    options = []  # per node: (positions incl. -1, probabilities)
    for v in range(g.n):
        s, e = int(g.in_indptr[v]), int(g.in_indptr[v + 1])
        pos = list(range(s, e))
        pr = [float(g.in_p[q]) for q in pos]
        none_p = 1.0 - sum(pr)
        if none_p > 0.0:
            pos.append(-1)
            pr.append(none_p)
        options.append((np.asarray(pos, dtype=np.int64), np.asarray(pr, dtype=np.float64)))

    T = 1
    for pos, _ in options:
        T *= pos.size
        if T > LT_TABLE_LIMIT:
            raise ValueError(f"lt table exceeds {LT_TABLE_LIMIT} entries")
    codes = np.arange(T, dtype=np.int64)
    picks = np.empty((T, g.n), dtype=np.int64)
    probs = np.ones(T, dtype=np.float64)
    stride = 1
    for v, (pos, pr) in enumerate(options):
        digit = (codes // stride) % pos.size
        picks[:, v] = pos[digit]
        probs *= pr[digit]
        stride *= pos.size

    in_pos_of_edge = g.out2in

    def live_col(e):
        q = in_pos_of_edge[e]
        return picks[:, int(dst[e])] == q

    reach = _compute_reach(g.n, src, dst, live_col, T)
    return RealizationTable(model="lt", n=g.n, m=g.m, probs=probs, reach=reach, picks=picks)


def _seed_mask(seeds) -> np.uint64:
    mask = 0
    for v in seeds:
        mask |= 1 << int(v)
    return np.uint64(mask)


def spread_vector(table: RealizationTable, seeds) -> np.ndarray:
    """Cascade size of the seed set under every realization."""
    seeds = list(seeds)
    if not seeds:
        return np.zeros(len(table), dtype=np.int64)
    union = table.reach[:, int(seeds[0])].copy()
    for v in seeds[1:]:
        union |= table.reach[:, int(v)]
    return np.bitwise_count(union).astype(np.int64)


def expected_spread(g: ProbGraph, table: RealizationTable, seeds) -> float:
    return float(table.probs @ spread_vector(table, seeds))


def expected_truncated(g: ProbGraph, table: RealizationTable, seeds, eta: int) -> float:
    eta = int(eta)
    if not 1 <= eta <= g.n:
        raise ValueError(f"eta must be in 1..n, got {eta}")
    x = np.minimum(spread_vector(table, seeds), eta)
    return float(table.probs @ x)


def miss_probability(n: int, x: int, k: int) -> float:
    """Chance that k uniform distinct roots all avoid a fixed x-node set."""
    if x <= 0:
        return 1.0
    if n - x < k:
        return 0.0
    return math.comb(n - x, k) / math.comb(n, k)


def estimator_mean(g: ProbGraph, table: RealizationTable, seeds, eta: int) -> float:
    """Exact mean of the coverage estimator eta * P(S hits a sample).

    Averages over realizations, the randomized root count (E[k] = n/eta) and
    the uniform choice of distinct roots. The result never exceeds the exact
    expected truncated spread and is at least (1 - 1/e) of it.
    """
    n = g.n
    eta = int(eta)
    if not 1 <= eta <= n:
        raise ValueError(f"eta must be in 1..n, got {eta}")
    k_low, rem = divmod(n, eta)
    frac = rem / eta
    miss = np.empty(n + 1, dtype=np.float64)
    for x in range(n + 1):
        m_low = miss_probability(n, x, k_low)
        m_high = miss_probability(n, x, k_low + 1) if rem else 0.0
        miss[x] = (1.0 - frac) * m_low + frac * m_high
    x = spread_vector(table, seeds)
    return float(eta * (table.probs @ (1.0 - miss[x])))


def mc_truncated(g: ProbGraph, seeds, eta: int, num_samples: int, rng=None,
                 model: str | None = None):
    """Monte-Carlo estimate of expected truncated spread: (mean, stderr)."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    seeds = list(seeds)
    vals = np.empty(num_samples, dtype=np.float64)
    for i in range(num_samples):
        phi = sample_realization(g, model, gen)
        vals[i] = min(cascade(g, phi, seeds).spread, int(eta))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(num_samples)) if num_samples > 1 else 0.0


# -- reference policies ------------------------------------------------------

def _popcount_int(x) -> int:
    return int(np.bitwise_count(np.uint64(x)))


def _greedy_seed_counts(table: RealizationTable, eta: int, truncated: bool) -> np.ndarray:
    """Seed count of the conditional greedy policy under every realization.

    Each round scores every inactive node by its conditional expected
    marginal gain (truncated at the remaining target or not), conditioning
    on the realizations that reproduce every observed cascade so far, and
    seeds the argmax (smallest id on ties).
    """
    T = len(table)
    n = table.n
    counts = np.zeros(T, dtype=np.int64)
    for t in range(T):
        consistent = np.ones(T, dtype=bool)
        active = np.uint64(0)
        num_active = 0
        seeds = 0
        while num_active < eta:
            w = table.probs * consistent
            w = w / w.sum()
            gains = np.full(n, -1.0)
            for v in range(n):
                if (active >> np.uint64(v)) & np.uint64(1):
                    continue
                new = np.bitwise_count(table.reach[:, v] & ~active).astype(np.float64)
                if truncated:
                    new = np.minimum(new, eta - num_active)
                gains[v] = w @ new
            v = int(np.argmax(gains))
            truth = table.reach[t, v] & ~active
            consistent &= (table.reach[:, v] & ~active) == truth
            active |= truth
            num_active = _popcount_int(active)
            seeds += 1
        counts[t] = seeds
    return counts


def _optimal_cost(table: RealizationTable, eta: int) -> float:
    """Expected seed count of the cost-optimal adaptive policy (exhaustive)."""
    if table.n > OPTIMAL_NODE_LIMIT:
        raise ValueError(f"optimal search supports n <= {OPTIMAL_NODE_LIMIT}")
    if len(table) > OPTIMAL_TABLE_LIMIT:
        raise ValueError(f"optimal search supports tables <= {OPTIMAL_TABLE_LIMIT}")
    n = table.n
    probs = table.probs
    reach = table.reach
    memo = {}

    def value(active: np.uint64, consistent_idx: tuple) -> float:
        if _popcount_int(active) >= eta:
            return 0.0
        key = (int(active), consistent_idx)
        if key in memo:
            return memo[key]
        idx = np.asarray(consistent_idx, dtype=np.int64)
        total = probs[idx].sum()
        best = math.inf
        for v in range(n):
            if (int(active) >> v) & 1:
                continue
            outcomes = {}
            news = reach[idx, v] & ~active
            for i, nb in zip(idx.tolist(), news.tolist()):
                outcomes.setdefault(nb, []).append(i)
            exp = 0.0
            for nb, members in outcomes.items():
                pr = probs[members].sum() / total
                exp += pr * value(active | np.uint64(nb), tuple(members))
            best = min(best, 1.0 + exp)
        memo[key] = best
        return best

    return float(value(np.uint64(0), tuple(range(len(table)))))


def policy_cost(g: ProbGraph, table: RealizationTable, eta: int, policy: str) -> float:
    """Exact expected seed count of a reference policy.

    ``greedy_truncated`` and ``greedy_plain`` are the conditional greedy
    policies with and without truncation; ``optimal`` searches all adaptive
    policies. For lt tables, conditioning on observed cascades via live-pick
    consistency is experimental: replays are exact but the conditional
    distribution of unrevealed picks has had less scrutiny than ic.
    """
    eta = int(eta)
    if not 1 <= eta <= g.n:
        raise ValueError(f"eta must be in 1..n, got {eta}")
    if policy in ("greedy_truncated", "greedy_plain"):
        if g.n > GREEDY_NODE_LIMIT:
            raise ValueError(f"greedy policies support n <= {GREEDY_NODE_LIMIT}")
        counts = _greedy_seed_counts(table, eta, truncated=(policy == "greedy_truncated"))
        return float(table.probs @ counts)
    if policy == "optimal":
        return _optimal_cost(table, eta)
    raise ValueError(f"unknown policy {policy!r}")

"""Cross-checks between the sampling machinery and the exact oracle.

Each check returns a CheckResult instead of asserting, so the same battery
can back both the command-line `oracle-check` report and the test suite.
All randomness is seeded; two invocations with the same arguments produce
the same verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import ProbGraph
from .sampler import SampleSet, draw_root_count, extend
from .selection import (batch_guarantee, compute_params, coverage_lower_bound,
                        coverage_upper_bound, greedy_max_cover, log_comb,
                        select_batch, select_seed)
from .exact import (enumerate_realizations, estimator_mean, expected_spread,
                    expected_truncated, policy_cost)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        tag = "ok  " if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail}"


def fixture_graph() -> ProbGraph:
    """Four-node instance small enough to verify every quantity by hand.

    Node 0 reaches 1 and 2 independently with probability 1/2 each;
    1 and 2 deterministically reach 3.
    """
    return ProbGraph.from_edges(4, [0, 0, 1, 2], [1, 2, 3, 3],
                                [0.5, 0.5, 1.0, 1.0], "ic")


def random_graph(rng, n_lo=2, n_hi=8, m_max=16, model="ic") -> ProbGraph:
    """Small random digraph with edge probabilities in (0, 1]."""
    n = int(rng.integers(n_lo, n_hi + 1))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    m = int(rng.integers(1, min(m_max, len(pairs)) + 1))
    idx = rng.choice(len(pairs), size=m, replace=False)
    src = [pairs[i][0] for i in idx]
    dst = [pairs[i][1] for i in idx]
    p = 1.0 - rng.random(m)  # in (0, 1]
    if model == "lt":
        sums = np.bincount(dst, weights=p, minlength=n)
        p = p / np.maximum(1.0, sums[dst] + 1e-12)
    return ProbGraph.from_edges(n, src, dst, p, model)


# -- individual checks --------------------------------------------------------

def check_fixture_values() -> CheckResult:
    """Closed-form expectations and policy costs on the fixture, exact to 1e-9."""
    g = fixture_graph()
    table = enumerate_realizations(g)
    want = {
        "spread(0)": (expected_spread(g, table, [0]), 2.75),
        "trunc(0,eta2)": (expected_truncated(g, table, [0], 2), 1.75),
        "trunc(1,eta2)": (expected_truncated(g, table, [1], 2), 2.0),
        "trunc(2,eta2)": (expected_truncated(g, table, [2], 2), 2.0),
        "trunc(3,eta2)": (expected_truncated(g, table, [3], 2), 1.0),
        "est(0,eta2)": (estimator_mean(g, table, [0], 2), 1.75),
        "est(1,eta2)": (estimator_mean(g, table, [1], 2), 5.0 / 3.0),
        "est(2,eta2)": (estimator_mean(g, table, [2], 2), 5.0 / 3.0),
        "est(3,eta2)": (estimator_mean(g, table, [3], 2), 1.0),
        "cost(plain)": (policy_cost(g, table, 2, "greedy_plain"), 1.25),
        "cost(truncated)": (policy_cost(g, table, 2, "greedy_truncated"), 1.0),
    }
    bad = [f"{k}: {got:.12f} != {exp:.12f}"
           for k, (got, exp) in want.items() if abs(got - exp) > 1e-9]
    return CheckResult("fixture closed-form values", not bad,
                       "; ".join(bad) if bad else f"{len(want)} quantities match")


def check_sandwich(num_graphs=100, seed=0) -> CheckResult:
    """(1 - 1/e) E[trunc] <= E[estimator] <= E[trunc] on random instances.

    Sweeps every singleton and pair seed set and every target level of
    each graph, exhaustively via the oracle.
    """
    rng = np.random.default_rng(seed)
    lo_factor = 1.0 - 1.0 / math.e
    combos = 0
    violations = []
    for gi in range(num_graphs):
        g = random_graph(rng)
        table = enumerate_realizations(g)
        sets = [[v] for v in range(g.n)]
        sets += [[u, v] for u in range(g.n) for v in range(u + 1, g.n)]
        for seeds in sets:
            for eta in range(1, g.n + 1):
                truth = expected_truncated(g, table, seeds, eta)
                est = estimator_mean(g, table, seeds, eta)
                combos += 1
                if not (lo_factor * truth - 1e-9 <= est <= truth + 1e-9):
                    violations.append(f"graph {gi} S={seeds} eta={eta}: "
                                      f"{lo_factor * truth:.9f} !<= {est:.9f} !<= {truth:.9f}")
    ok = not violations
    detail = (f"{combos} (graph, set, target) combos, 0 violations" if ok
              else f"{len(violations)} violations, first: {violations[0]}")
    return CheckResult("estimator sandwich bounds", ok, detail)


def check_estimator_unbiased(num_samples=100_000, seed=0, tol=0.01) -> CheckResult:
    """Monte-Carlo node frequencies match exact membership probabilities.

    The fraction of multi-root samples containing node v must equal
    E[estimator(v)] / target within `tol` at this sample count.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_at = ""
    cases = [(fixture_graph(), 2)]
    g2 = random_graph(rng, n_lo=8, n_hi=8, m_max=16)
    cases.append((g2, 3))
    for g, eta in cases:
        table = enumerate_realizations(g)
        samples = SampleSet(g.n)
        extend(samples, g, eta, num_samples, np.random.default_rng(seed + 1), g.model)
        freq = samples.coverage / len(samples.sets)
        for v in range(g.n):
            exact = estimator_mean(g, table, [v], eta) / eta
            gap = abs(freq[v] - exact)
            if gap > worst:
                worst, worst_at = gap, f"n={g.n} node {v}"
    return CheckResult("estimator unbiasedness", worst <= tol,
                       f"max |frequency - exact| = {worst:.5f} at {worst_at} "
                       f"(tolerance {tol})")


def check_degeneracies(seed=0) -> CheckResult:
    """Edge-case identities that must hold exactly."""
    bad = []

    # Tail bounds at zero observed coverage.
    if coverage_lower_bound(0, 7.0) != 0.0:
        bad.append("lower bound at 0 coverage not exactly 0")
    if coverage_upper_bound(0, 7.0) != 2 * 7.0:
        bad.append("upper bound at 0 coverage not exactly 2a")

    # Batch guarantee endpoints.
    if batch_guarantee(1) != 1.0:
        bad.append("batch guarantee at b=1 not 1")
    if batch_guarantee(2) != 0.75:
        bad.append("batch guarantee at b=2 not 0.75")
    if abs(batch_guarantee(1000) - (1 - (1 - 1 / 1000.0) ** 1000)) > 1e-12:
        bad.append("batch guarantee formula mismatch at b=1000")

    # log-binomial against exact arithmetic, including a large n.
    for n, b in [(10, 3), (64, 8), (1000, 2), (10**6, 3)]:
        exact = math.log(math.comb(n, b))
        if not math.isclose(log_comb(n, b), exact, rel_tol=1e-9, abs_tol=1e-9):
            bad.append(f"log_comb({n},{b}) off: {log_comb(n, b)} vs {exact}")

    # Root-count draws: exact divisors never randomize.
    rng = np.random.default_rng(seed)
    if any(draw_root_count(4, 2, rng) != 2 for _ in range(1000)):
        bad.append("draw_root_count(4,2) not constant 2")
    if draw_root_count(5, 1, rng) != 5:
        bad.append("draw_root_count(5,1) != 5")
    for eta in (0, 6):
        try:
            draw_root_count(5, eta, rng)
            bad.append(f"draw_root_count accepted target {eta}")
        except ValueError:
            pass

    # Parameter schedule at b=1 equals the single-seed closed form.
    n, target, eps = 100, 10, 0.3
    params = compute_params(n, target, eps)
    eps_i = 99.0 * eps / (100.0 - eps)
    delta = eps / (100.0 * (1 - 1 / math.e) * (1 - eps) * target)
    theta_max = 2.0 * n * (math.sqrt(math.log(6.0 / delta))
                           + math.sqrt(math.log(n) + math.log(6.0 / delta))) ** 2 / eps_i**2
    if params.max_samples != math.ceil(theta_max):
        bad.append(f"b=1 sample cap {params.max_samples} != {math.ceil(theta_max)}")
    if params.batch_factor != 1.0:
        bad.append("b=1 batch factor not 1")

    # Vanilla wiring: target n means every sample has a single root.
    if draw_root_count(7, 7, rng) != 1:
        bad.append("draw_root_count(7,7) != 1")

    # b=1 batch selection must reproduce single selection bit for bit.
    g = fixture_graph()
    a = select_seed(g, 2, 0.2, rng=np.random.default_rng(seed))
    b_ = select_batch(g, 2, 0.2, 1, rng=np.random.default_rng(seed))
    if (a.selected, a.samples_used, a.coverage, a.ratio) != \
       (b_.selected, b_.samples_used, b_.coverage, b_.ratio):
        bad.append("batch size 1 diverges from single-seed selection")

    return CheckResult("degeneracy identities", not bad,
                       "; ".join(bad) if bad else "all identities hold")


def _coverage_of(samples: SampleSet, nodes) -> int:
    return samples.coverage_of_set(nodes)


def check_greedy_ratio(instances=200, seed=0) -> CheckResult:
    """Greedy cover vs brute-force optimum: ratio >= 1 - (1 - 1/b)^b.

    Eight-node universes keep the optimum enumerable over all C(8, b)
    candidate batches.
    """
    from itertools import combinations
    rng = np.random.default_rng(seed)
    worst = 2.0
    fails = 0
    for _ in range(instances):
        n = 8
        num_sets = int(rng.integers(5, 31))
        samples = SampleSet(n)
        for _ in range(num_sets):
            size = int(rng.integers(1, 5))
            nodes = rng.choice(n, size=min(size, n), replace=False)
            samples._add(np.asarray(nodes, dtype=np.int64), 1, 0)
        b = int(rng.integers(2, 4))
        picked, got = greedy_max_cover(samples, b)
        best = max(samples.coverage_of_set(c) for c in combinations(range(n), min(b, n)))
        floor = batch_guarantee(b) * best
        if got + 1e-9 < floor:
            fails += 1
        if best > 0:
            worst = min(worst, got / best)
    return CheckResult("greedy cover guarantee", fails == 0,
                       f"{instances} instances, {fails} below the guarantee, "
                       f"worst ratio {worst:.4f}")


def run_all(num_graphs=100, instances=200, seed=0) -> list[CheckResult]:
    return [
        check_fixture_values(),
        check_sandwich(num_graphs=num_graphs, seed=seed),
        check_estimator_unbiased(seed=seed),
        check_degeneracies(seed=seed),
        check_greedy_ratio(instances=instances, seed=seed),
    ]

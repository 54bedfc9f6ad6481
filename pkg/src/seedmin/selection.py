"""Certified seed selection by sample doubling.

Each round draws multi-root reverse-reachable samples and keeps doubling the
pool until the coverage of the chosen node (or batch) separates a
concentration lower bound from an upper bound tightly enough to certify the
choice, or the iteration cap is hit. The bounds come from a martingale tail
inequality: for an observed coverage lam,

    lower(lam, a) = (sqrt(lam + 2a/9) - sqrt(a/2))^2 - a/18
    upper(lam, a) = (sqrt(lam + a/2) + sqrt(a/2))^2

bracket the true mean coverage with probability controlled by a. The batch
path divides its observed coverage by the greedy max-cover factor
rho(b) = 1 - (1 - 1/b)^b before applying the upper bound, and certifies at
ratio rho(b) * (1 - eps_inner); with b = 1 this degenerates to exactly the
single-selection rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from seedmin.graph import ProbGraph
from seedmin.sampler import SampleSet, extend


@dataclass(frozen=True)
class SelectionParams:
    """Schedule constants for one selection round."""

    n: int
    target: int
    eps: float
    b: int
    fail_prob: float        # per-round failure budget
    eps_inner: float        # certification slack
    batch_factor: float     # rho(b)
    initial_samples: int
    max_samples: int
    max_iterations: int
    lower_tail_weight: float  # a-parameter of the lower bound
    upper_tail_weight: float  # a-parameter of the upper bound


@dataclass(frozen=True)
class IterationRecord:
    t: int
    num_samples: int
    coverage: int
    lower: float
    upper: float
    ratio: float
    stop: str  # "", "certified" or "cap"


@dataclass(frozen=True)
class RoundOutcome:
    """Selection result plus everything needed to audit the stop decision."""

    selected: tuple
    coverage: int
    samples_used: int
    iterations: int
    ratio: float
    stop: str
    detail: tuple
    params: SelectionParams
    total_traversed_edges: int
    size_hist: dict


def batch_guarantee(b: int) -> float:
    """Greedy max-cover approximation factor 1 - (1 - 1/b)^b."""
    if b < 1:
        raise ValueError("batch size must be >= 1")
    return 1.0 - (1.0 - 1.0 / b) ** b


def log_comb(n: int, b: int) -> float:
    """ln of the binomial coefficient, numerically stable for large n."""
    if not 0 <= b <= n:
        raise ValueError(f"need 0 <= b <= n, got b={b}, n={n}")
    b = min(b, n - b)
    if b == 0:
        return 0.0
    if b <= 64:
        return float(sum(math.log(n - b + i) - math.log(i) for i in range(1, b + 1)))
    return math.lgamma(n + 1) - math.lgamma(b + 1) - math.lgamma(n - b + 1)


def coverage_lower_bound(lam: float, a: float) -> float:
    if lam <= 0.0:
        return 0.0
    v = (math.sqrt(lam + 2.0 * a / 9.0) - math.sqrt(a / 2.0)) ** 2 - a / 18.0
    return max(0.0, v)


def coverage_upper_bound(lam: float, a: float) -> float:
    if lam <= 0.0:
        return 2.0 * a
    return (math.sqrt(lam + a / 2.0) + math.sqrt(a / 2.0)) ** 2


def compute_params(n: int, target: int, eps: float, b: int = 1) -> SelectionParams:
    """Sampling schedule for one selection round.

    ``target`` is the residual activation target the round truncates at
    (pass n itself to get plain untruncated single-root sampling). The
    batch formulas reduce exactly to the single-selection ones at b = 1:
    rho(1) = 1 and ln C(n, 1) = ln n.
    """
    if n < 1:
        raise ValueError("graph must be nonempty")
    if not 1 <= target <= n:
        raise ValueError(f"target must be in 1..n, got {target}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if not 1 <= b <= n:
        raise ValueError(f"batch size must be in 1..n, got {b}")

    fail_prob = eps / (100.0 * (1.0 - 1.0 / math.e) * (1.0 - eps) * target)
    if fail_prob >= 1.0:
        raise ValueError(f"failure budget {fail_prob:.3g} >= 1; eps too extreme for this target")
    eps_inner = 99.0 * eps / (100.0 - eps)
    rho = batch_guarantee(b)
    ln6d = math.log(6.0 / fail_prob)
    lc = log_comb(n, b)

    theta_max = 2.0 * n * (math.sqrt(ln6d) + math.sqrt((lc + ln6d) / rho)) ** 2 / (b * eps_inner ** 2)
    theta0 = theta_max * b * eps_inner ** 2 / n
    t_cap = max(1, math.ceil(math.log2(n / (b * eps_inner ** 2))) + 1)
    a1 = math.log(3.0 * t_cap / fail_prob) + lc
    a2 = math.log(3.0 * t_cap / fail_prob)

    return SelectionParams(
        n=n,
        target=target,
        eps=eps,
        b=b,
        fail_prob=fail_prob,
        eps_inner=eps_inner,
        batch_factor=rho,
        initial_samples=max(1, math.ceil(theta0)),
        max_samples=math.ceil(theta_max),
        max_iterations=t_cap,
        lower_tail_weight=a1,
        upper_tail_weight=a2,
    )


def greedy_max_cover(samples: SampleSet, b: int):
    """Greedy b-node max coverage over the sample pool.

    Ties break to the smallest node id; once nothing is left to cover the
    remaining picks are the smallest-id unselected nodes. Returns the picked
    nodes in pick order and the number of samples they cover.
    """
    if b < 1 or b > samples.n:
        raise ValueError(f"batch size must be in 1..{samples.n}, got {b}")
    work = samples.coverage.astype(np.int64, copy=True)
    if b == 1:
        v = int(np.argmax(work))
        return np.asarray([v], dtype=np.int64), int(work[v])
    post = samples.postings()
    sets = samples.sets
    covered_flags = np.zeros(len(sets), dtype=bool)
    covered = 0
    selected = []
    for _ in range(b):
        v = int(np.argmax(work))
        selected.append(v)
        for sid in post[v]:
            if not covered_flags[sid]:
                covered_flags[sid] = True
                covered += 1
                work[sets[sid].nodes] -= 1
        work[v] = -1  # selected nodes never re-picked
    return np.asarray(selected, dtype=np.int64), covered


def _run_selection(g: ProbGraph, target: int, eps: float, b: int, model, rng, pick):
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    params = compute_params(g.n, int(target), eps, b)
    samples = SampleSet(g.n)
    threshold = params.batch_factor * (1.0 - params.eps_inner)
    detail = []
    size = params.initial_samples
    for t in range(1, params.max_iterations + 1):
        extend(samples, g, int(target), size, gen, model)
        selected, lam = pick(samples)
        lower = coverage_lower_bound(lam, params.lower_tail_weight)
        upper = coverage_upper_bound(lam / params.batch_factor, params.upper_tail_weight)
        ratio = lower / upper
        stop = "certified" if ratio >= threshold else ("cap" if t == params.max_iterations else "")
        detail.append(IterationRecord(t, len(samples), int(lam), lower, upper, ratio, stop))
        if stop:
            assert len(samples) <= 2 * params.max_samples
            return RoundOutcome(
                selected=tuple(int(v) for v in selected),
                coverage=int(lam),
                samples_used=len(samples),
                iterations=t,
                ratio=ratio,
                stop=stop,
                detail=tuple(detail),
                params=params,
                total_traversed_edges=samples.total_traversed_edges,
                size_hist=dict(samples.size_hist),
            )
        size *= 2
    raise AssertionError("unreachable: iteration cap must stop the loop")


def select_seed(g: ProbGraph, target: int, eps: float, model: str | None = None, rng=None) -> RoundOutcome:
    """Single-node selection: doubling loop around the coverage argmax."""

    def pick(samples: SampleSet):
        v = int(np.argmax(samples.coverage))
        return (v,), int(samples.coverage[v])

    return _run_selection(g, target, eps, 1, model, rng, pick)


def select_batch(g: ProbGraph, target: int, eps: float, b: int,
                 model: str | None = None, rng=None) -> RoundOutcome:
    """Batch selection: doubling loop around greedy max coverage.

    With b = 1 this makes exactly the same decisions as ``select_seed`` on
    the same RNG stream.
    """
    b = min(int(b), g.n)
    return _run_selection(g, target, eps, b, model, rng,
                          lambda samples: greedy_max_cover(samples, b))

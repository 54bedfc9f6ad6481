"""The adaptive seeding loop.

Every round selects seeds on the residual graph (still-inactive nodes),
observes the true cascade of those seeds under the run's realization,
removes what got activated and shrinks the remaining target accordingly,
stopping as soon as the total activation reaches the target. Two policies
share this skeleton:

- ``adaptive``: selection maximizes the truncated objective, sampling with
  root count n_i / target_i so that effort tracks the shrinking target.
- ``vanilla``: selection maximizes plain expected spread, realized by
  setting the round's truncation target to n_i (single-root samples).

Per-round RNG streams are derived from the run seed and a digest of the
current active set, so a run is a deterministic function of
(seed, realization) and two runs that share a history act identically.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from seedmin.diffusion import Realization, observe_step, sample_many
from seedmin.graph import NodeMap, ProbGraph, induce_residual
from seedmin.selection import RoundOutcome, select_batch, select_seed

POLICIES = ("adaptive", "vanilla")


@dataclass
class ResidualState:
    """Bookkeeping between rounds; all ids are parent-graph ids unless noted."""

    active_mask: np.ndarray
    residual: ProbGraph
    node_map: NodeMap
    eta_remaining: int
    round_index: int
    seeds: tuple

    @property
    def num_active(self) -> int:
        return int(self.active_mask.sum())


@dataclass(frozen=True)
class RoundRecord:
    index: int
    n_residual: int
    target_residual: int
    selected: tuple  # parent ids
    newly_activated: int
    outcome: RoundOutcome


@dataclass(frozen=True)
class RunReport:
    policy: str
    eta: int
    eps: float
    b: int
    seed: int
    seeds: tuple
    final_spread: int
    rounds: tuple
    total_samples: int
    wall_select_s: float
    wall_observe_s: float
    wall_total_s: float


def initial_state(g: ProbGraph, eta: int) -> ResidualState:
    if not 1 <= eta <= g.n:
        raise ValueError(f"eta must be in 1..n, got {eta} (n={g.n})")
    ident = np.arange(g.n, dtype=np.int64)
    return ResidualState(
        active_mask=np.zeros(g.n, dtype=bool),
        residual=g,
        node_map=NodeMap(to_parent=ident, to_residual=ident.copy()),
        eta_remaining=int(eta),
        round_index=0,
        seeds=(),
    )


def _round_rng(seed: int, active_mask: np.ndarray) -> np.random.Generator:
    # keyed by the active set, not the round index: runs sharing a history
    # draw identical streams, which makes a seeded run a deterministic
    # policy (a function of observations alone)
    ids = np.nonzero(active_mask)[0].astype("<i8")
    h = hashlib.blake2b(ids.tobytes(), digest_size=16)
    words = np.frombuffer(h.digest(), dtype="<u8")
    return np.random.default_rng([int(seed), int(words[0]), int(words[1])])


def _run(g: ProbGraph, eta: int, phi: Realization, eps: float, b: int,
         seed: int, truncated: bool, policy: str) -> RunReport:
    eta = int(eta)
    if not 1 <= eta <= g.n:
        raise ValueError(f"eta must be in 1..n, got {eta} (n={g.n})")
    if not (phi.n == g.n and phi.m == g.m):
        raise ValueError("realization does not match graph")
    t_start = time.perf_counter()
    state = initial_state(g, eta)
    records = []
    wall_select = wall_observe = 0.0
    total_samples = 0

    while True:
        n_i = state.residual.n
        target = state.eta_remaining if truncated else n_i
        rng = _round_rng(seed, state.active_mask)
        b_round = min(b, n_i)

        t0 = time.perf_counter()
        if b_round > 1:
            outcome = select_batch(state.residual, target, eps, b_round, g.model, rng)
        else:
            outcome = select_seed(state.residual, target, eps, g.model, rng)
        wall_select += time.perf_counter() - t0

        sel_parent = state.node_map.parent(np.asarray(outcome.selected, dtype=np.int64))
        t0 = time.perf_counter()
        newly = observe_step(g, phi, state, sel_parent)
        wall_observe += time.perf_counter() - t0

        total_samples += outcome.samples_used
        records.append(RoundRecord(
            index=state.round_index,
            n_residual=n_i,
            target_residual=target,
            selected=tuple(int(v) for v in sel_parent),
            newly_activated=int(newly.size),
            outcome=outcome,
        ))

        active = state.active_mask.copy()
        active[newly] = True
        num_active = int(active.sum())
        seeds = state.seeds + tuple(int(v) for v in sel_parent)
        if num_active >= eta:
            # seeds may overshoot the target mid-batch; the batch is never trimmed
            break
        residual, node_map = induce_residual(g, np.nonzero(~active)[0])
        state = ResidualState(
            active_mask=active,
            residual=residual,
            node_map=node_map,
            eta_remaining=eta - num_active,
            round_index=state.round_index + 1,
            seeds=seeds,
        )
        assert state.round_index <= eta, "a round must activate at least its seeds"

    assert len(set(seeds)) == len(seeds)
    return RunReport(
        policy=policy,
        eta=eta,
        eps=eps,
        b=b,
        seed=int(seed),
        seeds=seeds,
        final_spread=num_active,
        rounds=tuple(records),
        total_samples=total_samples,
        wall_select_s=wall_select,
        wall_observe_s=wall_observe,
        wall_total_s=time.perf_counter() - t_start,
    )


def run_adaptive(g: ProbGraph, eta: int, phi: Realization, eps: float = 0.5,
                 b: int = 1, seed: int = 0) -> RunReport:
    """Seed until ``eta`` nodes are active, maximizing the truncated objective."""
    return _run(g, eta, phi, eps, b, seed, truncated=True, policy="adaptive")


def run_vanilla(g: ProbGraph, eta: int, phi: Realization, eps: float = 0.5,
                b: int = 1, seed: int = 0) -> RunReport:
    """Same loop, but each round maximizes plain (untruncated) expected spread."""
    return _run(g, eta, phi, eps, b, seed, truncated=False, policy="vanilla")


_POLICY_FN = {"adaptive": run_adaptive, "vanilla": run_vanilla}


def _run_seed(master_seed: int, policy: str, rid: int) -> int:
    tag = int.from_bytes(hashlib.blake2b(policy.encode(), digest_size=8).digest(), "little")
    return int(np.random.SeedSequence([int(master_seed), tag, int(rid)]).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ExperimentTable:
    eta: int
    eps: float
    b: int
    master_seed: int
    rows: tuple          # one dict per (policy, realization)
    reports: tuple       # matching RunReport objects

    def mean_seeds(self, policy: str) -> float:
        vals = [r["seeds"] for r in self.rows if r["policy"] == policy]
        return float(np.mean(vals))


def _experiment_job(args):
    g, eta, phi, eps, b, seed, policy = args
    return _POLICY_FN[policy](g, eta, phi, eps=eps, b=b, seed=seed)


def run_experiment(g: ProbGraph, eta: int, eps: float = 0.5, b: int = 1,
                   num_realizations: int = 20, policies=POLICIES,
                   master_seed: int = 0, realizations=None,
                   model: str | None = None, threads: int = 1) -> ExperimentTable:
    """Replay every policy over a shared set of pre-drawn realizations.

    Realizations are sampled once up front (or passed in explicitly, e.g.
    a full enumeration) so that policies are compared on identical ground
    truth. Row order and all run seeds depend only on ``master_seed``, the
    policy name and the realization index; ``threads`` spreads runs over
    worker processes without changing any result except wall times.
    """
    for p in policies:
        if p not in _POLICY_FN:
            raise ValueError(f"unknown policy {p!r}; expected one of {POLICIES}")
    if realizations is None:
        realizations = sample_many(g, model, num_realizations, master_seed)
    order = [(policy, rid) for policy in policies for rid in range(len(realizations))]
    jobs = [(g, eta, realizations[rid], eps, b, _run_seed(master_seed, policy, rid), policy)
            for policy, rid in order]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_experiment_job, jobs))
    else:
        results = [_experiment_job(job) for job in jobs]
    rows = []
    for (policy, rid), report in zip(order, results):
        rows.append({
            "policy": policy,
            "realization_id": rid,
            "seeds": len(report.seeds),
            "final_spread": report.final_spread,
            "rounds": len(report.rounds),
            "total_samples": report.total_samples,
            "wall_ms": report.wall_total_s * 1000.0,
        })
    return ExperimentTable(eta=int(eta), eps=eps, b=b, master_seed=int(master_seed),
                           rows=tuple(rows), reports=tuple(results))

"""Multi-root reverse-reachable sampling.

One sample: draw a root count k by randomized rounding of n/target, draw k
distinct roots uniformly, then walk the graph backwards under one fresh
realization. Every node is expanded at most once per sample, so each edge
coin (ic) or in-edge pick (lt) is evaluated at most once and the whole walk
stays consistent with a single realization without materializing it.

A node covers a sample iff it lies in the sample's node set. With target
eta, ``eta * P(v in sample)`` estimates v's truncated spread from below:
it never exceeds the true expected truncated spread and undershoots it by
at most a factor (1 - 1/e).

Two interchangeable walk implementations are used per sample: a plain
Python BFS with buffered uniforms when the root count is small (samples are
tiny, interpreter overhead dominates) and a batched numpy BFS when it is
large. Both draw from the same generator stream, so a run is reproducible
from its seed either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from seedmin.graph import ProbGraph, gather_ranges

# root counts up to this use the scalar walk
_SCALAR_K = 32
_UBUF_SIZE = 65536


@dataclass(frozen=True)
class RRSet:
    """One reverse-reachable sample: unique node ids in discovery order."""

    nodes: np.ndarray
    root_count: int


@dataclass
class SampleSet:
    """A growing pool of samples plus per-node coverage counts."""

    n: int
    sets: list = field(default_factory=list)
    coverage: np.ndarray = None
    total_traversed_edges: int = 0
    size_hist: dict = field(default_factory=dict)
    _postings: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.coverage is None:
            self.coverage = np.zeros(self.n, dtype=np.int64)

    def __len__(self):
        return len(self.sets)

    def _add(self, nodes: np.ndarray, root_count: int, edges: int):
        self.sets.append(RRSet(nodes=nodes, root_count=root_count))
        np.add.at(self.coverage, nodes, 1)
        self.total_traversed_edges += edges
        size = int(nodes.size)
        self.size_hist[size] = self.size_hist.get(size, 0) + 1
        self._postings = None

    def postings(self) -> list:
        """Per-node list of sample indices containing the node (lazy)."""
        if self._postings is None:
            post = [[] for _ in range(self.n)]
            for sid, s in enumerate(self.sets):
                for v in s.nodes.tolist():
                    post[v].append(sid)
            self._postings = post
        return self._postings

    def coverage_of_set(self, nodes) -> int:
        """Number of samples intersecting the given node set."""
        nodes = list(dict.fromkeys(int(v) for v in nodes))
        if not nodes or not self.sets:
            return 0
        post = self.postings()
        hit = set()
        for v in nodes:
            hit.update(post[v])
        return len(hit)


def draw_root_count(n: int, target: int, rng) -> int:
    """Randomized rounding of n/target, so E[k] = n/target exactly."""
    if not 1 <= target <= n:
        raise ValueError(f"target must be in 1..n, got {target} (n={n})")
    k_low, rem = divmod(n, target)
    if rem == 0:
        return k_low
    return k_low + (float(rng.random()) < rem / target)


class _Walker:
    """Reusable per-extend state: stamp arrays, scratch permutation, buffer."""

    def __init__(self, g: ProbGraph, target: int, model: str, rng):
        self.g = g
        self.n = g.n
        self.target = target
        self.model = model
        self.rng = rng
        self.k_low, rem = divmod(g.n, target)
        self.k_frac = rem / target
        self.stamp = 0
        self.scalar_stamps = None
        self.scalar_scratch = None
        self.vec_stamps = None
        self.in_list = None
        self.full = None  # shared node array for k == n samples
        self.ubuf = []
        self.ucur = 0

    def _u(self) -> float:
        # buffered uniforms: one vectorized draw feeds many scalar coins
        if self.ucur >= len(self.ubuf):
            self.ubuf = self.rng.random(_UBUF_SIZE).tolist()
            self.ucur = 0
        v = self.ubuf[self.ucur]
        self.ucur += 1
        return v

    def draw_k(self) -> int:
        if self.k_frac == 0.0:
            return self.k_low
        return self.k_low + (self._u() < self.k_frac)

    def sample(self):
        """One sample: (nodes ndarray, root_count, edges_examined)."""
        k = self.draw_k()
        n = self.n
        if k == n:
            # every node is a root, hence trivially in the sample
            if self.full is None:
                self.full = np.arange(n, dtype=np.int64)
            return self.full, k, 0
        if k <= _SCALAR_K:
            return self._sample_scalar(k)
        return self._sample_vector(k)

    # -- scalar walk -------------------------------------------------------

    def _sample_scalar(self, k: int):
        n = self.n
        if self.scalar_stamps is None:
            self.scalar_stamps = [0] * n
            self.scalar_scratch = list(range(n))
            if self.in_list is None:
                self.in_list = self.g.in_list()
        self.stamp += 1
        stamp = self.stamp
        stamps = self.scalar_stamps
        scratch = self.scalar_scratch
        u = self._u

        # partial Fisher-Yates: k distinct roots in O(k), scratch persists
        for j in range(k):
            t = j + int(u() * (n - j))
            scratch[j], scratch[t] = scratch[t], scratch[j]
        queue = scratch[:k]
        for v in queue:
            stamps[v] = stamp

        in_list = self.in_list
        edges = 0
        qi = 0
        if self.model == "ic":
            while qi < len(queue):
                v = queue[qi]
                qi += 1
                adj = in_list[v]
                edges += len(adj)
                for s, p in adj:
                    if stamps[s] != stamp and u() < p:
                        stamps[s] = stamp
                        queue.append(s)
        else:
            while qi < len(queue):
                v = queue[qi]
                qi += 1
                adj = in_list[v]
                edges += len(adj)
                r = u()
                acc = 0.0
                for s, p in adj:
                    acc += p
                    if r < acc:
                        if stamps[s] != stamp:
                            stamps[s] = stamp
                            queue.append(s)
                        break
        return np.asarray(queue, dtype=np.int64), k, edges

    # -- vectorized walk ----------------------------------------------------

    def _sample_vector(self, k: int):
        g = self.g
        if self.vec_stamps is None:
            self.vec_stamps = np.zeros(self.n, dtype=np.int64)
        self.stamp += 1
        stamp = self.stamp
        stamps = self.vec_stamps
        rng = self.rng

        roots = rng.choice(self.n, size=k, replace=False).astype(np.int64)
        stamps[roots] = stamp
        chunks = [roots]
        frontier = roots
        edges = 0
        while frontier.size:
            starts = g.in_indptr[frontier]
            counts = g.in_indptr[frontier + 1] - starts
            pos = gather_ranges(starts, counts)
            if pos.size == 0:
                break
            edges += pos.size
            if self.model == "ic":
                keep = rng.random(pos.size) < g.in_p[pos]
            else:
                rr = np.repeat(rng.random(frontier.size), counts)
                cum = g.in_cum[pos]
                keep = (rr < cum) & (rr >= cum - g.in_p[pos])
            srcs = g.in_src[pos[keep]]
            srcs = srcs[stamps[srcs] != stamp]
            if srcs.size == 0:
                break
            frontier = np.unique(srcs)
            stamps[frontier] = stamp
            chunks.append(frontier)
        nodes = np.concatenate(chunks) if len(chunks) > 1 else roots
        return nodes, k, int(edges)


def generate_rr_set(g: ProbGraph, target: int, model: str | None = None, rng=None) -> RRSet:
    """One standalone multi-root reverse-reachable sample."""
    if g.n == 0:
        raise ValueError("empty graph")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    w = _Walker(g, int(target), (model or g.model).lower(), gen)
    if not 1 <= int(target) <= g.n:
        raise ValueError(f"target must be in 1..n, got {target} (n={g.n})")
    nodes, k, _ = w.sample()
    return RRSet(nodes=nodes.copy(), root_count=k)


def extend(samples: SampleSet, g: ProbGraph, target: int, new_total: int,
           rng, model: str | None = None) -> SampleSet:
    """Grow the pool to ``new_total`` samples (no-op if already there)."""
    if samples.n != g.n:
        raise ValueError("sample set built for a different graph size")
    if not 1 <= int(target) <= g.n:
        raise ValueError(f"target must be in 1..n, got {target} (n={g.n})")
    need = int(new_total) - len(samples)
    if need <= 0:
        return samples
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    w = _Walker(g, int(target), (model or g.model).lower(), gen)
    for _ in range(need):
        nodes, k, edges = w.sample()
        samples._add(nodes, k, edges)
    return samples

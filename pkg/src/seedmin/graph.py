"""Directed probabilistic graphs in CSR form.

Nodes are dense integers ``0..n-1``. Every directed edge carries a
probability: under the independent-cascade model it is the chance the edge
fires on its own coin, under linear thresholds it is the chance the edge is
chosen as its head's single live in-edge (so a node's in-probabilities must
sum to at most 1).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

MODELS = ("ic", "lt")

# slack for "sums to at most 1" checks; 1/indeg weights sum to 1 exactly
# only up to float rounding
LT_WEIGHT_TOL = 1e-9


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input or inconsistent probabilities."""


@dataclass
class ProbGraph:
    """Immutable directed graph with per-edge probabilities.

    Both adjacency directions are stored as CSR arrays. The canonical edge
    id of an edge is its position in the out-CSR arrays; ``in_eid`` maps an
    in-CSR position back to that id and ``out2in`` is the inverse.
    """

    n: int
    m: int
    model: str
    out_indptr: np.ndarray
    out_dst: np.ndarray
    out_p: np.ndarray
    in_indptr: np.ndarray
    in_src: np.ndarray
    in_p: np.ndarray
    in_eid: np.ndarray
    out2in: np.ndarray
    original_ids: np.ndarray | None = None

    _in_head: np.ndarray | None = field(default=None, repr=False, compare=False)
    _in_cum: np.ndarray | None = field(default=None, repr=False, compare=False)
    _in_list: list | None = field(default=None, repr=False, compare=False)
    _out_list: list | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n, src, dst, p, model, original_ids=None):
        model = model.lower()
        if model not in MODELS:
            raise GraphFormatError(f"unknown model {model!r}, expected one of {MODELS}")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        p = np.asarray(p, dtype=np.float64)
        m = src.size
        if not (dst.size == m and p.size == m):
            raise GraphFormatError("src, dst and p must have equal length")
        if m and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise GraphFormatError("edge endpoint outside 0..n-1")
        if m and (p.min() <= 0.0 or p.max() > 1.0):
            bad = int(np.argmax((p <= 0.0) | (p > 1.0)))
            raise GraphFormatError(f"edge probability {p[bad]} outside (0, 1]")

        order_out = np.argsort(src, kind="stable")
        osrc = src[order_out]
        out_dst = dst[order_out]
        out_p = p[order_out]
        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(osrc, minlength=n), out=out_indptr[1:])

        order_in = np.argsort(out_dst, kind="stable")
        in_src = osrc[order_in]
        in_p = out_p[order_in]
        in_head = out_dst[order_in]
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(in_head, minlength=n), out=in_indptr[1:])
        in_eid = order_in.astype(np.int64)
        out2in = np.empty(m, dtype=np.int64)
        out2in[in_eid] = np.arange(m, dtype=np.int64)

        g = cls(
            n=n,
            m=m,
            model=model,
            out_indptr=out_indptr,
            out_dst=out_dst.astype(np.int64),
            out_p=out_p,
            in_indptr=in_indptr,
            in_src=in_src.astype(np.int64),
            in_p=in_p,
            in_eid=in_eid,
            out2in=out2in,
            original_ids=original_ids,
        )
        if model == "lt":
            g._check_lt_weights()
        return g

    def _check_lt_weights(self):
        if self.m == 0:
            return
        sums = np.bincount(self.in_head, weights=self.in_p, minlength=self.n)
        bad = np.nonzero(sums > 1.0 + LT_WEIGHT_TOL)[0]
        if bad.size:
            v = int(bad[0])
            name = v if self.original_ids is None else int(self.original_ids[v])
            raise GraphFormatError(
                f"node {name}: in-edge probabilities sum to {sums[v]:.12g} > 1 under lt"
            )

    # -- convenience views ------------------------------------------------

    def out_edges(self, u):
        """List of (target, prob) pairs for node u."""
        s, e = self.out_indptr[u], self.out_indptr[u + 1]
        return list(zip(self.out_dst[s:e].tolist(), self.out_p[s:e].tolist()))

    def in_edges(self, v):
        """List of (source, prob) pairs for node v."""
        s, e = self.in_indptr[v], self.in_indptr[v + 1]
        return list(zip(self.in_src[s:e].tolist(), self.in_p[s:e].tolist()))

    @property
    def in_head(self):
        """Head node of each in-CSR position (cached)."""
        if self._in_head is None:
            self._in_head = np.repeat(
                np.arange(self.n, dtype=np.int64), np.diff(self.in_indptr)
            )
        return self._in_head

    @property
    def in_cum(self):
        """Within-segment inclusive cumulative in-probabilities (cached).

        Used to draw a node's single live in-edge under lt: edge at in-CSR
        position j is picked by uniform r iff in_cum[j]-in_p[j] <= r < in_cum[j].
        """
        if self._in_cum is None:
            if self.m == 0:
                self._in_cum = np.zeros(0, dtype=np.float64)
            else:
                cum = np.cumsum(self.in_p)
                seg_start = np.repeat(
                    np.concatenate(([0.0], cum))[self.in_indptr[:-1]],
                    np.diff(self.in_indptr),
                )
                self._in_cum = cum - seg_start
        return self._in_cum

    def in_list(self):
        """Python adjacency [(src, p), ...] per node, for scalar BFS paths."""
        if self._in_list is None:
            self._in_list = [
                list(zip(self.in_src[s:e].tolist(), self.in_p[s:e].tolist()))
                for s, e in zip(self.in_indptr[:-1], self.in_indptr[1:])
            ]
        return self._in_list

    def out_list(self):
        if self._out_list is None:
            self._out_list = [
                list(zip(self.out_dst[s:e].tolist(), self.out_p[s:e].tolist()))
                for s, e in zip(self.out_indptr[:-1], self.out_indptr[1:])
            ]
        return self._out_list

    def edge_triples(self):
        """All (src, dst, p) triples in canonical edge-id order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.out_indptr))
        return src, self.out_dst.copy(), self.out_p.copy()


@dataclass
class NodeMap:
    """Relabeling between a residual subgraph and its parent graph.

    ``to_parent[r]`` is the parent id of residual node r; ``to_residual``
    holds -1 for parent nodes absent from the residual.
    """

    to_parent: np.ndarray
    to_residual: np.ndarray

    def parent(self, residual_ids):
        return self.to_parent[np.asarray(residual_ids, dtype=np.int64)]

    def residual(self, parent_ids):
        out = self.to_residual[np.asarray(parent_ids, dtype=np.int64)]
        if out.size and out.min() < 0:
            raise KeyError("parent id not present in residual graph")
        return out


def induce_residual(g: ProbGraph, inactive) -> tuple[ProbGraph, NodeMap]:
    """Subgraph induced by the still-inactive nodes, with the id relabeling.

    Keeps an edge iff both endpoints are inactive. Residual ids follow the
    sorted order of the surviving parent ids, so relabeling is deterministic.
    """
    keep = np.unique(np.asarray(inactive, dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.n):
        raise ValueError("inactive node id outside parent graph")
    to_residual = np.full(g.n, -1, dtype=np.int64)
    to_residual[keep] = np.arange(keep.size, dtype=np.int64)

    src, dst, p = g.edge_triples()
    mask = (to_residual[src] >= 0) & (to_residual[dst] >= 0) if g.m else np.zeros(0, dtype=bool)
    sub = ProbGraph.from_edges(
        keep.size,
        to_residual[src[mask]],
        to_residual[dst[mask]],
        p[mask],
        g.model,
        original_ids=None if g.original_ids is None else g.original_ids[keep],
    )
    return sub, NodeMap(to_parent=keep, to_residual=to_residual)


def load_edge_list(source, model="ic", weighting="inv_indeg", undirected=False,
                   dense_ids=False) -> ProbGraph:
    """Parse a whitespace-separated edge list into a ProbGraph.

    Lines are ``u v`` or ``u v p``; blank lines and ``#`` comments are
    skipped. ``weighting="explicit"`` requires the third column, while
    ``weighting="inv_indeg"`` assigns each edge 1/indegree(head) (any third
    column is ignored). With ``undirected=True`` every input edge is expanded
    into both directions before weights are derived.

    Input ids may be sparse; by default distinct ids are compacted to
    ``0..n-1`` in sorted order and the original ids are kept on the returned
    graph as ``original_ids``. With ``dense_ids=True`` ids are taken at face
    value and ``n = max_id + 1``, retaining isolated nodes implied by gaps.
    """
    weighting = weighting.replace("-", "_").lower()
    if weighting not in ("explicit", "inv_indeg"):
        raise GraphFormatError(f"unknown weighting {weighting!r}")

    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        fh = open(source, "r", encoding="utf-8")
        close = True
    else:
        fh = source
        close = False

    us, vs, ps = [], [], []
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"line {lineno}: expected 'u v' or 'u v p', got {line!r}")
            try:
                u = int(parts[0])
                v = int(parts[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: node ids must be integers, got {line!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"line {lineno}: node ids must be non-negative")
            if weighting == "explicit":
                if len(parts) != 3:
                    raise GraphFormatError(f"line {lineno}: explicit weighting requires 'u v p'")
                try:
                    w = float(parts[2])
                except ValueError:
                    raise GraphFormatError(f"line {lineno}: bad probability {parts[2]!r}") from None
                if not (0.0 < w <= 1.0):
                    raise GraphFormatError(f"line {lineno}: probability {w} outside (0, 1]")
            else:
                w = np.nan  # filled in below
            us.append(u)
            vs.append(v)
            ps.append(w)
    finally:
        if close:
            fh.close()

    src = np.asarray(us, dtype=np.int64)
    dst = np.asarray(vs, dtype=np.int64)
    p = np.asarray(ps, dtype=np.float64)
    if undirected and src.size:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        p = np.concatenate([p, p])

    original_ids = None
    if src.size == 0:
        n = 0
    elif dense_ids:
        n = int(max(src.max(), dst.max())) + 1
    else:
        uniq = np.unique(np.concatenate([src, dst]))
        n = uniq.size
        lookup = {int(orig): i for i, orig in enumerate(uniq)}
        src = np.fromiter((lookup[int(x)] for x in src), dtype=np.int64, count=src.size)
        dst = np.fromiter((lookup[int(x)] for x in dst), dtype=np.int64, count=dst.size)
        if not np.array_equal(uniq, np.arange(n)):
            original_ids = uniq

    if weighting == "inv_indeg" and src.size:
        indeg = np.bincount(dst, minlength=n)  # duplicates count
        p = 1.0 / indeg[dst]

    return ProbGraph.from_edges(n, src, dst, p, model, original_ids=original_ids)


def gather_ranges(starts, counts):
    """Concatenation of arange(start, start+count) per pair, vectorized.

    The CSR workhorse: gathering all adjacency positions of a frontier in one
    shot instead of slicing per node.
    """
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.cumsum(counts)
    within = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    return np.repeat(starts, counts) + within


def check_adjacency_consistent(g: ProbGraph) -> bool:
    """True iff out- and in-CSR describe the same edge multiset (test hook)."""
    src, dst, p = g.edge_triples()
    fwd = sorted(zip(src.tolist(), dst.tolist(), p.tolist()))
    bwd = sorted(zip(g.in_src.tolist(), g.in_head.tolist(), g.in_p.tolist()))
    if fwd != bwd:
        return False
    # cross maps must be mutually inverse and preserve the edge identity
    if not np.array_equal(g.in_eid[g.out2in], np.arange(g.m)):
        return False
    eid_src = src[g.in_eid]
    eid_dst = dst[g.in_eid]
    return np.array_equal(eid_src, g.in_src) and np.array_equal(eid_dst, g.in_head)

"""Live-edge realizations and cascades.

A realization fixes all the randomness of one diffusion outcome: under the
independent-cascade model a live/blocked bit per edge, under linear
thresholds a single live in-edge pick (or none) per node. Cascades are then
deterministic forward closures over live edges, which is what makes
round-by-round replay of the same realization consistent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from seedmin.graph import ProbGraph, gather_ranges

_MAGIC = b"RLZ1"
_MODEL_CODE = {"ic": 0, "lt": 1}
_MODEL_NAME = {v: k for k, v in _MODEL_CODE.items()}


@dataclass
class Realization:
    """One materialized diffusion outcome for a specific graph.

    ``live`` is indexed by canonical edge id (ic); ``pick`` holds the chosen
    in-CSR position per node, -1 for no live in-edge (lt). ``seed`` is
    metadata recording the RNG seed the realization was drawn from (0 when
    constructed by hand), kept so serialized runs are replayable.
    """

    model: str
    n: int
    m: int
    live: np.ndarray | None = None
    pick: np.ndarray | None = None
    seed: int = 0
    _live_out: np.ndarray | None = field(default=None, repr=False, compare=False)

    def live_out(self, g: ProbGraph) -> np.ndarray:
        """Live mask over canonical edge ids, derived once for lt."""
        if not (g.n == self.n and g.m == self.m):
            raise ValueError("realization does not match graph dimensions")
        if self.model == "ic":
            return self.live
        if self._live_out is None:
            live = np.zeros(self.m, dtype=bool)
            sel = self.pick[self.pick >= 0]
            live[g.in_eid[sel]] = True
            self._live_out = live
        return self._live_out


@dataclass(frozen=True)
class CascadeResult:
    activated: np.ndarray  # sorted node ids

    @property
    def spread(self) -> int:
        return int(self.activated.size)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_realization(g: ProbGraph, model: str | None = None, rng=None) -> Realization:
    """Draw a fresh realization of every edge coin / in-edge pick."""
    model = (model or g.model).lower()
    gen = _as_rng(rng)
    if model == "ic":
        live = gen.random(g.m) < g.out_p
        return Realization(model="ic", n=g.n, m=g.m, live=live)
    if model == "lt":
        pick = np.full(g.n, -1, dtype=np.int64)
        if g.m:
            r = np.repeat(gen.random(g.n), np.diff(g.in_indptr))
            cum = g.in_cum
            chosen = np.nonzero((r < cum) & (r >= cum - g.in_p))[0]
            pick[g.in_head[chosen]] = chosen
        return Realization(model="lt", n=g.n, m=g.m, pick=pick)
    raise ValueError(f"unknown model {model!r}")


def sample_many(g: ProbGraph, model: str | None, count: int, master_seed: int) -> list[Realization]:
    """Independent realizations with recorded per-realization seeds."""
    child = np.random.SeedSequence(master_seed).generate_state(count, dtype=np.uint64)
    out = []
    for s in child:
        phi = sample_realization(g, model, np.random.default_rng(int(s)))
        phi.seed = int(s)
        out.append(phi)
    return out


def _closure(g: ProbGraph, live, seeds, already_active=None) -> np.ndarray:
    """Forward closure of seeds over live edges, skipping already-active nodes.

    Returns the sorted array of nodes newly reached (seeds included).
    """
    seeds = np.unique(np.asarray(list(seeds) if not isinstance(seeds, np.ndarray) else seeds,
                                 dtype=np.int64))
    if seeds.size == 0:
        return seeds
    if seeds[0] < 0 or seeds[-1] >= g.n:
        raise ValueError("seed node outside graph")
    reached = np.zeros(g.n, dtype=bool)
    reached[seeds] = True
    frontier = seeds
    while frontier.size:
        starts = g.out_indptr[frontier]
        counts = g.out_indptr[frontier + 1] - starts
        eids = gather_ranges(starts, counts)
        if eids.size == 0:
            break
        eids = eids[live[eids]]
        targets = g.out_dst[eids]
        mask = ~reached[targets]
        if already_active is not None:
            mask &= ~already_active[targets]
        frontier = np.unique(targets[mask])
        reached[frontier] = True
    return np.nonzero(reached)[0]


def cascade(g: ProbGraph, phi: Realization, seeds) -> CascadeResult:
    """Nodes activated by seeding ``seeds`` under realization ``phi``."""
    return CascadeResult(activated=_closure(g, phi.live_out(g), seeds))


def truncated_spread(g: ProbGraph, phi: Realization, seeds, eta: int) -> int:
    """Cascade spread capped at the activation target."""
    return min(cascade(g, phi, seeds).spread, int(eta))


def observe_step(g: ProbGraph, phi: Realization, state, new_seed_set) -> np.ndarray:
    """Reveal one adaptive round: cascade the new seeds among inactive nodes.

    ``state`` is anything exposing a boolean ``active_mask`` over parent ids
    (or the mask itself). Seeding an already-active node is a contract
    violation. Returns the sorted parent ids newly activated this round.
    For lt, a node whose live pick points at a previously activated source
    stays inactive: only sources activated from this round on can fire it.
    """
    active = state.active_mask if hasattr(state, "active_mask") else np.asarray(state, dtype=bool)
    seeds = np.unique(np.asarray(list(new_seed_set), dtype=np.int64))
    if seeds.size == 0:
        raise ValueError("empty seed set for observe_step")
    if seeds[0] < 0 or seeds[-1] >= g.n:
        raise ValueError("seed node outside graph")
    if active[seeds].any():
        bad = seeds[active[seeds]][0]
        raise ValueError(f"node {int(bad)} is already active")
    return _closure(g, phi.live_out(g), seeds, already_active=active)


def save_realization(phi: Realization, path) -> None:
    """Compact binary dump: header (model, n, m, seed) + status payload."""
    header = struct.pack("<4sBQQQ", _MAGIC, _MODEL_CODE[phi.model], phi.n, phi.m, phi.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        if phi.model == "ic":
            fh.write(np.packbits(phi.live.astype(np.uint8)).tobytes())
        else:
            fh.write(phi.pick.astype("<i8").tobytes())


def load_realization(path) -> Realization:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sBQQQ"))
        magic, code, n, m, seed = struct.unpack("<4sBQQQ", header)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a realization file")
        model = _MODEL_NAME[code]
        payload = fh.read()
    if model == "ic":
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=m)
        return Realization(model="ic", n=n, m=m, live=bits.astype(bool), seed=seed)
    pick = np.frombuffer(payload, dtype="<i8").astype(np.int64)
    if pick.size != n:
        raise ValueError(f"{path}: payload length mismatch")
    return Realization(model="lt", n=n, m=m, pick=pick, seed=seed)

"""
Influencer seed selection: highest degree (HD), k-core (KC), degree
discount (DD), CoreHD (CHD) and uniform random, plus seed dispersion.

All ties are broken by a random node ranking drawn from ``tie_seed``, so
every selector is a pure function of its arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .graph import Graph, bfs_distances, core_decomposition


class SeedMethod(str, Enum):
    HD = "HD"
    KC = "KC"
    DD = "DD"
    CHD = "CHD"
    RANDOM = "RANDOM"
    GA = "GA"


HEURISTICS = (SeedMethod.HD, SeedMethod.KC, SeedMethod.DD, SeedMethod.CHD)


@dataclass(frozen=True)
class SeedSet:
    method: SeedMethod
    nodes: tuple[int, ...]
    budget_fraction: float

    def __post_init__(self):
        object.__setattr__(self, "method", SeedMethod(self.method))
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        if len(self.nodes) == 0:
            raise ValueError("seed set is empty")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("seed set contains duplicates")

    def __len__(self):
        return len(self.nodes)

    def validate(self, g: Graph) -> None:
        if min(self.nodes) < 0 or max(self.nodes) >= g.node_count:
            raise ValueError("seed id out of range")

    def to_json(self, g: Graph | None = None) -> dict:
        nodes = [g.label(v) for v in self.nodes] if g is not None else list(self.nodes)
        return {"method": self.method.value, "budget_fraction": self.budget_fraction,
                "nodes": nodes}

    @classmethod
    def from_json(cls, data: dict, label_to_id: dict[str, int] | None = None) -> "SeedSet":
        nodes = data["nodes"]
        if label_to_id is not None:
            nodes = [label_to_id[str(v)] for v in nodes]
        return cls(data["method"], tuple(nodes), float(data["budget_fraction"]))


def budget_size(fraction: float, n: int) -> int:
    """Seed count for a budget fraction: round-half-up, at least one."""
    if not 0 < fraction <= 1:
        raise ValueError(f"budget fraction must lie in (0, 1], got {fraction}")
    return max(1, int(np.floor(fraction * n + 0.5)))


def _check_k(g: Graph, k: int) -> None:
    if not 1 <= k <= g.node_count:
        raise ValueError(f"k must lie in [1, {g.node_count}], got {k}")


def tie_ranks(n: int, tie_seed: int) -> np.ndarray:
    """Random priority per node; lower rank wins a tie."""
    rank = np.empty(n, dtype=np.int64)
    rank[np.random.default_rng(tie_seed).permutation(n)] = np.arange(n)
    return rank


def _make(method, nodes, g) -> SeedSet:
    return SeedSet(method, tuple(int(v) for v in nodes), len(nodes) / g.node_count)


def _top_k(keys: list[np.ndarray], k: int) -> np.ndarray:
    # np.lexsort sorts by the last key first
    return np.lexsort(keys[::-1])[:k]


def select_hd(g: Graph, k: int, tie_seed: int = 0) -> SeedSet:
    _check_k(g, k)
    rank = tie_ranks(g.node_count, tie_seed)
    return _make(SeedMethod.HD, _top_k([-g.degrees, rank], k), g)


def select_kc(g: Graph, k: int, tie_seed: int = 0) -> SeedSet:
    _check_k(g, k)
    rank = tie_ranks(g.node_count, tie_seed)
    core = core_decomposition(g)
    return _make(SeedMethod.KC, _top_k([-core, -g.degrees, rank], k), g)


def _argmax_tie(score: np.ndarray, rank: np.ndarray, allowed: np.ndarray) -> int:
    s = np.where(allowed, score, -np.inf)
    best = np.flatnonzero(s == s.max())
    return int(best[np.argmin(rank[best])])


def select_dd(g: Graph, k: int, p: float, tie_seed: int = 0) -> SeedSet:
    """Degree discount: dd_v = d_v - 2 t_v - (d_v - t_v) t_v p, greedily."""
    _check_k(g, k)
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rank = tie_ranks(g.node_count, tie_seed)
    d = g.degrees.astype(float)
    t = np.zeros(g.node_count)
    dd = d.copy()
    free = np.ones(g.node_count, dtype=bool)
    chosen = []
    for _ in range(k):
        u = _argmax_tie(dd, rank, free)
        chosen.append(u)
        free[u] = False
        nb = g.neighbors(u)
        nb = nb[free[nb]]
        t[nb] += 1
        dd[nb] = d[nb] - 2 * t[nb] - (d[nb] - t[nb]) * t[nb] * p
    return _make(SeedMethod.DD, chosen, g)


def _prune_to_two_core(g: Graph, alive: np.ndarray, deg: np.ndarray, stack: list[int]) -> None:
    while stack:
        v = stack.pop()
        if not alive[v]:
            continue
        alive[v] = False
        for u in g.neighbors(v):
            if alive[u]:
                deg[u] -= 1
                if deg[u] < 2:
                    stack.append(int(u))


def select_chd(g: Graph, k: int, tie_seed: int = 0) -> SeedSet:
    """CoreHD with a budget: repeatedly take the highest-degree node of the
    current 2-core; once the 2-core is empty, fill up by residual degree."""
    _check_k(g, k)
    n = g.node_count
    rank = tie_ranks(n, tie_seed)
    in_core = np.ones(n, dtype=bool)
    core_deg = g.degrees.copy()
    _prune_to_two_core(g, in_core, core_deg, [int(v) for v in np.flatnonzero(core_deg < 2)])
    removed = np.zeros(n, dtype=bool)
    chosen = []
    while len(chosen) < k and in_core.any():
        u = _argmax_tie(core_deg.astype(float), rank, in_core)
        chosen.append(u)
        removed[u] = True
        in_core[u] = False
        stack = []
        for w in g.neighbors(u):
            if in_core[w]:
                core_deg[w] -= 1
                if core_deg[w] < 2:
                    stack.append(int(w))
        _prune_to_two_core(g, in_core, core_deg, stack)
    if len(chosen) < k:
        src = np.repeat(np.arange(n), g.degrees)
        live = ~removed[g.indices]
        resid = np.bincount(src[live], minlength=n)
        candidates = np.flatnonzero(~removed)
        order = np.lexsort((rank[candidates], -resid[candidates]))
        chosen.extend(int(v) for v in candidates[order[:k - len(chosen)]])
    return _make(SeedMethod.CHD, chosen, g)


def select_random(g: Graph, k: int, rng_seed: int = 0) -> SeedSet:
    _check_k(g, k)
    nodes = np.random.default_rng(rng_seed).choice(g.node_count, size=k, replace=False)
    return _make(SeedMethod.RANDOM, nodes, g)


def select(method: SeedMethod | str, g: Graph, k: int, p: float | None = None,
           tie_seed: int = 0) -> SeedSet:
    method = SeedMethod(method)
    if method is SeedMethod.HD:
        return select_hd(g, k, tie_seed)
    if method is SeedMethod.KC:
        return select_kc(g, k, tie_seed)
    if method is SeedMethod.DD:
        if p is None:
            raise ValueError("DD needs a propagation probability")
        return select_dd(g, k, p, tie_seed)
    if method is SeedMethod.CHD:
        return select_chd(g, k, tie_seed)
    if method is SeedMethod.RANDOM:
        return select_random(g, k, tie_seed)
    raise ValueError(f"no selector for {method.value}")


@dataclass
class Dispersion:
    mean_distance: float
    reachable: int
    unreachable: int


def seed_dispersion(g: Graph, seeds: SeedSet | Sequence[int]) -> Dispersion:
    """Mean multi-source hop distance from the seeds over reachable nodes."""
    nodes = getattr(seeds, "nodes", seeds)
    dist = bfs_distances(g, nodes)
    finite = np.isfinite(dist)
    return Dispersion(float(dist[finite].mean()), int(finite.sum()), int((~finite).sum()))


def dump_seed_sets(sets: Sequence[SeedSet], g: Graph, stream) -> None:
    json.dump([s.to_json(g) for s in sets], stream, indent=2)


def load_seed_sets(stream, label_to_id: dict[str, int] | None = None) -> list[SeedSet]:
    data = json.load(stream)
    if isinstance(data, dict):
        data = [data]
    return [SeedSet.from_json(d, label_to_id) for d in data]

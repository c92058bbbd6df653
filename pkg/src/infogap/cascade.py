"""
Independent Cascade Model simulation.

Cascades run in synchronous rounds: nodes activated at step ``t`` each get a
single attempt on every still-inactive neighbor, and successes are stamped
with activation time ``t + 1``. Seeds are active at ``t = 0``.

Every realization draws from its own splitmix64 stream whose 64-bit seed is
derived from ``(master seed, stream key, realization index)``. Realizations
are grouped into fixed-size chunks (depending only on ``M``) and the chunk
partials are reduced in chunk order, so ensemble statistics are identical
for any number of worker threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numba
import numpy as np
from numba import njit, prange
from numba.core.errors import NumbaWarning

from .graph import Graph

# an outdated system TBB only means numba falls back to another threading layer
warnings.filterwarnings("ignore", message="The TBB threading layer", category=NumbaWarning)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def _uniform(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return np.float64(z >> _S11) * _INV53


@njit(inline="always")
def _randint(state, n):
    return min(np.int64(_uniform(state) * n), n - 1)


@njit(cache=True)
def _one_cascade(indptr, indices, seeds, n_random, p, state, time, order):
    """Run one cascade; fills ``time`` for activated nodes and lists them in
    ``order`` (activation order). Returns the cascade size. ``time`` must be
    all -1 on entry."""
    n = len(indptr) - 1
    size = 0
    if n_random > 0:
        while size < n_random:
            v = _randint(state, n)
            if time[v] < 0:
                time[v] = 0
                order[size] = v
                size += 1
    else:
        for s in seeds:
            if time[s] < 0:
                time[s] = 0
                order[size] = s
                size += 1
    if p <= 0.0:
        return size
    lo = 0
    hi = size
    t = 0
    while lo < hi:
        for idx in range(lo, hi):
            v = order[idx]
            for e in range(indptr[v], indptr[v + 1]):
                u = indices[e]
                if time[u] < 0 and _uniform(state) < p:
                    time[u] = t + 1
                    order[size] = u
                    size += 1
        lo = hi
        hi = size
        t += 1
    return size


@njit(parallel=True, cache=True)
def _ensemble_kernel(indptr, indices, seeds, n_random, p, rseeds, chunk,
                     hits, recency, sizes, times, record):
    n = len(indptr) - 1
    m = len(rseeds)
    nchunks = hits.shape[0]
    for c in prange(nchunks):
        time = np.full(n, -1, dtype=np.int32)
        order = np.empty(n, dtype=np.int64)
        state = np.zeros(1, dtype=np.uint64)
        start = c * chunk
        stop = min(m, start + chunk)
        for r in range(start, stop):
            state[0] = rseeds[r]
            size = _one_cascade(indptr, indices, seeds, n_random, p, state, time, order)
            sizes[r] = size
            for j in range(size):
                v = order[j]
                hits[c, v] += 1
                recency[c, v] += 1.0 / (time[v] + 1.0)
                if record:
                    times[r, v] = time[v]
                time[v] = -1


def _chunk_size(m: int) -> int:
    return max(64, -(-m // 64))


def realization_seeds(master_seed: int, stream: Sequence[int], count: int,
                      offset: int = 0) -> np.ndarray:
    """64-bit seeds for realizations ``offset .. offset+count-1`` of a stream."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(s) for s in stream))
    gen = np.random.default_rng(ss)
    words = gen.integers(0, 2 ** 63, size=offset + count, dtype=np.int64, endpoint=False)
    return words[offset:].astype(np.uint64)


@dataclass
class SimulationConfig:
    p: float
    realizations: int
    rng_seed: int = 0
    record_times: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")


@dataclass
class CascadeTrace:
    activated: np.ndarray
    activation_time: np.ndarray  # -1 where not activated
    seeds: np.ndarray

    @property
    def cascade_size(self) -> int:
        return int(self.activated.sum())

    def check_causality(self, g: Graph) -> None:
        t = self.activation_time
        if np.any(t[self.seeds] != 0):
            raise AssertionError("seed without activation time 0")
        for v in np.flatnonzero(self.activated):
            if t[v] == 0:
                continue
            nb = g.neighbors(v)
            if not np.any((t[nb] >= 0) & (t[nb] == t[v] - 1)):
                raise AssertionError(f"node {v} activated without an earlier neighbor")


@dataclass
class Ensemble:
    """Accumulated results of ``realizations`` cascades on one graph.

    ``hits[i]`` counts realizations reaching node i and ``recency_sum[i]``
    sums ``1/(t+1)`` over them; ``times`` (M x N, -1 = unreached) is only
    kept when requested.
    """

    node_count: int
    realizations: int
    hits: np.ndarray
    recency_sum: np.ndarray
    sizes: np.ndarray
    times: np.ndarray | None = None
    seeds: np.ndarray | None = field(default=None, repr=False)

    @property
    def mean_size(self) -> float:
        return float(self.sizes.mean())

    @property
    def size_stderr(self) -> float:
        if self.realizations < 2:
            return 0.0
        return float(self.sizes.std(ddof=1) / np.sqrt(self.realizations))

    def traces(self) -> Iterator[CascadeTrace]:
        if self.times is None:
            raise ValueError("ensemble was simulated without record_times")
        seeds = self.seeds if self.seeds is not None else np.empty(0, np.int64)
        for row in self.times:
            yield CascadeTrace(row >= 0, row.astype(np.int64), seeds)

    def merge(self, other: "Ensemble") -> "Ensemble":
        if other.node_count != self.node_count:
            raise ValueError("node counts differ")
        times = None
        if self.times is not None and other.times is not None:
            times = np.vstack([self.times, other.times])
        return Ensemble(self.node_count, self.realizations + other.realizations,
                        self.hits + other.hits, self.recency_sum + other.recency_sum,
                        np.concatenate([self.sizes, other.sizes]), times, self.seeds)


def _seed_array(g: Graph, seeds) -> np.ndarray:
    nodes = getattr(seeds, "nodes", seeds)
    arr = np.asarray(list(nodes), dtype=np.int64)
    if len(arr) == 0:
        raise ValueError("seed set is empty")
    if arr.min() < 0 or arr.max() >= g.node_count:
        raise ValueError("seed id out of range")
    return arr


def _simulate(g: Graph, seeds: np.ndarray, n_random: int, p: float, rseeds: np.ndarray,
              record: bool, workers: int | None) -> Ensemble:
    n = g.node_count
    m = len(rseeds)
    chunk = _chunk_size(m)
    nchunks = -(-m // chunk)
    hits = np.zeros((nchunks, n), dtype=np.int64)
    recency = np.zeros((nchunks, n), dtype=np.float64)
    sizes = np.zeros(m, dtype=np.int64)
    times = np.full((m, n) if record else (1, 1), -1, dtype=np.int32)
    prev = numba.get_num_threads()
    if workers is not None:
        numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
    try:
        _ensemble_kernel(g.indptr, g.indices, seeds, n_random, float(p), rseeds, chunk,
                         hits, recency, sizes, times, record)
    finally:
        numba.set_num_threads(prev)
    return Ensemble(n, m, hits.sum(axis=0), recency.sum(axis=0), sizes,
                    times if record else None, seeds if n_random == 0 else None)


def batch_simulate(g: Graph, seeds, config: SimulationConfig, stream: Sequence[int] = (),
                   workers: int | None = None) -> Ensemble:
    """``config.realizations`` independent cascades from a fixed seed set."""
    arr = _seed_array(g, seeds)
    rseeds = realization_seeds(config.rng_seed, stream, config.realizations)
    return _simulate(g, arr, 0, config.p, rseeds, config.record_times, workers)


def batch_simulate_random(g: Graph, k: int, config: SimulationConfig,
                          stream: Sequence[int] = (), workers: int | None = None) -> Ensemble:
    """Cascades where every realization draws a fresh uniform k-subset of seeds."""
    if not 1 <= k <= g.node_count:
        raise ValueError(f"k must lie in [1, {g.node_count}]")
    rseeds = realization_seeds(config.rng_seed, stream, config.realizations)
    return _simulate(g, np.empty(0, np.int64), int(k), config.p, rseeds,
                     config.record_times, workers)


def _to_seed_word(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2 ** 63))
    return int(rng)


def run_cascade(g: Graph, seeds, p: float, rng=0) -> CascadeTrace:
    """A single realization. ``rng`` is an integer master seed or a Generator."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    arr = _seed_array(g, seeds)
    rseeds = realization_seeds(_to_seed_word(rng), (), 1)
    ens = _simulate(g, arr, 0, p, rseeds, True, None)
    row = ens.times[0]
    return CascadeTrace(row >= 0, row.astype(np.int64), np.unique(arr))


# ---------------------------------------------------------------------------
# critical probability

def molloy_reed_threshold(g: Graph) -> float:
    """Bond-percolation threshold <k> / (<k^2> - <k>) of the degree sequence."""
    d = g.degrees.astype(float)
    k1, k2 = d.mean(), (d ** 2).mean()
    if k2 - k1 <= 0:
        raise ValueError("degree sequence has no percolation threshold")
    return float(k1 / (k2 - k1))


def default_p_grid(g: Graph, points: int = 40, low: float = 0.2, high: float = 5.0) -> np.ndarray:
    pc = molloy_reed_threshold(g)
    grid = np.geomspace(low * pc, high * pc, points)
    return np.unique(np.clip(grid, 1e-9, 1.0))


@dataclass
class CriticalPointResult:
    p_c: float
    p_grid: np.ndarray
    susceptibility: np.ndarray
    mean_size: np.ndarray
    runs_per_p: int


def outbreak_sizes(g: Graph, p: float, runs: int, rng_seed: int = 0,
                   stream: Sequence[int] = (), workers: int | None = None) -> np.ndarray:
    """Sizes of ``runs`` cascades each started from one uniformly random node."""
    ens = batch_simulate_random(g, 1, SimulationConfig(p, runs, rng_seed), stream, workers)
    return ens.sizes


def susceptibility(sizes: np.ndarray) -> float:
    s = np.asarray(sizes, dtype=float)
    return float((s ** 2).mean() / s.mean() ** 2)


def estimate_critical_p(g: Graph, p_grid: Sequence[float] | None = None, runs_per_p: int = 2000,
                        rng_seed: int = 0, workers: int | None = None) -> CriticalPointResult:
    """Grid point maximizing <s^2>/<s>^2 of single-spreader outbreak sizes."""
    if g.node_count < 2:
        raise ValueError("graph needs at least 2 nodes")
    grid = default_p_grid(g) if p_grid is None else np.asarray(p_grid, dtype=float)
    if len(grid) < 3:
        raise ValueError("p_grid needs at least 3 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("p_grid must be strictly ascending")
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError("p_grid values must lie in [0, 1]")
    if runs_per_p < 1:
        raise ValueError("runs_per_p must be >= 1")
    chi = np.empty(len(grid))
    mean = np.empty(len(grid))
    for i, p in enumerate(grid):
        s = outbreak_sizes(g, p, runs_per_p, rng_seed, (i,), workers)
        chi[i] = susceptibility(s)
        mean[i] = s.mean()
    return CriticalPointResult(float(grid[int(np.argmax(chi))]), grid, chi, mean, runs_per_p)


def write_traces_csv(ens: Ensemble, stream, labels=None) -> None:
    if ens.times is None:
        raise ValueError("ensemble was simulated without record_times")
    stream.write("realization,node,activated,activation_time\n")
    for r, row in enumerate(ens.times):
        for v, t in enumerate(row):
            name = labels[v] if labels is not None else v
            stream.write(f"{r},{name},{int(t >= 0)},{t if t >= 0 else ''}\n")

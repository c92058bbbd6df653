"""
Two-objective genetic search over seed sets: expected cascade size vs. the
number of non-vulnerable nodes.

Fitness estimates use common random numbers: every individual is simulated
with the same per-realization streams, so an individual's fitness is a fixed
function of its node set ("frozen" evaluation). This keeps the Pareto archive
monotone and makes comparisons between sets less noisy.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cascade import SimulationConfig, _simulate, realization_seeds
from .graph import Graph
from .metrics import NodeInformationStats, compute_stats, fair_count
from .seeds import HEURISTICS, SeedMethod, SeedSet, select

log = logging.getLogger(__name__)

# stream keys for the frozen evaluation streams
FITNESS_STREAM = 101
TABU_STREAM = 102
FINAL_STREAM = 103
NUMERIC_STREAM = 104


@dataclass
class GAConfig:
    population_size: int = 100
    generations: int = 100
    crossover_prob: float = 0.8
    mutation_prob: float = 1.0
    tabu_mutation_freq: float = 0.4
    random_mutation_replace_frac: float = 0.1
    tabu_neighborhood_frac: float = 0.2
    fitness_samples: int = 100
    tabu_samples: int = 20
    final_samples: int = 1000
    selection: str = "crowding"  # or "reference"
    reference_divisions: int = 12
    fairness_measure: str = "nu"  # "nu", "tau" or "both"
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_prob", "mutation_prob", "tabu_mutation_freq",
                     "random_mutation_replace_frac", "tabu_neighborhood_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("fitness_samples", "tabu_samples", "final_samples", "reference_divisions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.selection not in ("crowding", "reference"):
            raise ValueError(f"unknown selection mode {self.selection!r}")
        if self.fairness_measure not in ("nu", "tau", "both"):
            raise ValueError(f"unknown fairness measure {self.fairness_measure!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ParetoCandidate:
    seeds: SeedSet
    fitness_spread: float
    fitness_fair: float
    eval_samples: int

    @property
    def fitness(self) -> tuple[float, float]:
        return (self.fitness_spread, self.fitness_fair)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.seeds.nodes))


@dataclass
class ParetoFront:
    candidates: list[ParetoCandidate]
    heuristics: list[ParetoCandidate] = field(default_factory=list)
    hypervolume_history: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Maximization: a is >= b everywhere and > somewhere."""
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def non_dominated_sort(objectives) -> list[list[int]]:
    """Fast non-dominated sorting (maximization). Returns fronts of indices."""
    f = np.asarray(objectives, dtype=float)
    n = len(f)
    if n == 0:
        return []
    ge = np.all(f[:, None, :] >= f[None, :, :], axis=2)
    gt = np.any(f[:, None, :] > f[None, :, :], axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    fronts = []
    current = [int(i) for i in np.flatnonzero(counts == 0)]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(objectives) -> np.ndarray:
    f = np.asarray(objectives, dtype=float)
    n = len(f)
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for m in range(f.shape[1]):
        order = np.argsort(f[:, m], kind="stable")
        span = f[order[-1], m] - f[order[0], m]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span == 0:
            continue
        dist[order[1:-1]] += (f[order[2:], m] - f[order[:-2], m]) / span
    return dist


def _reference_directions(divisions: int) -> np.ndarray:
    w = np.arange(divisions + 1) / divisions
    return np.column_stack([w, 1 - w])


def reference_point_select(objectives, fronts: list[list[int]], mu: int, divisions: int,
                           rng: np.random.Generator) -> list[int]:
    """NSGA-III style niching for the last partially admitted front (two
    objectives, range normalization)."""
    chosen: list[int] = []
    last = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
        else:
            last = front
            break
    if len(chosen) == mu or not last:
        return chosen
    f = -np.asarray(objectives, dtype=float)  # minimize
    pool = chosen + last
    lo = f[pool].min(axis=0)
    span = f[pool].max(axis=0) - lo
    span[span == 0] = 1.0
    z = (f - lo) / span
    refs = _reference_directions(divisions)
    unit = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    proj = z @ unit.T
    perp = np.sqrt(np.maximum((z ** 2).sum(axis=1)[:, None] - proj ** 2, 0.0))
    assoc = perp.argmin(axis=1)
    dist = perp[np.arange(len(z)), assoc]
    niche = np.bincount(assoc[chosen], minlength=len(refs)) if chosen else np.zeros(len(refs), int)
    remaining = list(last)
    active = np.ones(len(refs), dtype=bool)
    while len(chosen) < mu:
        cand_counts = np.where(active, niche, np.iinfo(np.int64).max)
        jmin = np.flatnonzero(cand_counts == cand_counts.min())
        j = int(rng.choice(jmin))
        members = [i for i in remaining if assoc[i] == j]
        if not members:
            active[j] = False
            continue
        if niche[j] == 0:
            pick = min(members, key=lambda i: dist[i])
        else:
            pick = int(rng.choice(members))
        chosen.append(pick)
        remaining.remove(pick)
        niche[j] += 1
    return chosen


def hypervolume(points, reference=(0.0, 0.0)) -> float:
    """Area dominated by a 2-D point set relative to ``reference`` (maximization)."""
    pts = [p for p in map(tuple, np.asarray(points, dtype=float).reshape(-1, 2))
           if p[0] > reference[0] and p[1] > reference[1]]
    pts.sort(key=lambda p: (-p[0], -p[1]))
    area = 0.0
    best_y = reference[1]
    for x, y in pts:
        if y > best_y:
            area += (x - reference[0]) * (y - best_y)
            best_y = y
    return area


# ---------------------------------------------------------------------------
# fitness

class FitnessEvaluator:
    """Frozen Monte-Carlo fitness: same realization streams for every set."""

    def __init__(self, g: Graph, p: float, benchmark: NodeInformationStats, rng_seed: int = 0,
                 measure: str = "nu", workers: int | None = None):
        if benchmark.node_count != g.node_count:
            raise ValueError("benchmark does not match graph")
        self.g = g
        self.p = p
        self.benchmark = benchmark
        self.rng_seed = rng_seed
        self.measure = measure
        self.workers = workers
        self._seed_cache: dict[tuple[int, int], np.ndarray] = {}
        self._cache: dict[tuple, tuple[float, int]] = {}
        self.evaluations = 0

    def _rseeds(self, stream: int, samples: int) -> np.ndarray:
        key = (stream, samples)
        if key not in self._seed_cache:
            self._seed_cache[key] = realization_seeds(self.rng_seed, (stream, samples), samples)
        return self._seed_cache[key]

    def __call__(self, nodes: Sequence[int], samples: int,
                 stream: int = FITNESS_STREAM) -> tuple[float, int]:
        if samples < 1:
            raise ValueError("samples must be >= 1")
        key = (tuple(sorted(int(v) for v in nodes)), samples, stream)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        ens = _simulate(self.g, np.asarray(key[0], dtype=np.int64), 0, self.p,
                        self._rseeds(stream, samples), False, self.workers)
        result = (ens.mean_size, fair_count(compute_stats(ens), self.benchmark, self.measure))
        self._cache[key] = result
        self.evaluations += 1
        return result


def evaluate_fitness(g: Graph, seeds: SeedSet | Sequence[int], p: float,
                     benchmark: NodeInformationStats, samples: int, rng: int = 0,
                     measure: str = "nu") -> tuple[float, int]:
    """(mean cascade size, non-vulnerable node count) from ``samples`` cascades."""
    nodes = getattr(seeds, "nodes", seeds)
    return FitnessEvaluator(g, p, benchmark, rng, measure)(nodes, samples)


# ---------------------------------------------------------------------------
# variation operators

def _ga_set(nodes, n: int) -> SeedSet:
    nodes = sorted(int(v) for v in nodes)
    return SeedSet(SeedMethod.GA, tuple(nodes), len(nodes) / n)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def crossover(a: SeedSet, b: SeedSet, rng: np.random.Generator) -> tuple[SeedSet, SeedSet]:
    """Both children are independent uniform k-subsets of the parents' union."""
    k = len(a)
    if len(b) != k:
        raise ValueError("parents must have equal size")
    union = np.array(sorted(set(a.nodes) | set(b.nodes)))
    n = round(k / a.budget_fraction)
    return (_ga_set(rng.choice(union, k, replace=False), n),
            _ga_set(rng.choice(union, k, replace=False), n))


def _non_members(g: Graph, members, rng: np.random.Generator, count: int) -> np.ndarray:
    mask = np.ones(g.node_count, dtype=bool)
    mask[list(members)] = False
    pool = np.flatnonzero(mask)
    return rng.choice(pool, min(count, len(pool)), replace=False)


def mutate_random(s: SeedSet, replace_frac: float, g: Graph,
                  rng: np.random.Generator) -> SeedSet:
    k = len(s)
    r = min(_round_half_up(replace_frac * k), k, g.node_count - k)
    if r == 0:
        return _ga_set(s.nodes, g.node_count)
    drop = set(rng.choice(np.array(s.nodes), r, replace=False).tolist())
    keep = [v for v in s.nodes if v not in drop]
    add = _non_members(g, s.nodes, rng, r)
    return _ga_set(keep + add.tolist(), g.node_count)


def mutate_tabu(s: SeedSet, neighborhood_frac: float, g: Graph,
                fitness: Callable[[Sequence[int]], int] | FitnessEvaluator,
                samples: int, rng: np.random.Generator) -> SeedSet:
    """Drop one random seed, then add the screened non-member whose set has
    the most non-vulnerable nodes (fewest vulnerable)."""
    nodes = list(s.nodes)
    drop = nodes.pop(int(rng.integers(len(nodes))))
    size = max(1, _round_half_up(neighborhood_frac * g.node_count))
    candidates = _non_members(g, nodes, rng, size)
    scores = np.empty(len(candidates))
    for i, c in enumerate(candidates):
        if isinstance(fitness, FitnessEvaluator):
            scores[i] = fitness(nodes + [int(c)], samples, TABU_STREAM)[1]
        else:
            scores[i] = fitness(nodes + [int(c)])
    best = np.flatnonzero(scores == scores.max())
    pick = int(candidates[rng.choice(best)])
    log.debug("tabu: dropped %d, added %d", drop, pick)
    return _ga_set(nodes + [pick], g.node_count)


# ---------------------------------------------------------------------------
# optimizer

def _ranks_and_crowding(objs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fronts = non_dominated_sort(objs)
    rank = np.empty(len(objs), dtype=np.int64)
    crowd = np.empty(len(objs))
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(objs[front])
    return rank, crowd


def _tournament(rank, crowd, rng) -> int:
    i, j = rng.integers(len(rank), size=2)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    if crowd[i] != crowd[j]:
        return int(i if crowd[i] > crowd[j] else j)
    return int(i if rng.random() < 0.5 else j)


def _environmental_selection(objs: np.ndarray, mu: int, config: GAConfig,
                             rng: np.random.Generator) -> list[int]:
    fronts = non_dominated_sort(objs)
    if config.selection == "reference":
        return reference_point_select(objs, fronts, mu, config.reference_divisions, rng)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
            continue
        crowd = crowding_distance(objs[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(front[i] for i in order[:mu - len(chosen)])
        break
    return chosen


def _non_dominated(cands: list[ParetoCandidate]) -> list[ParetoCandidate]:
    unique: dict[tuple, ParetoCandidate] = {}
    for c in cands:
        unique.setdefault(c.key, c)
    cands = list(unique.values())
    if not cands:
        return []
    objs = np.array([c.fitness for c in cands])
    front = non_dominated_sort(objs)[0]
    return sorted((cands[i] for i in front), key=lambda c: (-c.fitness_spread, c.key))


def heuristic_population(g: Graph, k: int, p: float, tie_seed: int = 0) -> list[SeedSet]:
    return [select(m, g, k, p=p, tie_seed=tie_seed) for m in HEURISTICS]


def optimize(g: Graph, p: float, k: int, config: GAConfig, benchmark: NodeInformationStats,
             initial: Sequence[SeedSet] | None = None, workers: int | None = None,
             progress: Callable[[int, float], None] | None = None) -> ParetoFront:
    """Run the GA and return the re-evaluated non-dominated set.

    ``initial`` defaults to the HD/KC/DD/CHD sets; the rest of the population
    is uniformly random. The returned front is taken over the archive of all
    evaluated sets plus the initial heuristic sets, re-scored with
    ``config.final_samples`` realizations.
    """
    if not 1 <= k < g.node_count:
        raise ValueError(f"k must lie in [1, {g.node_count - 1}]")
    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed, spawn_key=(7,)))
    fit = FitnessEvaluator(g, p, benchmark, config.rng_seed, config.fairness_measure, workers)
    n = g.node_count
    mu = config.population_size

    seeds_init = list(initial) if initial is not None else heuristic_population(g, k, p, config.rng_seed)
    seeds_init = seeds_init[:mu]
    for s in seeds_init:
        if len(s) != k:
            raise ValueError("initial seed sets must all have size k")
        s.validate(g)
    population = [_ga_set(s.nodes, n) for s in seeds_init]
    while len(population) < mu:
        population.append(_ga_set(rng.choice(n, k, replace=False), n))

    def score(pop):
        return [ParetoCandidate(s, *fit(s.nodes, config.fitness_samples),
                                config.fitness_samples) for s in pop]

    cands = score(population)
    archive = _non_dominated(cands)
    history = [hypervolume([c.fitness for c in archive])]

    for gen in range(config.generations):
        objs = np.array([c.fitness for c in cands])
        rank, crowd = _ranks_and_crowding(objs)
        offspring: list[SeedSet] = []
        while len(offspring) < mu:
            a = cands[_tournament(rank, crowd, rng)].seeds
            b = cands[_tournament(rank, crowd, rng)].seeds
            if rng.random() < config.crossover_prob:
                a, b = crossover(a, b, rng)
            offspring.extend([a, b])
        offspring = offspring[:mu]
        for i, child in enumerate(offspring):
            if rng.random() < config.mutation_prob:
                if rng.random() < config.tabu_mutation_freq:
                    offspring[i] = mutate_tabu(child, config.tabu_neighborhood_frac, g, fit,
                                               config.tabu_samples, rng)
                else:
                    offspring[i] = mutate_random(child, config.random_mutation_replace_frac, g, rng)
        combined = cands + score(offspring)
        objs = np.array([c.fitness for c in combined])
        cands = [combined[i] for i in _environmental_selection(objs, mu, config, rng)]
        archive = _non_dominated(archive + cands)
        history.append(hypervolume([c.fitness for c in archive]))
        log.info("generation %d: archive %d, hypervolume %.1f", gen + 1, len(archive), history[-1])
        if progress is not None:
            progress(gen + 1, history[-1])

    def final(s: SeedSet) -> ParetoCandidate:
        return ParetoCandidate(s, *fit(s.nodes, config.final_samples, FINAL_STREAM),
                               config.final_samples)

    heur = [final(s) for s in seeds_init]
    pool = [final(c.seeds) for c in archive]
    # heuristics first so duplicates keep their provenance
    front = _non_dominated(heur + pool)
    return ParetoFront(front, heur, history)


@dataclass
class NumericalEvaluation:
    seeds: SeedSet
    spread_mean: float
    spread_sd: float
    fair_mean: float
    fair_sd: float
    eval_samples: int

    def to_json(self, g: Graph | None = None) -> dict:
        nodes = [g.label(v) for v in self.seeds.nodes] if g is not None else list(self.seeds.nodes)
        return {"nodes": nodes, "method": self.seeds.method.value,
                "spread_mean": self.spread_mean, "spread_sd": self.spread_sd,
                "fair_mean": self.fair_mean, "fair_sd": self.fair_sd,
                "eval_samples": self.eval_samples}


def evaluate_front_numerically(g: Graph, front: ParetoFront | Sequence[SeedSet | ParetoCandidate],
                               p: float, M: int, benchmark: NodeInformationStats,
                               rng_seed: int = 0, repeats: int = 10, measure: str = "nu",
                               workers: int | None = None) -> list[NumericalEvaluation]:
    """Mean and sd of both objectives over ``repeats`` independent ensembles of M cascades."""
    items = front.candidates if isinstance(front, ParetoFront) else list(front)
    out = []
    for item in items:
        s = item.seeds if isinstance(item, ParetoCandidate) else item
        spreads, fairs = [], []
        for r in range(repeats):
            cfg = SimulationConfig(p, M, rng_seed)
            rseeds = realization_seeds(cfg.rng_seed, (NUMERIC_STREAM, r), M)
            ens = _simulate(g, np.asarray(s.nodes, dtype=np.int64), 0, p, rseeds, False, workers)
            spreads.append(ens.mean_size)
            fairs.append(fair_count(compute_stats(ens), benchmark, measure))
        sd = (lambda x: float(np.std(x, ddof=1)) if repeats > 1 else 0.0)
        out.append(NumericalEvaluation(s, float(np.mean(spreads)), sd(spreads),
                                       float(np.mean(fairs)), sd(fairs), M * repeats))
    return out

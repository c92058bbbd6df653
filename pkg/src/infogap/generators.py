"""Configuration-model generators for scale-free and normal degree sequences."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .graph import Graph


class GenerationError(RuntimeError):
    pass


class DegreeModel(str, Enum):
    SCALE_FREE = "scale_free"
    NORMAL_DEGREE = "normal_degree"


@dataclass(frozen=True)
class GeneratorConfig:
    model: DegreeModel = DegreeModel.SCALE_FREE
    node_count: int = 10_000
    gamma: float = 2.5
    mean_degree: float = 10.0
    degree_stddev: float = 2.0
    min_degree: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", DegreeModel(self.model))
        if self.node_count < 2:
            raise ValueError("node_count must be at least 2")
        if self.min_degree < 1:
            raise ValueError("min_degree must be >= 1")
        if self.model is DegreeModel.SCALE_FREE and not self.gamma > 1:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if self.model is DegreeModel.NORMAL_DEGREE:
            if self.mean_degree < self.min_degree:
                raise ValueError("mean_degree must be >= min_degree")
            if self.degree_stddev < 0:
                raise ValueError("degree_stddev must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.value
        return d


MAX_PARITY_ATTEMPTS = 1000


def structural_cutoff(n: int) -> int:
    return int(np.floor(np.sqrt(n)))


def powerlaw_pmf(gamma: float, kmin: int, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of P(k) ~ k^-gamma on [kmin, kmax]."""
    k = np.arange(kmin, kmax + 1)
    w = k.astype(float) ** -gamma
    return k, w / w.sum()


def sample_degrees(config: GeneratorConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.node_count
    if config.model is DegreeModel.SCALE_FREE:
        kmax = min(structural_cutoff(n), n - 1)
        if kmax < config.min_degree:
            raise GenerationError(
                f"empty degree support: min_degree={config.min_degree} > cutoff {kmax}")
        support, prob = powerlaw_pmf(config.gamma, config.min_degree, kmax)

        def draw(size):
            return rng.choice(support, size=size, p=prob)
    else:
        if config.min_degree > n - 1:
            raise GenerationError("min_degree exceeds n-1")

        def draw(size):
            x = np.rint(rng.normal(config.mean_degree, config.degree_stddev, size=size))
            return np.clip(x, config.min_degree, n - 1).astype(np.int64)

    deg = draw(n).astype(np.int64)
    # fix parity by redrawing single entries
    for _ in range(MAX_PARITY_ATTEMPTS):
        if deg.sum() % 2 == 0:
            return deg
        deg[rng.integers(n)] = draw(1)[0]
    raise GenerationError("could not draw an even-sum degree sequence")


def configuration_model(degrees: np.ndarray, rng: np.random.Generator) -> Graph:
    """Random stub matching followed by self-loop and multi-edge erasure."""
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.sum() % 2:
        raise GenerationError("degree sum must be even")
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    rng.shuffle(stubs)
    return Graph.from_edges(len(degrees), stubs.reshape(-1, 2))


def generate(config: GeneratorConfig) -> Graph:
    rng = np.random.default_rng(config.rng_seed)
    return configuration_model(sample_degrees(config, rng), rng)


def degree_stats(g: Graph) -> dict:
    d = g.degrees.astype(float)
    return {
        "node_count": g.node_count,
        "edge_count": g.edge_count,
        "mean_degree": float(d.mean()),
        "second_moment": float((d ** 2).mean()),
        "max_degree": int(d.max()),
        "min_degree": int(d.min()),
        "isolated_nodes": int((d == 0).sum()),
    }

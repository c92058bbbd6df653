"""Per-node information frequency/recency and comparisons to random seeding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .cascade import CascadeTrace, Ensemble


@dataclass
class NodeInformationStats:
    """``nu``: fraction of realizations reaching each node; ``tau``: mean of
    1/(t+1) with unreached realizations contributing 0."""

    nu: np.ndarray
    tau: np.ndarray
    realizations: int

    @property
    def node_count(self) -> int:
        return len(self.nu)


def compute_stats(traces: Ensemble | Iterable[CascadeTrace]) -> NodeInformationStats:
    if isinstance(traces, Ensemble):
        m = traces.realizations
        return NodeInformationStats(traces.hits / m, traces.recency_sum / m, m)
    hits = None
    rec = None
    m = 0
    for tr in traces:
        t = np.asarray(tr.activation_time)
        a = np.asarray(tr.activated, dtype=bool)
        if hits is None:
            hits = np.zeros(len(a), dtype=np.int64)
            rec = np.zeros(len(a))
        hits += a
        rec[a] += 1.0 / (t[a] + 1.0)
        m += 1
    if m == 0:
        raise ValueError("need at least one realization")
    return NodeInformationStats(hits / m, rec / m, m)


@dataclass
class EffectiveStats:
    """Ratios against the benchmark. ``nan`` marks nodes whose benchmark value
    is zero; those are never flagged vulnerable."""

    eff_nu: np.ndarray
    eff_tau: np.ndarray

    @property
    def undefined_nu(self) -> np.ndarray:
        return np.isnan(self.eff_nu)

    @property
    def undefined_tau(self) -> np.ndarray:
        return np.isnan(self.eff_tau)

    @property
    def vulnerable_nu(self) -> np.ndarray:
        return ~self.undefined_nu & (np.nan_to_num(self.eff_nu, nan=1.0) < 1)

    @property
    def vulnerable_tau(self) -> np.ndarray:
        return ~self.undefined_tau & (np.nan_to_num(self.eff_tau, nan=1.0) < 1)

    def vulnerable_fraction(self, measure: str = "nu") -> float:
        flags = getattr(self, f"vulnerable_{measure}")
        defined = ~getattr(self, f"undefined_{measure}")
        return float(flags.sum() / defined.sum()) if defined.any() else float("nan")


def _ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.full(len(a), np.nan)
    ok = b > 0
    out[ok] = a[ok] / b[ok]
    return out


def compute_effective(method: NodeInformationStats,
                      benchmark: NodeInformationStats) -> EffectiveStats:
    if method.node_count != benchmark.node_count:
        raise ValueError("method and benchmark cover different node counts")
    return EffectiveStats(_ratio(method.nu, benchmark.nu), _ratio(method.tau, benchmark.tau))


def worse_off_in_n(effective: Sequence[EffectiveStats]) -> dict[str, np.ndarray]:
    """Fraction of nodes vulnerable in exactly n of the methods, n = 0..len.

    Nodes with an undefined ratio under any method are left out of the
    denominator for that measure.
    """
    if not effective:
        raise ValueError("need at least one method")
    out = {}
    for measure in ("nu", "tau"):
        flags = np.array([getattr(e, f"vulnerable_{measure}") for e in effective])
        undefined = np.array([getattr(e, f"undefined_{measure}") for e in effective]).any(axis=0)
        counts = flags[:, ~undefined].sum(axis=0)
        hist = np.bincount(counts, minlength=len(effective) + 1).astype(float)
        total = hist.sum()
        out[measure] = hist / total if total else hist
    return out


def cumulative_distribution(values) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF evaluated at each distinct value: (x, P(v <= x))."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty input")
    x, counts = np.unique(v, return_counts=True)
    return x, np.cumsum(counts) / v.size


def fair_count(method: NodeInformationStats, benchmark: NodeInformationStats,
               measure: str = "nu") -> int:
    """Number of non-vulnerable nodes (ratio >= 1, benchmark-zero nodes excluded).

    ``measure`` is ``nu``, ``tau`` or ``both`` (non-vulnerable in both).
    """
    eff = compute_effective(method, benchmark)
    if measure == "both":
        ok = (~eff.undefined_nu & ~eff.vulnerable_nu) & (~eff.undefined_tau & ~eff.vulnerable_tau)
    else:
        ok = ~getattr(eff, f"undefined_{measure}") & ~getattr(eff, f"vulnerable_{measure}")
    return int(ok.sum())

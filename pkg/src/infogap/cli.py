"""
Command line entry point.

    infogap generate --gen-n 10000 --gen-gamma 2.5 --out runs/sf
    infogap critical-p --graph runs/sf/graph.edges --out runs/sf
    infogap vulnerability --graph village.txt --auto-p --out runs/village
    infogap optimize --graph village.txt --p 0.069 --out runs/village-ga
    infogap seed-report --graph village.txt --front runs/village-ga/front.json

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (SimulationConfig, batch_simulate, batch_simulate_random,
                      default_p_grid, estimate_critical_p)
from .config import ConfigError, RunConfig, from_pairs, parse_pairs, serialize
from .fairmax import evaluate_front_numerically, optimize
from .generators import GenerationError, degree_stats, generate
from .graph import Graph, GraphError, giant_component, load_edge_list, write_edge_list, write_label_map
from .metrics import compute_effective, compute_stats, cumulative_distribution, worse_off_in_n
from .seeds import SeedMethod, SeedSet, budget_size, seed_dispersion, select, select_random

log = logging.getLogger("infogap")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3

# first element of every stream key, one per command
STREAM_VULNERABILITY = 2
STREAM_OPTIMIZE = 3
BENCHMARK_INDEX = 99
METHOD_INDEX = {m: i for i, m in enumerate(SeedMethod)}


class DataError(RuntimeError):
    pass


class Outputs:
    """Collects output files in memory and writes them atomically with a manifest."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def add_csv(self, name: str, header, rows) -> None:
        buf = _StringWriter()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.add(name, buf.getvalue())

    def add_json(self, name: str, data) -> None:
        self.add(name, json.dumps(data, indent=2, default=_json_default) + "\n")

    def commit(self) -> list[Path]:
        self.dir.mkdir(parents=True, exist_ok=True)
        manifest = {"files": sorted(self.files), "version": __version__}
        self.files["manifest.json"] = json.dumps(manifest, indent=2) + "\n"
        written = []
        for name, text in self.files.items():
            target = self.dir / name
            fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, target)
            written.append(target)
        return written


class _StringWriter:
    def __init__(self):
        self.parts = []

    def write(self, s):
        self.parts.append(s)

    def getvalue(self):
        return "".join(self.parts)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def _fmt(x: float) -> str:
    return "nan" if np.isnan(x) else f"{x:.10g}"


# ---------------------------------------------------------------------------
# shared steps

def load_graph(config: RunConfig) -> tuple[Graph, dict]:
    if config.graph is not None:
        try:
            with open(config.graph, encoding="utf-8") as fh:
                g, report = load_edge_list(fh)
        except OSError as exc:
            raise DataError(f"cannot read graph: {exc}") from None
        info = {"source": config.graph, "duplicate_edges": report.duplicate_edges,
                "self_loops": report.self_loops}
    else:
        g = generate(config.generator)
        info = {"source": "generator", "generator": config.generator.to_dict()}
    if config.giant_component:
        g = giant_component(g)
        info["giant_component"] = True
    info.update(degree_stats(g))
    return g, info


def resolve_p(g: Graph, config: RunConfig, out: Outputs | None = None) -> float:
    if config.p is not None:
        return config.p
    res = estimate_critical_p(g, default_p_grid(g, config.grid_points), config.runs_per_p,
                              config.seed, config.workers)
    if out is not None:
        out.add_csv("susceptibility.csv", ["p", "susceptibility", "mean_size"],
                    [(_fmt(p), _fmt(c), _fmt(s)) for p, c, s in
                     zip(res.p_grid, res.susceptibility, res.mean_size)])
    log.info("estimated p_c = %.5f", res.p_c)
    return res.p_c


def _realizations(g: Graph, config: RunConfig) -> int:
    return config.realizations if config.realizations is not None else 10 * g.node_count


def benchmark_stats(g: Graph, k: int, p: float, M: int, config: RunConfig, command: int):
    sim = SimulationConfig(p, M, config.seed)
    stream = (command, BENCHMARK_INDEX)
    if config.benchmark_mode == "fixed":
        fixed = select_random(g, k, config.seed)
        return compute_stats(batch_simulate(g, fixed, sim, stream, config.workers))
    return compute_stats(batch_simulate_random(g, k, sim, stream, config.workers))


def _selector_p(config: RunConfig, p: float) -> float:
    return config.dd_p if config.dd_p is not None else p


# ---------------------------------------------------------------------------
# commands

def cmd_generate(config: RunConfig) -> Outputs:
    if config.generator is None:
        raise ConfigError("generate needs generator settings (--gen-*)")
    g = generate(config.generator)
    out = Outputs(config.out)
    buf = _StringWriter()
    write_edge_list(g, buf, use_labels=False)
    out.add("graph.edges", buf.getvalue())
    out.add_json("provenance.json", {"generator": config.generator.to_dict(),
                                     "degree_stats": degree_stats(g)})
    return out


def cmd_critical_p(config: RunConfig) -> Outputs:
    g, info = load_graph(config)
    res = estimate_critical_p(g, default_p_grid(g, config.grid_points), config.runs_per_p,
                              config.seed, config.workers)
    out = Outputs(config.out)
    out.add_csv("susceptibility.csv", ["p", "susceptibility", "mean_size"],
                [(_fmt(p), _fmt(c), _fmt(s)) for p, c, s in
                 zip(res.p_grid, res.susceptibility, res.mean_size)])
    out.add_json("critical_p.json", {"p_c": res.p_c, "runs_per_p": res.runs_per_p,
                                     "grid_min": res.p_grid[0], "grid_max": res.p_grid[-1],
                                     "graph": info})
    return out


def cmd_vulnerability(config: RunConfig) -> Outputs:
    g, info = load_graph(config)
    out = Outputs(config.out)
    p = resolve_p(g, config, out)
    k = budget_size(config.budget, g.node_count)
    M = _realizations(g, config)
    bench = benchmark_stats(g, k, p, M, config, STREAM_VULNERABILITY)
    _add_label_map(out, g)
    _write_cdfs(out, "benchmark", bench.nu, bench.tau)

    effective, seed_sets, summary = [], [], {}
    for name in config.methods:
        method = SeedMethod(name)
        if method is SeedMethod.GA:
            raise ConfigError("GA is not a seeding heuristic; use the optimize command")
        sim = SimulationConfig(p, M, config.seed)
        stream = (STREAM_VULNERABILITY, METHOD_INDEX[method])
        if method is SeedMethod.RANDOM and config.benchmark_mode == "resample":
            # random seeding as a process, on its own stream
            stats = compute_stats(batch_simulate_random(g, k, sim, stream, config.workers))
        else:
            seeds = select(method, g, k, p=_selector_p(config, p), tie_seed=config.seed)
            seed_sets.append(seeds)
            stats = compute_stats(batch_simulate(g, seeds, sim, stream, config.workers))
        eff = compute_effective(stats, bench)
        effective.append(eff)
        out.add_csv(f"stats_{name}.csv",
                    ["label", "nu", "tau", "eff_nu", "eff_tau", "vulnerable_nu", "vulnerable_tau"],
                    [(g.label(i), _fmt(stats.nu[i]), _fmt(stats.tau[i]), _fmt(eff.eff_nu[i]),
                      _fmt(eff.eff_tau[i]), int(eff.vulnerable_nu[i]), int(eff.vulnerable_tau[i]))
                     for i in range(g.node_count)])
        _write_cdfs(out, name, stats.nu, stats.tau)
        summary[name] = {"vulnerable_fraction_nu": eff.vulnerable_fraction("nu"),
                         "vulnerable_fraction_tau": eff.vulnerable_fraction("tau"),
                         "undefined_nu": int(eff.undefined_nu.sum()),
                         "undefined_tau": int(eff.undefined_tau.sum())}
    hist = worse_off_in_n(effective)
    out.add_csv("worse_off.csv", ["n", "fraction_nu", "fraction_tau"],
                [(n, _fmt(a), _fmt(b)) for n, (a, b) in enumerate(zip(hist["nu"], hist["tau"]))])
    out.add("seeds.json", json.dumps([s.to_json(g) for s in seed_sets], indent=2) + "\n")
    out.add_json("summary.json", {"p": p, "k": k, "realizations": M,
                                  "benchmark_mode": config.benchmark_mode,
                                  "methods": summary, "graph": info})
    out.add("run_config.txt", serialize(config))
    return out


def _add_label_map(out: Outputs, g: Graph) -> None:
    buf = _StringWriter()
    write_label_map(g, buf)
    out.add("label_map.csv", buf.getvalue())


def _write_cdfs(out: Outputs, name: str, nu, tau) -> None:
    rows = []
    for measure, values in (("nu", nu), ("tau", tau)):
        x, P = cumulative_distribution(values)
        rows.extend((measure, _fmt(a), _fmt(b)) for a, b in zip(x, P))
    out.add_csv(f"cdf_{name}.csv", ["measure", "x", "P"], rows)


def cmd_optimize(config: RunConfig) -> Outputs:
    g, info = load_graph(config)
    out = Outputs(config.out)
    p = resolve_p(g, config, out)
    k = budget_size(config.budget, g.node_count)
    M = _realizations(g, config)
    bench = benchmark_stats(g, k, p, M, config, STREAM_OPTIMIZE)
    _add_label_map(out, g)
    initial = [select(m, g, k, p=_selector_p(config, p), tie_seed=config.seed)
               for m in (SeedMethod.HD, SeedMethod.KC, SeedMethod.DD, SeedMethod.CHD)]
    front = optimize(g, p, k, config.ga, bench, initial=initial, workers=config.workers)
    numeric = evaluate_front_numerically(g, front, p, M, bench, config.seed,
                                         config.numeric_repeats, config.ga.fairness_measure,
                                         config.workers)
    comparison = evaluate_front_numerically(
        g, [s for s in initial if s.method in (SeedMethod.HD, SeedMethod.DD, SeedMethod.CHD)],
        p, M, bench, config.seed, config.numeric_repeats, config.ga.fairness_measure, config.workers)
    out.add_json("front.json", [e.to_json(g) for e in numeric])
    out.add_csv("front_theoretical.csv", ["method", "spread", "fair", "eval_samples", "nodes"],
                [(c.seeds.method.value, _fmt(c.fitness_spread), c.fitness_fair, c.eval_samples,
                  " ".join(g.label(v) for v in c.seeds.nodes)) for c in front])
    header = ["method", "spread_mean", "spread_sd", "fair_mean", "fair_sd", "eval_samples"]
    out.add_csv("front_numeric.csv", header,
                [(e.seeds.method.value, _fmt(e.spread_mean), _fmt(e.spread_sd),
                  _fmt(e.fair_mean), _fmt(e.fair_sd), e.eval_samples) for e in numeric])
    out.add_csv("heuristics.csv", header,
                [(e.seeds.method.value, _fmt(e.spread_mean), _fmt(e.spread_sd),
                  _fmt(e.fair_mean), _fmt(e.fair_sd), e.eval_samples) for e in comparison])
    out.add_csv("ga_history.csv", ["generation", "archive_hypervolume"],
                list(enumerate(_fmt(h) for h in front.hypervolume_history)))
    out.add_json("summary.json", {"p": p, "k": k, "realizations": M, "front_size": len(front),
                                  "graph": info})
    out.add("run_config.txt", serialize(config))
    return out


def cmd_seed_report(config: RunConfig, front_path: str | None = None) -> Outputs:
    g, info = load_graph(config)
    out = Outputs(config.out)
    need_p = any(SeedMethod(m) is SeedMethod.DD for m in config.methods)
    p = resolve_p(g, config, out) if need_p or config.p is not None else None
    k = budget_size(config.budget, g.node_count)
    sets: list[SeedSet] = []
    for name in config.methods:
        method = SeedMethod(name)
        if method is SeedMethod.GA:
            continue
        sets.append(select(method, g, k, p=_selector_p(config, p) if p is not None else None,
                           tie_seed=config.seed))
    if front_path is not None:
        label_to_id = {g.label(i): i for i in range(g.node_count)}
        try:
            with open(front_path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read front: {exc}") from None
        for item in data:
            nodes = tuple(label_to_id[str(v)] for v in item["nodes"])
            sets.append(SeedSet(item.get("method", "GA"), nodes, len(nodes) / g.node_count))
    rows = []
    for i, s in enumerate(sets):
        d = seed_dispersion(g, s)
        rows.append((i, s.method.value, len(s), _fmt(d.mean_distance), d.reachable, d.unreachable))
    out.add_csv("dispersion.csv", ["index", "method", "size", "mean_distance", "reachable",
                                   "unreachable"], rows)
    out.add("seeds.json", json.dumps([s.to_json(g) for s in sets], indent=2) + "\n")
    return out


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


_FLAG_KEYS = {
    "graph": "graph", "p": "p", "dd_p": "dd_p", "budget": "budget",
    "realizations": "realizations", "out": "out", "seed": "seed", "workers": "workers",
    "benchmark_mode": "benchmark_mode", "grid_points": "grid_points", "runs_per_p": "runs_per_p",
    "numeric_repeats": "numeric_repeats",
    "gen_model": "gen.model", "gen_n": "gen.node_count", "gen_gamma": "gen.gamma",
    "gen_mean": "gen.mean_degree", "gen_std": "gen.degree_stddev",
    "gen_min_degree": "gen.min_degree", "gen_seed": "gen.rng_seed",
    "ga_population": "ga.population_size", "ga_generations": "ga.generations",
    "ga_crossover": "ga.crossover_prob", "ga_mutation": "ga.mutation_prob",
    "ga_tabu_freq": "ga.tabu_mutation_freq", "ga_replace_frac": "ga.random_mutation_replace_frac",
    "ga_tabu_neighborhood": "ga.tabu_neighborhood_frac", "ga_samples": "ga.fitness_samples",
    "ga_tabu_samples": "ga.tabu_samples", "ga_final_samples": "ga.final_samples",
    "ga_selection": "ga.selection", "ga_fairness": "ga.fairness_measure", "ga_seed": "ga.rng_seed",
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value run configuration file")
    common.add_argument("--graph", help="edge list file")
    common.add_argument("--giant", action="store_true", help="restrict to the giant component")
    pgroup = common.add_mutually_exclusive_group()
    pgroup.add_argument("--p", type=str, help="activation probability")
    pgroup.add_argument("--auto-p", action="store_true", help="use the estimated critical p")
    common.add_argument("--dd-p", type=str, help="p used inside degree discount (default: --p)")
    common.add_argument("--budget", type=str, help="seed fraction of N (default 0.01)")
    common.add_argument("--realizations", type=str, help="cascades per ensemble (default 10 N)")
    common.add_argument("--methods", help="comma separated, e.g. HD,KC,DD,CHD")
    common.add_argument("--benchmark-mode", choices=["resample", "fixed"])
    common.add_argument("--grid-points", type=str)
    common.add_argument("--runs-per-p", type=str)
    common.add_argument("--numeric-repeats", type=str)
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=str, help="master rng seed")
    common.add_argument("--workers", type=str, help="numba worker threads")
    common.add_argument("-v", "--verbose", action="store_true")
    for flag in ("model", "n", "gamma", "mean", "std", "min-degree", "seed"):
        common.add_argument(f"--gen-{flag}", type=str)
    for flag in ("population", "generations", "crossover", "mutation", "tabu-freq",
                 "replace-frac", "tabu-neighborhood", "samples", "tabu-samples",
                 "final-samples", "selection", "fairness", "seed"):
        common.add_argument(f"--ga-{flag}", type=str)

    parser = _Parser(prog="infogap", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="write a synthetic graph")
    sub.add_parser("critical-p", parents=[common], help="estimate the critical probability")
    sub.add_parser("vulnerability", parents=[common], help="per-node vulnerability analysis")
    sub.add_parser("optimize", parents=[common], help="fair influence maximization GA")
    seed = sub.add_parser("seed-report", parents=[common], help="seed sets and dispersion")
    seed.add_argument("--front", help="front.json from the optimize command")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        pairs_file = parse_pairs(text)
    else:
        pairs_file = {}
    pairs = dict(pairs_file)
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            pairs[key] = str(value)
    if args.auto_p:
        pairs["p"] = "auto"
    if args.giant:
        pairs["giant_component"] = "true"
    if args.methods:
        pairs["methods"] = args.methods
    if args.graph is not None:
        for key in [k for k in pairs if k.startswith("gen.") and k in pairs_file]:
            del pairs[key]
    elif any(k.startswith("gen.") for k in pairs) and "graph" in pairs_file:
        del pairs["graph"]
    if args.command == "generate" and "graph" not in pairs:
        pairs.setdefault("gen.model", "scale_free")
    return from_pairs(pairs)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"infogap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        if args.command == "generate":
            out = cmd_generate(config)
        elif args.command == "critical-p":
            out = cmd_critical_p(config)
        elif args.command == "vulnerability":
            out = cmd_vulnerability(config)
        elif args.command == "optimize":
            out = cmd_optimize(config)
        else:
            out = cmd_seed_report(config, args.front)
        written = out.commit()
    except ConfigError as exc:
        print(f"infogap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GraphError, DataError, GenerationError, KeyError) as exc:
        print(f"infogap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"infogap: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

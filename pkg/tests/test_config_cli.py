import csv
import json
from pathlib import Path

import numpy as np
import pytest

from infogap.cascade import default_p_grid
from infogap.cli import main
from infogap.config import ConfigError, RunConfig, parse, serialize
from infogap.fairmax import GAConfig, dominates
from infogap.generators import GeneratorConfig
from infogap.graph import load_edge_list


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest_ok(directory):
    files = json.loads((directory / "manifest.json").read_text())["files"]
    on_disk = {p.name for p in directory.iterdir()} - {"manifest.json"}
    assert set(files) == on_disk
    return set(files)


@pytest.fixture(scope="module")
def graph_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["generate", "--gen-n", "400", "--gen-seed", "5", "--out", str(out)]) == 0
    return out / "graph.edges"


# -- configuration -------------------------------------------------------------------

def test_config_round_trip():
    cfg = RunConfig(generator=GeneratorConfig(node_count=500, gamma=2.2, rng_seed=4),
                    p=0.12, budget=0.02, realizations=300, methods=("HD", "CHD"),
                    ga=GAConfig(population_size=12, selection="reference", rng_seed=3),
                    seed=7, workers=2, giant_component=True)
    assert parse(serialize(cfg)) == cfg
    cfg2 = RunConfig(graph="x.txt")
    assert parse(serialize(cfg2)) == cfg2


def test_config_errors():
    with pytest.raises(ConfigError):
        parse("budget = 0.01\n")  # no graph source
    with pytest.raises(ConfigError):
        parse("graph = a\ngen.node_count = 10\n")
    with pytest.raises(ConfigError):
        parse("graph = a\nbogus = 1\n")
    with pytest.raises(ConfigError):
        parse("graph = a\nbudget = lots\n")
    with pytest.raises(ConfigError):
        parse("graph = a\nga.crossover_prob = 2\n")
    with pytest.raises(ConfigError):
        parse("graph = a\nmethods = HD,XYZ\n")


def test_config_comments_and_auto():
    cfg = parse("# run\ngraph = g.txt  # the graph\np = auto\nmethods = hd, dd\n")
    assert cfg.p is None and cfg.methods == ("HD", "DD")


# -- generate --------------------------------------------------------------------------

def test_generate(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["generate", "--gen-n", "1000", "--gen-gamma", "2.5", "--gen-seed", "1"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "graph.edges").read_bytes() == (b / "graph.edges").read_bytes()
    prov = json.loads((a / "provenance.json").read_text())
    assert prov["generator"]["node_count"] == 1000
    g, _ = load_edge_list((a / "graph.edges").read_text())
    assert g.node_count == 1000 - prov["degree_stats"]["isolated_nodes"] == 1000
    assert manifest_ok(a) == {"graph.edges", "provenance.json"}


def test_generate_invalid_gamma(tmp_path):
    assert main(["generate", "--gen-gamma", "0.5", "--out", str(tmp_path)]) == 1
    assert not (tmp_path / "manifest.json").exists()


# -- exit codes ------------------------------------------------------------------------

def test_exit_codes(tmp_path):
    assert main(["vulnerability", "--out", str(tmp_path)]) == 1  # no graph
    assert main(["nonsense"]) == 1
    assert main(["vulnerability", "--graph", str(tmp_path / "missing.txt"), "--p", "0.1",
                 "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 2 3\n")
    assert main(["vulnerability", "--graph", str(bad), "--p", "0.1", "--out",
                 str(tmp_path)]) == 2
    cfg = tmp_path / "run.cfg"
    cfg.write_text("graph = x\nga.population_size = 1\n")
    assert main(["optimize", "--config", str(cfg)]) == 1


# -- analysis commands ---------------------------------------------------------------------

def test_critical_p(graph_file, tmp_path):
    assert main(["critical-p", "--graph", str(graph_file), "--grid-points", "12",
                 "--runs-per-p", "200", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "susceptibility.csv")
    g, _ = load_edge_list(graph_file.read_text())
    # one row per grid point; points clipped at p = 1 collapse into one
    assert len(rows) == len(default_p_grid(g, 12)) <= 12
    res = json.loads((tmp_path / "critical_p.json").read_text())
    assert res["grid_min"] <= res["p_c"] <= res["grid_max"]
    manifest_ok(tmp_path)


def vulnerability_run(graph_file, out, extra=()):
    return main(["vulnerability", "--graph", str(graph_file), "--p", "0.3",
                 "--realizations", "1500", "--budget", "0.02", "--seed", "4",
                 "--methods", "HD,KC,DD,CHD,RANDOM", "--out", str(out), *extra])


def test_vulnerability_outputs(graph_file, tmp_path):
    assert vulnerability_run(graph_file, tmp_path) == 0
    files = manifest_ok(tmp_path)
    for name in ("HD", "KC", "DD", "CHD", "RANDOM"):
        assert f"stats_{name}.csv" in files and f"cdf_{name}.csv" in files
    assert {"worse_off.csv", "cdf_benchmark.csv", "summary.json", "seeds.json",
            "label_map.csv", "run_config.txt"} <= files
    seeds = {s["method"]: s["nodes"] for s in json.loads((tmp_path / "seeds.json").read_text())}
    assert set(seeds) == {"HD", "KC", "DD", "CHD"}
    for method, nodes in seeds.items():
        rows = {r["label"]: r for r in read_csv(tmp_path / f"stats_{method}.csv")}
        for label in nodes:
            assert float(rows[label]["eff_nu"]) >= 1 and rows[label]["vulnerable_nu"] == "0"
            assert float(rows[label]["nu"]) == 1 and float(rows[label]["tau"]) == 1
    hist = read_csv(tmp_path / "worse_off.csv")
    assert len(hist) == 6
    assert sum(float(r["fraction_nu"]) for r in hist) == pytest.approx(1)
    # run_config.txt replays the run
    assert parse((tmp_path / "run_config.txt").read_text()).realizations == 1500


def test_vulnerability_reproducible(graph_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert vulnerability_run(graph_file, a, ["--workers", "2"]) == 0
    assert vulnerability_run(graph_file, b, ["--workers", "2"]) == 0
    for name in ("stats_DD.csv", "worse_off.csv", "cdf_benchmark.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_vulnerability_rejects_ga(graph_file, tmp_path):
    assert main(["vulnerability", "--graph", str(graph_file), "--p", "0.3",
                 "--methods", "HD,GA", "--out", str(tmp_path)]) == 1


def test_optimize_and_seed_report(graph_file, tmp_path):
    out = tmp_path / "opt"
    args = ["optimize", "--graph", str(graph_file), "--p", "0.3", "--realizations", "400",
            "--budget", "0.01", "--seed", "2", "--numeric-repeats", "3",
            "--ga-population", "8", "--ga-generations", "2", "--ga-samples", "20",
            "--ga-tabu-samples", "5", "--ga-tabu-neighborhood", "0.02",
            "--ga-final-samples", "40", "--out", str(out)]
    assert main(args) == 0
    files = manifest_ok(out)
    assert {"front.json", "front_theoretical.csv", "front_numeric.csv", "heuristics.csv",
            "ga_history.csv", "summary.json"} <= files
    assert [r["method"] for r in read_csv(out / "heuristics.csv")] == ["HD", "DD", "CHD"]
    theo = [(float(r["spread"]), float(r["fair"])) for r in read_csv(out / "front_theoretical.csv")]
    assert all(not dominates(a, b) for a in theo for b in theo)
    hv = [float(r["archive_hypervolume"]) for r in read_csv(out / "ga_history.csv")]
    assert len(hv) == 3 and np.all(np.diff(hv) >= 0)
    front = json.loads((out / "front.json").read_text())
    assert all(r["eval_samples"] == 1200 for r in front)

    rep = tmp_path / "rep"
    assert main(["seed-report", "--graph", str(graph_file), "--p", "0.3", "--budget", "0.01",
                 "--front", str(out / "front.json"), "--out", str(rep)]) == 0
    rows = read_csv(rep / "dispersion.csv")
    assert [r["method"] for r in rows[:4]] == ["HD", "KC", "DD", "CHD"]
    assert len(rows) == 4 + len(front)
    assert all(float(r["mean_distance"]) > 0 for r in rows)


def test_seed_report_path_and_all_nodes(tmp_path):
    path = tmp_path / "path.txt"
    path.write_text("0 1\n1 2\n2 3\n3 4\n")
    assert main(["seed-report", "--graph", str(path), "--budget", "1.0", "--methods", "HD",
                 "--out", str(tmp_path / "all")]) == 0
    assert float(read_csv(tmp_path / "all" / "dispersion.csv")[0]["mean_distance"]) == 0
    assert main(["seed-report", "--graph", str(path), "--budget", "0.2", "--methods", "HD",
                 "--out", str(tmp_path / "one")]) == 0
    # HD on the path picks one of the three interior nodes
    d = float(read_csv(tmp_path / "one" / "dispersion.csv")[0]["mean_distance"])
    assert d in (pytest.approx(1.2), pytest.approx(1.4))

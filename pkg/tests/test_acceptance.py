"""End-to-end acceptance checks, one test per criterion.

Each test prints one PASS/FAIL line straight to the terminal, bypassing
pytest's output capture.
"""

import json
import random
import time
from collections import Counter

import pytest

from accoffload import cli
from accoffload.evaluator import Evaluator, SimBackend, ToolchainBackend, ToolchainConfig
from accoffload.ga_core import (
    GAParams,
    Individual,
    IndividualStatus,
    init_population,
    mutate,
    one_point_crossover,
    roulette_select,
    run_ga,
)
from accoffload.genome import Genome
from accoffload.pipeline import GenerationRow, check_log
from accoffload.sim_model import FIXTURES, CostModel, LoopCost, exhaustive_best, fixture_path, load_fixture
from accoffload.source_model import DIRECTIVE, CandidateSet, SourceUnit, render_variant, scan_loops, strip_directives
from conftest import SRC, mock_compile_cmd, write_config

REFERENCE = GAParams(population=12, generations=12, crossover_rate=0.9, mutation_rate=0.05)
SEEDS = range(20)
CORPUS = ["matmul.c", "lexing.c", "nested.c", "ext_call.c", "early_exit.c", "data_dep.c"]


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    return report


def run_sim(model, seed, params=REFERENCE):
    ev = Evaluator(SimBackend(model))
    res = run_ga(model.gene_length, GAParams(**{**params.__dict__, "seed": seed}), ev.evaluate_many)
    return res, ev


def test_criterion_1_oracle_equivalence(verdict):
    started = time.perf_counter()
    hits = {}
    for name in FIXTURES:
        model = load_fixture(name)
        _, t_opt = exhaustive_best(model)
        hits[name] = sum(run_sim(model, s)[0].best_time <= 1.05 * t_opt for s in SEEDS)
    elapsed = time.perf_counter() - started
    ok = all(h >= 18 for h in hits.values()) and elapsed < 30.0
    verdict(1, ok, f"seeds within 5% of oracle {hits} (need >=18/20 each), {elapsed:.1f} s")
    assert ok


def test_criterion_2_matrix12_replay(verdict):
    model = load_fixture("matrix12")
    g_opt, t_opt = exhaustive_best(model)
    results = [run_sim(model, s)[0] for s in SEEDS]
    exact = sum(r.best_genome.bits == g_opt for r in results)
    worst = min(r.speedup for r in results)
    oracle_speedup = model.baseline_s / t_opt
    ok = (abs(model.baseline_s - 0.09227) < 1e-12 and abs(t_opt - 0.00243) < 1e-12
          and abs(oracle_speedup - 37.97) <= 0.01 and exact >= 1 and worst >= 35.0)
    verdict(2, ok, f"baseline {model.baseline_s:.5f}, oracle {t_opt:.5f}, speedup {oracle_speedup:.4f}; "
                   f"{exact}/20 seeds exact, worst seed {worst:.2f}x")
    assert ok


def _count_requests(params):
    return params.population + (params.generations - 1) * (params.population - params.elite_count) + 1


def test_criterion_3_evaluation_accounting(verdict, tmp_path):
    failures = []
    for name in FIXTURES:
        model = load_fixture(name)
        for s in SEEDS:
            res, ev = run_sim(model, s)
            bound = REFERENCE.population * REFERENCE.generations + 1
            if not (res.distinct_evals <= bound and ev.invocations == res.distinct_evals == len(res.history)
                    and res.cache_hits + res.distinct_evals == _count_requests(REFERENCE)):
                failures.append((name, s))
    # one real toolchain run through the mock compiler with parallel jobs
    unit = SourceUnit.from_file(SRC / "matmul.c")
    loops = scan_loops(unit)
    cs = CandidateSet(unit, tuple(loops), tuple(lp.id for lp in loops))
    config = ToolchainConfig(mock_compile_cmd("--allow-nested", "--model", str(fixture_path("matrix12"))),
                             time_regex=r"elapsed:\s*([0-9.eE+-]+)", jobs=4)
    ev = Evaluator(ToolchainBackend(cs, config, tmp_path), jobs=4)
    params = GAParams(population=6, generations=3, seed=2)
    res = run_ga(cs, params, ev.evaluate_many)
    variants = len(list((tmp_path / "variants").iterdir()))
    tc_ok = (ev.invocations == res.distinct_evals == variants
             and res.cache_hits + res.distinct_evals == _count_requests(params))
    ok = not failures and tc_ok
    verdict(3, ok, f"{len(FIXTURES) * 20} sim runs, failures {failures}; toolchain run {res.distinct_evals} distinct "
                   f"= {ev.invocations} invocations = {variants} variant dirs")
    assert ok


def _random_model(rng):
    a = rng.randint(2, 12)
    loops = tuple(LoopCost(rng.uniform(0, 10), rng.uniform(1, 50), rng.uniform(0, 2)) for _ in range(a))
    pairs = tuple((i, j, rng.uniform(0, 3)) for i in range(a) for j in range(i + 1, a) if rng.random() < 0.15)
    fail = frozenset("".join(rng.choice("01") for _ in range(a)) for _ in range(rng.randint(0, 3)))
    fail -= {"0" * a}
    return CostModel(rng.uniform(0.1, 2), loops, pairs, fail)


def test_criterion_4_elitism_monotone(verdict):
    rng = random.Random(2024)
    bad = []
    for k in range(100):
        model = _random_model(rng)
        m = rng.randint(2, 16)
        params = GAParams(population=m, generations=rng.randint(1, 15), crossover_rate=rng.random(),
                          mutation_rate=rng.uniform(0, 0.5), seed=k, elite_count=rng.randint(1, m - 1))
        res, _ = run_sim(model, k, params)
        times = [s.best_time for s in res.stats]
        rows = [GenerationRow(s.generation, s.best_time, s.best_speedup, str(s.best_genome), s.mean_fitness,
                              s.distinct_evals, s.cache_hits) for s in res.stats]
        if any(b > a for a, b in zip(times, times[1:])) or check_log(rows):
            bad.append(k)
    verdict(4, not bad, f"100 randomized runs, non-monotone: {bad}")
    assert not bad


def _weighted(fitnesses):
    return [Individual(Genome.parse(format(i, "04b")), None, f, IndividualStatus.MEASURED)
            for i, f in enumerate(fitnesses)]


def test_criterion_5_operator_statistics(verdict):
    rng = random.Random(5)
    pop = _weighted([1.0, 3.0])
    picks = Counter(roulette_select(pop, 10_000, rng))
    freqs = [picks[ind.genome] / 10_000 for ind in pop]
    roulette_ok = abs(freqs[0] - 0.25) <= 0.02 and abs(freqs[1] - 0.75) <= 0.02

    a, pm = 12, 0.05
    genomes = init_population(a, GAParams(population=10_000), rng)
    flips = [sum(x != y for x, y in zip(g, mutate(g, pm, rng))) for g in genomes]
    mean = sum(flips) / len(flips)
    mutation_ok = abs(mean - a * pm) <= 0.08 * a * pm

    crossover_ok = True
    for x in range(16):
        for y in range(16):
            p1, p2 = Genome.parse(format(x, "04b")), Genome.parse(format(y, "04b"))
            for cut in (1, 2, 3):
                c1, c2 = one_point_crossover(p1, p2, rng, cut=cut)
                crossover_ok &= all(sorted((c1[i], c2[i])) == sorted((p1[i], p2[i])) for i in range(4))
    ok = roulette_ok and mutation_ok and crossover_ok
    verdict(5, ok, f"roulette {freqs[0]:.4f}/{freqs[1]:.4f}, mean flips {mean:.4f} (target {a * pm:.2f}), "
                   f"crossover multiset {'kept' if crossover_ok else 'broken'}")
    assert ok


def test_criterion_6_probe_filtering(verdict, tmp_path):
    expected = {
        "ext_call.c": {1: "ExternalCall"},
        "early_exit.c": {1: "EarlyExit"},
        "data_dep.c": {1: "DataDependency"},
        "nested.c": {0: "NestedOverlap", 1: "NestedOverlap"},
        "matmul.c": {},
    }
    mismatches = []
    gene_lengths = {}
    for name, want in expected.items():
        wd = tmp_path / name
        cfg = write_config(tmp_path / f"{name}.json", source=str(SRC / name), workdir=str(wd),
                           toolchain={"compile_cmd": mock_compile_cmd()})
        rc = cli.main(["analyze", str(cfg)])
        doc = json.loads((wd / "analysis.json").read_text())
        got = {lp["id"]: lp["reject_class"] for lp in doc["loops"] if lp["verdict"] == "Rejected"}
        gene_lengths[name] = doc["gene_length"]
        if rc != 0 or got != want or doc["gene_length"] != len(doc["loops"]) - len(want):
            mismatches.append((name, got))
    ok = not mismatches and gene_lengths["matmul.c"] == 12
    verdict(6, ok, f"gene lengths {gene_lengths}, mismatches {mismatches}")
    assert ok


def test_criterion_7_determinism(verdict, tmp_path):
    cfg = write_config(tmp_path / "c.json", source=str(SRC / "matmul.c"), workdir="unused",
                       sim_model=str(fixture_path("matrix12")), ga={"seed": 11})
    outs = []
    for wd in ("one", "two"):
        assert cli.main(["tune", str(cfg), "--workdir", str(tmp_path / wd)]) == 0
        outs.append(((tmp_path / wd / "generations.csv").read_bytes(), (tmp_path / wd / "summary.json").read_bytes()))
    ok = outs[0] == outs[1]
    verdict(7, ok, f"generation CSV and summary JSON {'byte-identical' if ok else 'differ'} across two runs")
    assert ok


def test_criterion_8_render_round_trip(verdict):
    rng = random.Random(8)
    sets = []
    for name in CORPUS:
        unit = SourceUnit.from_file(SRC / name)
        loops = scan_loops(unit)
        sets.append(CandidateSet(unit, tuple(loops), tuple(lp.id for lp in loops)))
    broken = 0
    for _ in range(1000):
        cs = rng.choice(sets)
        g = [rng.getrandbits(1) for _ in range(cs.gene_length)]
        out = render_variant(cs, g)
        if strip_directives(out) != cs.unit.text or out.count(DIRECTIVE) != sum(g):
            broken += 1
    zero_ok = all(render_variant(cs, [0] * cs.gene_length) == cs.unit.text for cs in sets)
    ok = broken == 0 and zero_ok
    verdict(8, ok, f"1000 random genomes, {broken} failed round trips; all-zero identity {zero_ok}")
    assert ok

"""analyze / tune / report, independent of argument parsing."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, RunConfig
from .evaluator import Evaluator, MeasurementCache, SimBackend, ToolchainBackend
from .ga_core import GenerationStats, TuningResult, run_ga
from .probe import CompilerDriver, NoCandidates, ProbeReport, build_candidate_set
from .sim_model import load_model
from .source_model import CandidateSet, SourceUnit, scan_loops

logger = logging.getLogger(__name__)

RESOLVED_CONFIG = "config.resolved.json"
MANIFEST = "manifest.json"


class MissingLog(FileNotFoundError):
    pass


class CorruptLog(ValueError):
    pass


def _write_analysis(cfg: RunConfig, report: ProbeReport):
    wd = cfg.workdir
    report.write_jsonl(wd / cfg.outputs.probe_report)
    doc = {
        "source": str(report.unit.path),
        "loops": [
            {"id": lp.id, "line": lp.line, "depth": lp.depth,
             "verdict": r.verdict, "reject_class": r.reject_class.value if r.reject_class else None,
             "timed_out": r.timed_out}
            for lp, r in zip(report.loops, report.results)
        ],
        "excluded_by_depth": report.excluded_by_depth,
        "candidates": list(report.candidate_set.candidates),
        "gene_length": report.gene_length,
    }
    (wd / cfg.outputs.analysis_json).write_text(json.dumps(doc, indent=2) + "\n")


def analyze(cfg: RunConfig) -> ProbeReport:
    """Scan and probe. NoCandidates still leaves a complete report on disk."""
    if cfg.source is None:
        raise ConfigError("analyze needs a 'source' file")
    cmd = cfg.compile_cmd_for_probe
    if not cmd:
        raise ConfigError("analyze needs probe.compile_cmd or toolchain.compile_cmd")
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    unit = SourceUnit.from_file(cfg.source)
    loops = scan_loops(unit)
    driver = CompilerDriver(cmd, cfg.probe.timeout_s, cfg.probe.rules)
    try:
        report = build_candidate_set(unit, loops, driver, cfg.workdir / "probe", jobs=cfg.probe.jobs,
                                     outermost_only=cfg.candidates == "outermost", use_cache=cfg.probe.cache)
    except NoCandidates as exc:
        _write_analysis(cfg, exc.report)
        raise
    _write_analysis(cfg, report)
    return report


def _candidate_set(cfg: RunConfig) -> CandidateSet | None:
    if cfg.source is None:
        return None
    if cfg.compile_cmd_for_probe:
        return analyze(cfg).candidate_set
    # sim run without a probe compiler: every scanned loop is a candidate
    unit = SourceUnit.from_file(cfg.source)
    loops = scan_loops(unit)
    keep = tuple(lp.id for lp in loops if cfg.candidates == "all" or lp.depth == 0)
    return CandidateSet(unit, tuple(loops), keep)


@dataclass
class TuneRun:
    result: TuningResult
    evaluator: Evaluator
    artifacts: dict[str, str]


def write_generation_csv(path: Path, stats: list[GenerationStats]):
    lines = [GenerationStats.CSV_HEADER] + [s.csv_row() for s in stats]
    path.write_text("\n".join(lines) + "\n")


def tune(cfg: RunConfig) -> TuneRun:
    wd = cfg.workdir
    wd.mkdir(parents=True, exist_ok=True)
    cfg.write_resolved(wd / RESOLVED_CONFIG)

    cs = _candidate_set(cfg)
    if cs is not None and cs.gene_length == 0:
        raise NoCandidates(ProbeReport(cs.unit, list(cs.all_loops), [], cs))

    if cfg.sim_model is not None:
        model = load_model(cfg.sim_model)
        if cs is not None and cs.gene_length != model.gene_length:
            raise ConfigError(f"sim model has {model.gene_length} loops but the source has "
                              f"{cs.gene_length} candidates")
        backend = SimBackend(model, cfg.sim_timeout_s)
        jobs = 1
    else:
        backend = ToolchainBackend(cs, cfg.toolchain, wd)
        jobs = cfg.toolchain.jobs
    cache = MeasurementCache(wd / cfg.outputs.cache, backend.fingerprint())
    evaluator = Evaluator(backend, cache, jobs)

    target = cs if cs is not None else backend.model.gene_length
    result = run_ga(target, cfg.ga, evaluator.evaluate_many)

    artifacts = {
        "config": RESOLVED_CONFIG,
        "generations_csv": cfg.outputs.generations_csv,
        "summary_json": cfg.outputs.summary_json,
        "cache": cfg.outputs.cache,
    }
    write_generation_csv(wd / cfg.outputs.generations_csv, result.stats)
    (wd / cfg.outputs.summary_json).write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    if result.best_source is not None:
        name = cfg.best_source_name()
        with open(wd / name, "w", encoding="utf-8", errors="surrogateescape", newline="") as fh:
            fh.write(result.best_source)
        artifacts["best_source"] = name
    if cs is not None and cfg.compile_cmd_for_probe:
        artifacts["probe_report"] = cfg.outputs.probe_report
        artifacts["analysis_json"] = cfg.outputs.analysis_json
    (wd / MANIFEST).write_text(json.dumps(artifacts, indent=2, sort_keys=True) + "\n")
    logger.info("best %s: %.6g s vs baseline %.6g s (%.2fx), %d distinct evaluations, %d toolchain runs",
                result.best_genome, result.best_time, result.baseline_time, result.speedup,
                result.distinct_evals, evaluator.invocations)
    return TuneRun(result, evaluator, artifacts)


@dataclass
class GenerationRow:
    generation: int
    best_time_s: float
    best_speedup: float
    best_genome: str
    mean_fitness: float
    distinct_evals: int
    cache_hits: int


def read_generation_csv(path: Path) -> list[GenerationRow]:
    if not path.exists():
        raise MissingLog(f"generation log {path} not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != GenerationStats.CSV_HEADER.split(","):
            raise CorruptLog(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for n, r in enumerate(reader, start=2):
            try:
                rows.append(GenerationRow(int(r["generation"]), float(r["best_time_s"]), float(r["best_speedup"]),
                                          r["best_genome"], float(r["mean_fitness"]), int(r["distinct_evals"]),
                                          int(r["cache_hits"])))
            except (TypeError, ValueError) as exc:
                raise CorruptLog(f"{path}:{n}: {exc}") from None
    return rows


def check_log(rows: list[GenerationRow]) -> list[str]:
    """Problems that cannot happen in a log written by an elitist run."""
    problems = []
    if not rows:
        return ["log has no rows"]
    if rows[0].generation != 0 or set(rows[0].best_genome) - {"0"}:
        problems.append("row 0 is not the all-CPU baseline")
    baseline = rows[0].best_time_s
    for prev, cur in zip(rows, rows[1:]):
        if cur.generation != prev.generation + 1:
            problems.append(f"generation {cur.generation} follows {prev.generation}")
        if cur.best_time_s > prev.best_time_s:
            problems.append(f"best time rises at generation {cur.generation} "
                            f"({prev.best_time_s!r} -> {cur.best_time_s!r}); elitism violated")
        if cur.distinct_evals < prev.distinct_evals or cur.cache_hits < prev.cache_hits:
            problems.append(f"evaluation counters decrease at generation {cur.generation}")
    for r in rows:
        if r.best_time_s <= 0 or not math.isclose(r.best_speedup, baseline / r.best_time_s, rel_tol=1e-9):
            problems.append(f"speedup at generation {r.generation} inconsistent with times")
    return problems


def missing_artifacts(workdir: Path) -> list[str]:
    mpath = workdir / MANIFEST
    if not mpath.exists():
        return []
    manifest = json.loads(mpath.read_text())
    return [p for p in manifest.values() if not (workdir / p).exists()]


def write_gnuplot(path: Path, rows: list[GenerationRow]):
    lines = ["# generation best_speedup best_time_s"]
    lines += [f"{r.generation} {r.best_speedup!r} {r.best_time_s!r}" for r in rows]
    path.write_text("\n".join(lines) + "\n")


def format_table(rows: list[GenerationRow], summary: dict | None = None) -> str:
    out = [f"{'gen':>4} {'best time [s]':>14} {'speedup':>9}  {'best genome':<20} {'evals':>6} {'hits':>6}"]
    for r in rows:
        out.append(f"{r.generation:>4} {r.best_time_s:>14.6g} {r.best_speedup:>9.2f}  {r.best_genome:<20} "
                   f"{r.distinct_evals:>6} {r.cache_hits:>6}")
    if summary:
        out.append("")
        out.append(f"baseline {summary['baseline_s']:.6g} s -> best {summary['best_s']:.6g} s, "
                   f"speedup {summary['speedup']:.2f}x ({summary['best_genome']}), "
                   f"{summary['distinct_evals']} distinct evaluations, search cost {summary['elapsed_s']:.6g} s")
    return "\n".join(out)

"""Command line entry point.

    accoffload analyze CONFIG
    accoffload tune CONFIG [--seed N] [--sim MODEL.json] [--workdir DIR]
    accoffload report WORKDIR [--gnuplot FILE] [--no-plot]

Exit codes: 0 ok, 1 corrupted log, 2 config error, 3 scan/probe error or
no candidate loops, 4 toolchain unavailable, 5 zero-fitness abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, load_config
from .evaluator import EvaluatorError
from .ga_core import EvaluatorUnavailable, NoCandidates as GANoCandidates, ZeroTotalFitness
from .probe import CompilerNotFound, NoCandidates, ProbeError
from .sim_model import ModelError
from .source_model import ScanError

EXIT_OK = 0
EXIT_CORRUPT_LOG = 1
EXIT_CONFIG = 2
EXIT_SCAN = 3
EXIT_TOOLCHAIN = 4
EXIT_ZERO_FITNESS = 5

log = logging.getLogger("accoffload")


def _print_analysis(report, out):
    print(f"{report.unit.path}: {len(report.loops)} for loops, {report.gene_length} candidates", file=out)
    for lp, r in zip(report.loops, report.results):
        why = ""
        if not r.parallelizable:
            why = f"  [{r.reject_class.value}{', timeout' if r.timed_out else ''}]"
        note = " (excluded: not outermost)" if lp.id in report.excluded_by_depth else ""
        print(f"  loop {lp.id:>3}  line {lp.line:>5}  depth {lp.depth}  {r.verdict}{why}{note}", file=out)
    print(f"gene length: {report.gene_length}", file=out)


def cmd_analyze(args) -> int:
    cfg = load_config(args.config, {"workdir": args.workdir})
    try:
        report = pipeline.analyze(cfg)
    except NoCandidates as exc:
        _print_analysis(exc.report, sys.stdout)
        print("no candidate loops: nothing to tune")
        return EXIT_OK
    _print_analysis(report, sys.stdout)
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = load_config(args.config, {
        "seed": args.seed, "sim_model": args.sim, "workdir": args.workdir,
        "population": args.population, "generations": args.generations, "jobs": args.jobs,
    })
    run = pipeline.tune(cfg)
    summary = run.result.summary()
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"toolchain invocations this run: {run.evaluator.invocations}")
    return EXIT_OK


def cmd_report(args) -> int:
    wd = Path(args.workdir)
    csv_name = "generations.csv"
    summary_name = "summary.json"
    resolved = wd / pipeline.RESOLVED_CONFIG
    if resolved.exists():
        outs = json.loads(resolved.read_text()).get("outputs", {})
        csv_name = outs.get("generations_csv", csv_name)
        summary_name = outs.get("summary_json", summary_name)
    rows = pipeline.read_generation_csv(wd / csv_name)
    summary = json.loads((wd / summary_name).read_text()) if (wd / summary_name).exists() else None
    print(pipeline.format_table(rows, summary))

    problems = pipeline.check_log(rows)
    missing = pipeline.missing_artifacts(wd)
    if missing:
        problems.append(f"artifacts listed in the manifest are missing: {', '.join(missing)}")
    if problems:
        for p in problems:
            print(f"CORRUPTED LOG: {p}", file=sys.stderr)
        return EXIT_CORRUPT_LOG

    if args.gnuplot:
        pipeline.write_gnuplot(Path(args.gnuplot), rows)
    else:
        pipeline.write_gnuplot(wd / "generations.dat", rows)
    if not args.no_plot:
        from .plots import plot_generations
        fig = plot_generations(rows, wd / "generations.png", title=wd.name)
        print(f"figure: {fig}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="accoffload", description="GA search for OpenACC loop offload patterns")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="scan for loops and probe each one with the directive")
    a.add_argument("config")
    a.add_argument("--workdir")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("tune", help="run the genetic search")
    t.add_argument("config")
    t.add_argument("--seed", type=int)
    t.add_argument("--sim", metavar="MODEL", help="evaluate with a cost model instead of the toolchain")
    t.add_argument("--workdir")
    t.add_argument("--population", type=int)
    t.add_argument("--generations", type=int)
    t.add_argument("--jobs", type=int)
    t.set_defaults(func=cmd_tune)

    r = sub.add_parser("report", help="summarise a finished run")
    r.add_argument("workdir")
    r.add_argument("--gnuplot", metavar="FILE", help="where to write the gnuplot data (default WORKDIR/generations.dat)")
    r.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ModelError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NoCandidates, GANoCandidates) as exc:
        log.error("no candidate loops: %s", exc)
        return EXIT_SCAN
    except (CompilerNotFound, EvaluatorError, EvaluatorUnavailable) as exc:
        log.error("toolchain unavailable: %s", exc)
        return EXIT_TOOLCHAIN
    except (ScanError, ProbeError) as exc:
        log.error("scan/probe error: %s", exc)
        return EXIT_SCAN
    except ZeroTotalFitness as exc:
        log.error("aborting: %s", exc)
        return EXIT_ZERO_FITNESS
    except pipeline.MissingLog as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except pipeline.CorruptLog as exc:
        log.error("corrupted log: %s", exc)
        return EXIT_CORRUPT_LOG


if __name__ == "__main__":
    sys.exit(main())

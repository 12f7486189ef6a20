"""Genome -> measured time, with memoization.

Two backends share one cache/scheduler front end:

* ``ToolchainBackend`` renders the variant, runs ``compile_cmd`` and then
  ``bench_cmd`` under a timeout, and extracts the time.
* ``SimBackend`` asks a :class:`~accoffload.sim_model.CostModel`.

A genome is measured at most once per run; later requests read the cache.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import shlex
import statistics
import subprocess
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .genome import Genome
from .probe import CompilerDriver, CompilerNotFound
from .sim_model import CostModel, SimulatedCompileError
from .source_model import CandidateSet, render_variant

logger = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OK = "Ok"
    COMPILE_ERROR = "CompileError"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"


class EvaluatorError(RuntimeError):
    pass


class ToolchainMissing(EvaluatorError):
    pass


class WorkdirUnwritable(EvaluatorError):
    pass


class TimePatternNotFound(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationOutcome:
    genome: Genome
    status: Status
    time_s: float | None = None
    wall_cost_s: float = 0.0
    compiler_log: str = field(default="", compare=False, repr=False)
    run_log: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.status is Status.OK and not (self.time_s and self.time_s > 0):
            raise ValueError("Ok outcome needs a positive time")

    @property
    def has_time(self) -> bool:
        return self.status in (Status.OK, Status.TIMEOUT)

    def to_json(self) -> dict:
        return {"genome": str(self.genome), "status": self.status.value,
                "time_s": self.time_s, "wall_cost_s": self.wall_cost_s}

    @classmethod
    def from_json(cls, d: dict) -> "EvaluationOutcome":
        return cls(Genome.parse(d["genome"]), Status(d["status"]), d.get("time_s"), d.get("wall_cost_s", 0.0))


class MeasurementCache:
    """genome -> outcome, optionally persisted as JSON lines.

    The first line of the file records a fingerprint of what is being
    measured; a file written for something else is discarded.
    """

    def __init__(self, path: Path | None = None, fingerprint: str = ""):
        self.path = Path(path) if path is not None else None
        self.fingerprint = fingerprint
        self._lock = threading.Lock()
        self._data: dict[Genome, EvaluationOutcome] = {}
        if self.path is not None:
            self._load()

    def _load(self):
        if self.path.exists():
            lines = [ln for ln in self.path.read_text().splitlines() if ln.strip()]
            header = json.loads(lines[0]) if lines else {}
            if header.get("fingerprint") == self.fingerprint:
                for ln in lines[1:]:
                    out = EvaluationOutcome.from_json(json.loads(ln))
                    self._data.setdefault(out.genome, out)
                return
            logger.warning("cache %s was written for a different run; starting fresh", self.path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps({"fingerprint": self.fingerprint}) + "\n")
        except OSError as exc:
            raise WorkdirUnwritable(str(exc)) from exc

    def __len__(self):
        return len(self._data)

    def __contains__(self, genome: Genome) -> bool:
        return genome in self._data

    def get(self, genome: Genome) -> EvaluationOutcome | None:
        return self._data.get(genome)

    def put(self, outcome: EvaluationOutcome) -> EvaluationOutcome:
        """Store unless present; returns whichever outcome is now recorded."""
        with self._lock:
            existing = self._data.get(outcome.genome)
            if existing is not None:
                return existing
            self._data[outcome.genome] = outcome
            if self.path is not None:
                with open(self.path, "a") as fh:
                    fh.write(json.dumps(outcome.to_json()) + "\n")
            return outcome

    def outcomes(self) -> list[EvaluationOutcome]:
        return list(self._data.values())


def extract_time(stdout: str, stderr: str, wall_s: float, time_regex: str | None = None) -> float:
    """Seconds from the first capture group of ``time_regex``, else wall time."""
    if not time_regex:
        return wall_s
    pat = re.compile(time_regex)
    for stream in (stdout, stderr):
        m = pat.search(stream or "")
        if m:
            return float(m.group(1))
    raise TimePatternNotFound(f"pattern {time_regex!r} not found in benchmark output")


class Backend(Protocol):
    def measure(self, genome: Genome) -> EvaluationOutcome: ...

    def fingerprint(self) -> str: ...


class SimBackend:
    """Cost-model backend. Simulated wall cost equals the modelled runtime."""

    def __init__(self, model: CostModel, timeout_s: float = 120.0):
        self.model = model
        self.timeout_s = timeout_s

    def fingerprint(self) -> str:
        return "sim:" + json.dumps(self.model.to_json(), sort_keys=True) + f":timeout={self.timeout_s!r}"

    def measure(self, genome: Genome) -> EvaluationOutcome:
        try:
            t = self.model.model_time(genome.bits)
        except SimulatedCompileError:
            return EvaluationOutcome(genome, Status.COMPILE_ERROR, None, 0.0, "simulated compile error")
        if t > self.timeout_s:
            return EvaluationOutcome(genome, Status.TIMEOUT, self.timeout_s, self.timeout_s)
        return EvaluationOutcome(genome, Status.OK, t, t)


@dataclass
class ToolchainConfig:
    compile_cmd: str
    bench_cmd: str = "{exe}"
    time_regex: str | None = None
    timeout_s: float = 120.0
    jobs: int = 1
    repetitions: int = 1


class ToolchainBackend:
    def __init__(self, cs: CandidateSet, config: ToolchainConfig, workdir: Path):
        self.cs = cs
        self.config = config
        self.workdir = Path(workdir) / "variants"
        self.compiler = CompilerDriver(config.compile_cmd, config.timeout_s)
        try:
            self.compiler.check_available()
        except CompilerNotFound as exc:
            raise ToolchainMissing(str(exc)) from exc
        try:
            self.workdir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise WorkdirUnwritable(str(exc)) from exc

    def fingerprint(self) -> str:
        c = self.config
        return (f"toolchain:{self.cs.unit.digest}:{list(self.cs.candidates)}:{c.compile_cmd}:"
                f"{c.bench_cmd}:{c.time_regex}:{c.timeout_s!r}:{c.repetitions}")

    def genome_dir(self, genome: Genome) -> Path:
        return self.workdir / (str(genome) or "empty")

    def measure(self, genome: Genome) -> EvaluationOutcome:
        started = time.perf_counter()
        gdir = self.genome_dir(genome)
        try:
            gdir.mkdir(parents=True, exist_ok=True)
            src = gdir / Path(self.cs.unit.path).name
            with open(src, "w", encoding="utf-8", errors="surrogateescape", newline="") as fh:
                fh.write(render_variant(self.cs, genome.bits))
        except OSError as exc:
            raise WorkdirUnwritable(str(exc)) from exc
        exe = gdir / "a.out"
        rc, clog = self.compiler.compile(src, exe)
        (gdir / "compile.log").write_text(clog)
        if rc != 0:
            return EvaluationOutcome(genome, Status.COMPILE_ERROR, None, time.perf_counter() - started, clog)

        cmd = self.config.bench_cmd.format(exe=shlex.quote(str(exe.resolve())))
        times: list[float] = []
        logs: list[str] = []
        status = Status.OK
        for _ in range(max(1, self.config.repetitions)):
            t0 = time.perf_counter()
            try:
                proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, cwd=gdir,
                                      timeout=self.config.timeout_s, errors="replace")
            except subprocess.TimeoutExpired:
                logs.append(f"[timeout after {self.config.timeout_s} s]")
                status = Status.TIMEOUT
                break
            wall = time.perf_counter() - t0
            logs.append(proc.stdout + proc.stderr)
            if proc.returncode != 0:
                status = Status.RUNTIME_ERROR
                break
            try:
                times.append(extract_time(proc.stdout, proc.stderr, wall, self.config.time_regex))
            except TimePatternNotFound as exc:
                logs.append(str(exc))
                status = Status.RUNTIME_ERROR
                break
        run_log = "\n".join(logs)
        (gdir / "run.log").write_text(run_log)
        cost = time.perf_counter() - started
        if status is Status.TIMEOUT:
            return EvaluationOutcome(genome, status, self.config.timeout_s, cost, clog, run_log)
        if status is Status.OK and statistics.median(times) <= 0:
            status = Status.RUNTIME_ERROR
        if status is not Status.OK:
            return EvaluationOutcome(genome, status, None, cost, clog, run_log)
        return EvaluationOutcome(genome, Status.OK, statistics.median(times), cost, clog, run_log)


class Evaluator:
    """Cache + job scheduler in front of a backend."""

    def __init__(self, backend: Backend, cache: MeasurementCache | None = None, jobs: int = 1):
        self.backend = backend
        self.cache = cache if cache is not None else MeasurementCache(None, backend.fingerprint())
        self.jobs = max(1, jobs)
        self.invocations = 0
        self._lock = threading.Lock()
        self._inflight: dict[Genome, Future] = {}

    def evaluate(self, genome: Genome) -> EvaluationOutcome:
        with self._lock:
            hit = self.cache.get(genome)
            if hit is not None:
                return hit
            fut = self._inflight.get(genome)
            owner = fut is None
            if owner:
                fut = self._inflight[genome] = Future()
                self.invocations += 1
        if not owner:
            return fut.result()
        try:
            out = self.cache.put(self.backend.measure(genome))
        except BaseException as exc:
            with self._lock:
                del self._inflight[genome]
            fut.set_exception(exc)
            raise
        with self._lock:
            del self._inflight[genome]
        fut.set_result(out)
        return out

    def evaluate_batch(self, genomes: Iterable[Genome]) -> dict[Genome, EvaluationOutcome]:
        unique = sorted(set(genomes))
        if self.jobs == 1 or len(unique) <= 1:
            return {g: self.evaluate(g) for g in unique}
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            return dict(zip(unique, pool.map(self.evaluate, unique)))

    def evaluate_many(self, genomes: list[Genome]) -> list[EvaluationOutcome]:
        """Outcomes in request order; duplicates are measured once."""
        results = self.evaluate_batch(genomes)
        return [results[g] for g in genomes]

    def total_wall_cost(self) -> float:
        return sum(o.wall_cost_s for o in self.cache.outcomes())

"""Per-loop compile probing: which loops build with the directive on their own."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import re
import shlex
import shutil
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .source_model import CandidateSet, LoopSite, SourceUnit, render_single

logger = logging.getLogger(__name__)


class RejectClass(str, enum.Enum):
    EXTERNAL_CALL = "ExternalCall"
    NESTED_OVERLAP = "NestedOverlap"
    EARLY_EXIT = "EarlyExit"
    DATA_DEPENDENCY = "DataDependency"
    OTHER = "Other"


# Checked in order; fragments follow NVHPC/PGI diagnostics.
DEFAULT_RULES: list[tuple[str, str]] = [
    ("NestedOverlap", r"may not be nested|nested compute region|kernels construct .*within|already in a compute region"),
    ("ExternalCall", r"acc routine information|call to .* not supported|external (routine|function)"),
    ("EarlyExit", r"loop exit|\bbreak\b|\bgoto\b|early exit|return statement"),
    ("DataDependency", r"loop carried dependence|data dependen|dependence of .* prevents"),
]


class ProbeError(RuntimeError):
    pass


class CompilerNotFound(ProbeError):
    pass


class NoCandidates(ProbeError):
    def __init__(self, report: "ProbeReport"):
        self.report = report
        super().__init__(f"no loop of {report.unit.path} compiles with the directive")


def classify(message: str, rules: Sequence[tuple[str, str]] | None = None) -> RejectClass:
    for cls_name, pattern in (DEFAULT_RULES if rules is None else rules):
        if re.search(pattern, message, re.IGNORECASE):
            return RejectClass(cls_name)
    return RejectClass.OTHER


@dataclass
class CompilerDriver:
    """Shell command template with ``{src}`` and ``{out}`` placeholders."""

    command: str
    timeout_s: float = 120.0
    rules: list[tuple[str, str]] | None = None

    def executable(self) -> str:
        return shlex.split(self.command)[0]

    def check_available(self):
        exe = self.executable()
        if shutil.which(exe) is None and not os.access(exe, os.X_OK):
            raise CompilerNotFound(f"compiler {exe!r} not found on PATH")

    def format(self, src: Path, out: Path) -> str:
        return self.command.format(src=shlex.quote(str(src)), out=shlex.quote(str(out)))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.command.encode()).hexdigest()[:16]

    def compile(self, src: Path, out: Path) -> tuple[int | None, str]:
        """Run the compiler. Returns (exit code or None on timeout, combined log)."""
        cmd = self.format(src, out)
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True,
                                  timeout=self.timeout_s, cwd=src.parent, errors="replace")
        except subprocess.TimeoutExpired as exc:
            log = (exc.stdout or b"") + (exc.stderr or b"")
            if isinstance(log, bytes):
                log = log.decode(errors="replace")
            return None, log + f"\n[timeout after {self.timeout_s} s]\n"
        return proc.returncode, proc.stdout + proc.stderr


@dataclass(frozen=True)
class ProbeResult:
    loop_id: int
    line: int
    parallelizable: bool
    reject_class: RejectClass | None
    compiler_message: str
    timed_out: bool = False

    @property
    def verdict(self) -> str:
        return "Parallelizable" if self.parallelizable else "Rejected"

    def to_json(self) -> dict:
        return {
            "id": self.loop_id,
            "line": self.line,
            "verdict": self.verdict,
            "reject_class": self.reject_class.value if self.reject_class else None,
            "timed_out": self.timed_out,
            "message": self.compiler_message,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProbeResult":
        rc = d.get("reject_class")
        return cls(d["id"], d["line"], d["verdict"] == "Parallelizable",
                   RejectClass(rc) if rc else None, d.get("message", ""), d.get("timed_out", False))


@dataclass
class ProbeReport:
    unit: SourceUnit
    loops: list[LoopSite]
    results: list[ProbeResult]
    candidate_set: CandidateSet
    excluded_by_depth: list[int] = field(default_factory=list)

    @property
    def gene_length(self) -> int:
        return self.candidate_set.gene_length

    def write_jsonl(self, path: Path):
        with open(path, "w") as fh:
            for r in self.results:
                fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


class _ProbeCache:
    """JSON-lines cache keyed by (source hash, loop id, compiler hash)."""

    def __init__(self, path: Path | None):
        self.path = path
        self._lock = threading.Lock()
        self._data: dict[str, dict] = {}
        if path is not None and path.exists():
            for line in path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self._data[rec["key"]] = rec["result"]

    @staticmethod
    def key(unit: SourceUnit, loop_id: int, compiler: CompilerDriver) -> str:
        return f"{unit.digest}:{loop_id}:{compiler.digest}"

    def get(self, key: str) -> ProbeResult | None:
        rec = self._data.get(key)
        return ProbeResult.from_json(rec) if rec is not None else None

    def put(self, key: str, result: ProbeResult):
        with self._lock:
            if key in self._data:
                return
            self._data[key] = result.to_json()
            if self.path is not None:
                with open(self.path, "a") as fh:
                    fh.write(json.dumps({"key": key, "result": self._data[key]}, sort_keys=True) + "\n")


def probe_loop(unit: SourceUnit, loops: Sequence[LoopSite], loop_id: int,
               compiler: CompilerDriver, workdir: Path) -> ProbeResult:
    """Compile a variant with the directive on ``loop_id`` only."""
    site = loops[loop_id]
    ldir = Path(workdir) / f"loop_{loop_id:03d}"
    ldir.mkdir(parents=True, exist_ok=True)
    src = ldir / Path(unit.path).name
    with open(src, "w", encoding="utf-8", errors="surrogateescape", newline="") as fh:
        fh.write(render_single(unit, loops, loop_id))
    rc, log = compiler.compile(src, ldir / "a.out")
    (ldir / "compile.log").write_text(log)
    if rc is None:
        return ProbeResult(loop_id, site.line, False, RejectClass.OTHER, log, timed_out=True)
    if rc == 127 and "not found" in log:
        raise CompilerNotFound(log.strip())
    if rc == 0:
        return ProbeResult(loop_id, site.line, True, None, log)
    return ProbeResult(loop_id, site.line, False, classify(log, compiler.rules), log)


def build_candidate_set(unit: SourceUnit, loops: Sequence[LoopSite], compiler: CompilerDriver,
                        workdir: Path, jobs: int = 1, outermost_only: bool = False,
                        use_cache: bool = True) -> ProbeReport:
    """Probe every loop and keep the ones that compile.

    Raises NoCandidates (carrying the report) when nothing survives.
    """
    compiler.check_available()
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    cache = _ProbeCache(workdir / "probe_cache.jsonl" if use_cache else None)

    def one(site: LoopSite) -> ProbeResult:
        key = cache.key(unit, site.id, compiler)
        hit = cache.get(key)
        if hit is not None:
            return hit
        res = probe_loop(unit, loops, site.id, compiler, workdir)
        cache.put(key, res)
        logger.info("probe loop %d (line %d): %s", site.id, site.line, res.verdict)
        return res

    if jobs > 1 and len(loops) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, loops))
    else:
        results = [one(site) for site in loops]

    excluded = [lp.id for lp in loops if outermost_only and lp.depth > 0]
    candidates = tuple(r.loop_id for r in results if r.parallelizable and r.loop_id not in excluded)
    report = ProbeReport(unit, list(loops), results, CandidateSet(unit, tuple(loops), candidates), excluded)
    if not candidates:
        raise NoCandidates(report)
    return report


__all__ = [
    "RejectClass", "DEFAULT_RULES", "CompilerDriver", "CompilerNotFound", "NoCandidates",
    "ProbeResult", "ProbeReport", "classify", "probe_loop", "build_candidate_set",
]

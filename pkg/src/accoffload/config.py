"""Run configuration: one JSON file, optionally overridden by CLI flags.

Example::

    {
      "source": "matmul.c",
      "workdir": "run",
      "ga": {"population": 12, "generations": 12, "crossover_rate": 0.9,
             "mutation_rate": 0.05, "seed": 0, "elite_count": 1},
      "toolchain": {"compile_cmd": "nvc -acc -Minfo=accel {src} -o {out}",
                    "bench_cmd": "{exe}", "time_regex": "elapsed: ([0-9.]+)",
                    "timeout_s": 120, "jobs": 1, "repetitions": 1},
      "candidates": "all"
    }

Relative paths resolve against the config file's directory. Either
``toolchain`` or ``sim_model`` drives evaluation, never both.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .evaluator import ToolchainConfig
from .ga_core import GAParams


class ConfigError(ValueError):
    pass


@dataclass
class ProbeConfig:
    compile_cmd: str | None = None
    timeout_s: float = 120.0
    jobs: int = 1
    rules: list[tuple[str, str]] | None = None
    cache: bool = True


@dataclass
class Outputs:
    generations_csv: str = "generations.csv"
    summary_json: str = "summary.json"
    cache: str = "cache.jsonl"
    probe_report: str = "probe.jsonl"
    analysis_json: str = "analysis.json"
    best_source: str | None = None


@dataclass
class RunConfig:
    source: Path | None
    workdir: Path
    ga: GAParams = field(default_factory=GAParams)
    toolchain: ToolchainConfig | None = None
    sim_model: Path | None = None
    sim_timeout_s: float = 120.0
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    candidates: str = "all"
    outputs: Outputs = field(default_factory=Outputs)

    def validate(self) -> "RunConfig":
        if (self.toolchain is None) == (self.sim_model is None):
            raise ConfigError("exactly one of 'toolchain' and 'sim_model' must be configured")
        if self.candidates not in ("all", "outermost"):
            raise ConfigError("candidates must be 'all' or 'outermost'")
        if self.toolchain is not None and self.source is None:
            raise ConfigError("toolchain runs need a 'source' file")
        if self.toolchain is not None and self.toolchain.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self

    @property
    def compile_cmd_for_probe(self) -> str | None:
        if self.probe.compile_cmd:
            return self.probe.compile_cmd
        return self.toolchain.compile_cmd if self.toolchain else None

    def best_source_name(self) -> str | None:
        if self.outputs.best_source:
            return self.outputs.best_source
        return f"best_{self.source.name}" if self.source else None

    def resolved(self) -> dict[str, Any]:
        d = {
            "source": str(self.source) if self.source else None,
            "workdir": str(self.workdir),
            "ga": asdict(self.ga),
            "toolchain": asdict(self.toolchain) if self.toolchain else None,
            "sim_model": str(self.sim_model) if self.sim_model else None,
            "sim_timeout_s": self.sim_timeout_s,
            "probe": asdict(self.probe),
            "candidates": self.candidates,
            "outputs": asdict(self.outputs),
        }
        return d

    def write_resolved(self, path: Path):
        path.write_text(json.dumps(self.resolved(), indent=2, sort_keys=True) + "\n")


def _build(cls, data: dict | None, what: str):
    data = dict(data or {})
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad '{what}' section: {exc}") from None


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read a config file and apply flag overrides.

    Recognised overrides: seed, sim_model, workdir, population,
    generations, jobs.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    known = {"source", "workdir", "ga", "toolchain", "sim_model", "sim_timeout_s", "probe", "candidates", "outputs"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    base = path.resolve().parent
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}

    def rel(p):
        return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

    ga_raw = dict(raw.get("ga") or {})
    for key in ("seed", "population", "generations"):
        if key in ov:
            ga_raw[key] = ov[key]
    try:
        ga = GAParams(**ga_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'ga' section: {exc}") from None

    toolchain = _build(ToolchainConfig, raw["toolchain"], "toolchain") if raw.get("toolchain") else None
    sim_model = rel(raw.get("sim_model"))
    if "sim_model" in ov:
        sim_model = Path(ov["sim_model"]).resolve()
        toolchain = None
    if toolchain is not None and "jobs" in ov:
        toolchain = replace(toolchain, jobs=ov["jobs"])

    probe = _build(ProbeConfig, raw.get("probe"), "probe")
    if probe.rules is not None:
        probe.rules = [tuple(r) for r in probe.rules]
    cfg = RunConfig(
        source=rel(raw.get("source")),
        workdir=Path(ov["workdir"]).resolve() if "workdir" in ov else rel(raw.get("workdir", "run")),
        ga=ga,
        toolchain=toolchain,
        sim_model=sim_model,
        sim_timeout_s=float(raw.get("sim_timeout_s", 120.0)),
        probe=probe,
        candidates=raw.get("candidates", "all"),
        outputs=_build(Outputs, raw.get("outputs"), "outputs"),
    )
    return cfg.validate()

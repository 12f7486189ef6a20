"""Synthetic offload cost model and the brute-force oracle over it.

A model predicts the benchmark time of a genome as

    serial + sum(compute_i for loops left on the CPU)
           + sum(compute_i / speedup_i + transfer_i for offloaded loops)
           + sum(J_ij for offloaded pairs i < j)

Model files are JSON::

    {"serial_s": 1.0,
     "loops": [{"compute_s": 80, "speedup": 40, "transfer_s": 2}, ...],
     "interactions": [[0, 1, 0.5]],
     "fail": ["0110"]}
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

MAX_EXHAUSTIVE = 20
FULL_CHECK_LIMIT = 16


class ModelError(ValueError):
    pass


class ModelGenomeMismatch(ModelError):
    pass


class GeneLengthTooLarge(ModelError):
    pass


class SimulatedCompileError(Exception):
    """Raised by model_time for genomes listed in the model's fail set."""


@dataclass(frozen=True)
class LoopCost:
    compute_s: float
    speedup: float = 1.0
    transfer_s: float = 0.0

    @property
    def offloaded_s(self) -> float:
        return self.compute_s / self.speedup + self.transfer_s


@dataclass(frozen=True)
class CostModel:
    serial_s: float
    loops: tuple[LoopCost, ...]
    interactions: tuple[tuple[int, int, float], ...] = ()
    fail: frozenset[str] = field(default_factory=frozenset)
    name: str = ""

    @property
    def gene_length(self) -> int:
        return len(self.loops)

    @property
    def baseline_s(self) -> float:
        return self.model_time((0,) * self.gene_length)

    def _bits(self, genome: Sequence[int]) -> tuple[int, ...]:
        bits = tuple(int(b) for b in genome)
        if len(bits) != self.gene_length:
            raise ModelGenomeMismatch(f"genome length {len(bits)} != model loops {self.gene_length}")
        return bits

    def model_time(self, genome: Sequence[int]) -> float:
        bits = self._bits(genome)
        key = "".join(map(str, bits))
        if key in self.fail:
            raise SimulatedCompileError(key)
        terms = [self.serial_s]
        for b, lp in zip(bits, self.loops):
            terms.append(lp.offloaded_s if b else lp.compute_s)
        for i, j, v in self.interactions:
            if bits[i] and bits[j]:
                terms.append(v)
        return math.fsum(terms)

    def all_times(self) -> np.ndarray:
        """Times of all 2^a genomes; index k has bit i = (k >> (a-1-i)) & 1."""
        a = self.gene_length
        if a > MAX_EXHAUSTIVE:
            raise GeneLengthTooLarge(f"2^{a} genomes is too many to enumerate")
        if a == 0:
            return np.array([self.serial_s])
        k = np.arange(2 ** a, dtype=np.int64)
        bits = np.stack([(k >> (a - 1 - i)) & 1 for i in range(a)], axis=1)
        cpu = np.array([lp.compute_s for lp in self.loops], dtype=float)
        gpu = np.array([lp.offloaded_s for lp in self.loops], dtype=float)
        t = self.serial_s + np.where(bits == 1, gpu, cpu).sum(axis=1)
        for i, j, v in self.interactions:
            t = t + v * (bits[:, i] & bits[:, j])
        return t

    def validate(self):
        if self.serial_s < 0:
            raise ModelError("serial_s must be non-negative")
        for n, lp in enumerate(self.loops):
            if lp.compute_s < 0 or lp.speedup < 1 or lp.transfer_s < 0:
                raise ModelError(f"loop {n}: need compute_s >= 0, speedup >= 1, transfer_s >= 0")
        a = self.gene_length
        for i, j, _ in self.interactions:
            if not (0 <= i < a and 0 <= j < a and i != j):
                raise ModelError(f"bad interaction pair ({i}, {j})")
        for g in self.fail:
            if len(g) != a or set(g) - {"0", "1"}:
                raise ModelError(f"bad fail genome {g!r}")
        if a <= FULL_CHECK_LIMIT:
            times = self.all_times()
        else:
            rng = np.random.default_rng(0)
            sample = rng.integers(0, 2, size=(4096, a))
            times = np.array([self.model_time(g) for g in sample if "".join(map(str, g)) not in self.fail])
        if not np.all(times > 0):
            raise ModelError("model yields non-positive times for some genome")
        return self

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "serial_s": self.serial_s,
            "loops": [{"compute_s": lp.compute_s, "speedup": lp.speedup, "transfer_s": lp.transfer_s}
                      for lp in self.loops],
            "interactions": [[i, j, v] for i, j, v in self.interactions],
            "fail": sorted(self.fail),
        }

    @classmethod
    def from_json(cls, d: dict) -> "CostModel":
        return cls(
            serial_s=float(d["serial_s"]),
            loops=tuple(LoopCost(float(x["compute_s"]), float(x.get("speedup", 1.0)), float(x.get("transfer_s", 0.0)))
                        for x in d["loops"]),
            interactions=tuple((int(i), int(j), float(v)) for i, j, v in d.get("interactions", [])),
            fail=frozenset(d.get("fail", [])),
            name=d.get("name", ""),
        ).validate()


def load_model(path: str | Path) -> CostModel:
    with open(path) as fh:
        model = CostModel.from_json(json.load(fh))
    if not model.name:
        model = CostModel(model.serial_s, model.loops, model.interactions, model.fail, Path(path).stem)
    return model


FIXTURES = ("separable12", "interaction12", "matrix12")


def load_fixture(name: str) -> CostModel:
    ref = resources.files("accoffload") / "fixtures" / "models" / f"{name}.json"
    with ref.open() as fh:
        return CostModel.from_json(json.load(fh))


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("accoffload") / "fixtures" / "models" / f"{name}.json"))


def exhaustive_best(model: CostModel) -> tuple[tuple[int, ...], float]:
    """Fastest genome by enumeration; ties go to the smallest bit string."""
    a = model.gene_length
    if a > MAX_EXHAUSTIVE:
        raise GeneLengthTooLarge(f"gene length {a} exceeds {MAX_EXHAUSTIVE}")
    best: tuple[int, ...] | None = None
    best_t = math.inf
    # itertools.product yields genomes in lexicographic order, so strict < keeps the smallest on ties
    for g in itertools.product((0, 1), repeat=a):
        if "".join(map(str, g)) in model.fail:
            continue
        t = model.model_time(g)
        if t < best_t:
            best, best_t = g, t
    if best is None:
        raise ModelError("every genome is in the fail set")
    return best, best_t


def separable_rule(model: CostModel) -> tuple[int, ...]:
    """Per-loop optimum for models without interactions."""
    return tuple(int(lp.offloaded_s < lp.compute_s) for lp in model.loops)

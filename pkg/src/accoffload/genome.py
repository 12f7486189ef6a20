from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True, order=True)
class Genome:
    """Offload bitmap over the candidate loops; bit k = 1 puts the directive on loop k."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"genome bits must be 0/1, got {self.bits!r}")

    @classmethod
    def of(cls, bits: Iterable[int]) -> "Genome":
        return cls(tuple(int(b) for b in bits))

    @classmethod
    def parse(cls, s: str) -> "Genome":
        return cls(tuple(int(c) for c in s))

    @classmethod
    def zeros(cls, n: int) -> "Genome":
        return cls((0,) * n)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def ones(self) -> int:
        return sum(self.bits)

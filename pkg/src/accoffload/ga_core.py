"""Simple GA over offload bitmaps.

One ``random.Random`` drives everything. Within a generation the draws
happen in this order: roulette picks for every offspring slot, then per
parent pair one crossover coin (and a cut point if it lands), then
mutation coins for each offspring bit in order.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Callable, Sequence

from .evaluator import EvaluationOutcome, Status
from .genome import Genome
from .source_model import CandidateSet, render_variant

logger = logging.getLogger(__name__)

FAILURE_EPSILON = 1e-3


class GAError(RuntimeError):
    pass


class NonPositiveTime(ValueError):
    pass


class ZeroTotalFitness(GAError):
    pass


class LengthMismatch(ValueError):
    pass


class EvaluatorUnavailable(GAError):
    pass


class NoCandidates(GAError):
    pass


@dataclass(frozen=True)
class GAParams:
    population: int = 12
    generations: int = 12
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    seed: int = 0
    elite_count: int = 1

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        if not 1 <= self.elite_count < self.population:
            raise ValueError("elite_count must be in [1, population)")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


class IndividualStatus(str, enum.Enum):
    UNEVALUATED = "Unevaluated"
    MEASURED = "Measured"
    FAILED = "Failed"


@dataclass(frozen=True)
class Individual:
    genome: Genome
    time_s: float | None = None
    fitness: float | None = None
    status: IndividualStatus = IndividualStatus.UNEVALUATED

    def rank_key(self):
        # lowest time first, then smallest bit string; failed individuals last
        if self.status is IndividualStatus.MEASURED:
            return (0, self.time_s, str(self.genome))
        return (1, -(self.fitness or 0.0), str(self.genome))


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_time: float
    best_speedup: float
    best_genome: Genome
    mean_fitness: float
    distinct_evals: int
    cache_hits: int

    CSV_HEADER = "generation,best_time_s,best_speedup,best_genome,mean_fitness,distinct_evals,cache_hits"

    def csv_row(self) -> str:
        return (f"{self.generation},{self.best_time!r},{self.best_speedup!r},{self.best_genome},"
                f"{self.mean_fitness!r},{self.distinct_evals},{self.cache_hits}")


@dataclass
class TuningResult:
    best_genome: Genome
    best_time: float
    baseline_time: float
    stats: list[GenerationStats]
    distinct_evals: int
    cache_hits: int
    elapsed_s: float
    best_source: str | None = None
    history: dict[Genome, EvaluationOutcome] = field(default_factory=dict, repr=False)

    @property
    def speedup(self) -> float:
        return self.baseline_time / self.best_time

    def summary(self) -> dict:
        return {
            "baseline_s": self.baseline_time,
            "best_s": self.best_time,
            "speedup": self.speedup,
            "best_genome": str(self.best_genome),
            "distinct_evals": self.distinct_evals,
            "elapsed_s": self.elapsed_s,
        }


def fitness_from_time(t: float) -> float:
    if not t > 0:
        raise NonPositiveTime(f"benchmark time must be positive, got {t!r}")
    return t ** -0.5


def init_population(a: int, params: GAParams, rng: random.Random) -> list[Genome]:
    if a < 1:
        raise ValueError("gene length must be at least 1")
    return [Genome(tuple(rng.getrandbits(1) for _ in range(a))) for _ in range(params.population)]


def roulette_select(population: Sequence[Individual], count: int, rng: random.Random) -> list[Genome]:
    """Draw ``count`` genomes with replacement, proportional to fitness."""
    weights = [ind.fitness for ind in population]
    if any(w is None for w in weights):
        raise ValueError("every individual needs a fitness before selection")
    cum = list(accumulate(weights))
    total = cum[-1] if cum else 0.0
    if not total > 0:
        raise ZeroTotalFitness("all individuals have zero fitness")
    picks = []
    for _ in range(count):
        k = bisect_right(cum, rng.random() * total)
        picks.append(population[min(k, len(population) - 1)].genome)
    return picks


def one_point_crossover(p1: Genome, p2: Genome, rng: random.Random, cut: int | None = None) -> tuple[Genome, Genome]:
    a = len(p1)
    if len(p2) != a:
        raise LengthMismatch(f"parents have lengths {a} and {len(p2)}")
    if a < 2:
        raise LengthMismatch("crossover needs genomes of length >= 2")
    k = rng.randint(1, a - 1) if cut is None else cut
    return (Genome(p1.bits[:k] + p2.bits[k:]), Genome(p2.bits[:k] + p1.bits[k:]))


def mutate(g: Genome, pm: float, rng: random.Random) -> Genome:
    return Genome(tuple(b ^ 1 if rng.random() < pm else b for b in g.bits))


def best_of(population: Sequence[Individual]) -> Individual:
    return min(population, key=Individual.rank_key)


def evolve_generation(population: Sequence[Individual], params: GAParams, rng: random.Random) -> list[Genome]:
    """Genomes of the next generation: elites first, then offspring."""
    ranked = sorted(population, key=Individual.rank_key)
    elites = [ind.genome for ind in ranked[: params.elite_count]]
    n = params.population - params.elite_count
    parents = roulette_select(population, n, rng)
    a = len(parents[0]) if parents else 0
    children: list[Genome] = []
    for i in range(0, n - 1, 2):
        p1, p2 = parents[i], parents[i + 1]
        if rng.random() < params.crossover_rate and a >= 2:
            p1, p2 = one_point_crossover(p1, p2, rng)
        children += [p1, p2]
    if n % 2:
        children.append(parents[-1])
    children = [mutate(c, params.mutation_rate, rng) for c in children]
    return elites + children


EvaluateFn = Callable[[list[Genome]], list[EvaluationOutcome]]


class _Tracker:
    """Run-wide bookkeeping: distinct genomes, cache hits, best-so-far."""

    def __init__(self, evaluate: EvaluateFn):
        self.evaluate = evaluate
        self.seen: dict[Genome, EvaluationOutcome] = {}
        self.requests = 0
        self.min_fitness = math.inf
        self.best: Individual | None = None

    def measure(self, genomes: list[Genome]) -> list[EvaluationOutcome]:
        outcomes = self.evaluate(genomes)
        if len(outcomes) != len(genomes):
            raise EvaluatorUnavailable("evaluator returned a wrong number of outcomes")
        self.requests += len(genomes)
        for g, out in zip(genomes, outcomes):
            self.seen.setdefault(g, out)
            if out.has_time:
                self.min_fitness = min(self.min_fitness, fitness_from_time(out.time_s))
        return outcomes

    def individual(self, out: EvaluationOutcome) -> Individual:
        if out.has_time:
            return Individual(out.genome, out.time_s, fitness_from_time(out.time_s), IndividualStatus.MEASURED)
        return Individual(out.genome, None, FAILURE_EPSILON * self.min_fitness, IndividualStatus.FAILED)

    def offer(self, pop: Sequence[Individual]):
        cand = best_of(pop)
        if cand.status is IndividualStatus.MEASURED and (self.best is None or cand.rank_key() < self.best.rank_key()):
            self.best = cand

    @property
    def distinct(self) -> int:
        return len(self.seen)

    @property
    def hits(self) -> int:
        return self.requests - len(self.seen)


def run_ga(cs: CandidateSet | int, params: GAParams, evaluate: EvaluateFn,
           on_generation: Callable[[GenerationStats], None] | None = None) -> TuningResult:
    """Baseline, then ``params.generations`` evaluated generations.

    ``evaluate`` maps a list of genomes to outcomes in the same order.
    Row 0 of the stats is the all-CPU baseline; best values are the best
    measured so far, so they never increase.
    """
    a = cs if isinstance(cs, int) else cs.gene_length
    if a < 1:
        raise NoCandidates("gene length is zero; nothing to tune")
    rng = random.Random(params.seed)
    track = _Tracker(evaluate)

    base_out = track.measure([Genome.zeros(a)])[0]
    if base_out.status is not Status.OK:
        raise EvaluatorUnavailable(f"baseline (all-CPU) evaluation failed: {base_out.status.value}")
    baseline = track.individual(base_out)
    track.offer([baseline])
    baseline_t = base_out.time_s

    stats: list[GenerationStats] = []

    def record(gen: int, pop: Sequence[Individual]):
        best = track.best
        mean_fit = math.fsum(ind.fitness for ind in pop) / len(pop)
        st = GenerationStats(gen, best.time_s, baseline_t / best.time_s, best.genome, mean_fit,
                             track.distinct, track.hits)
        stats.append(st)
        logger.info("gen %d best %.6g s (%.2fx) %s", gen, st.best_time, st.best_speedup, st.best_genome)
        if on_generation:
            on_generation(st)

    record(0, [baseline])

    genomes = init_population(a, params, rng)
    population = [track.individual(o) for o in track.measure(genomes)]
    track.offer(population)
    record(1, population)

    for gen in range(2, params.generations + 1):
        nxt = evolve_generation(population, params, rng)
        elites = sorted(population, key=Individual.rank_key)[: params.elite_count]
        offspring = nxt[params.elite_count:]
        # elites carry their measurement; re-derive fitness so a moving failure penalty stays consistent
        carried = [track.individual(track.seen[e.genome]) for e in elites]
        fresh = [track.individual(o) for o in track.measure(offspring)]
        population = carried + fresh
        track.offer(population)
        record(gen, population)

    best = track.best
    source = render_variant(cs, best.genome.bits) if isinstance(cs, CandidateSet) else None
    elapsed = math.fsum(o.wall_cost_s for o in track.seen.values())
    return TuningResult(best.genome, best.time_s, baseline_t, stats, track.distinct, track.hits,
                        elapsed, source, dict(track.seen))

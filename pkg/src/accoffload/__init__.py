"""Find which ``for`` loops of a C/C++ program to offload with ``#pragma acc kernels``.

Pipeline: scan loops, probe each one alone with the compiler, then run a
simple genetic algorithm over the surviving loops, measuring every new
combination once.
"""

from .genome import Genome
from .ga_core import GAParams, TuningResult, fitness_from_time, run_ga
from .sim_model import CostModel, exhaustive_best, load_fixture, load_model
from .source_model import CandidateSet, LoopSite, SourceUnit, render_variant, scan_loops

__version__ = "0.1.0"

__all__ = [
    "Genome", "GAParams", "TuningResult", "fitness_from_time", "run_ga",
    "CostModel", "exhaustive_best", "load_fixture", "load_model",
    "CandidateSet", "LoopSite", "SourceUnit", "render_variant", "scan_loops",
]

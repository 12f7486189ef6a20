import json
import shlex
import sys
from pathlib import Path

import pytest

from accoffload.sim_model import fixture_path

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "accoffload" / "fixtures"
SRC = FIXTURES / "src"
MODELS = FIXTURES / "models"

MOCKCC = f"{shlex.quote(sys.executable)} -m accoffload.mockcc"


def mock_compile_cmd(*flags: str) -> str:
    return " ".join([MOCKCC, *flags, "{src}", "{out}"])


def write_config(path: Path, **sections) -> Path:
    path.write_text(json.dumps(sections, indent=1))
    return path


@pytest.fixture
def matmul_src() -> Path:
    return SRC / "matmul.c"


@pytest.fixture
def sim_config(tmp_path):
    """Factory for a sim-backed tune config over the matmul source."""

    def make(model="matrix12", workdir="run", **ga):
        ga_section = {"population": 12, "generations": 12, "crossover_rate": 0.9,
                      "mutation_rate": 0.05, "seed": 0, **ga}
        return write_config(tmp_path / f"{workdir}.json", source=str(SRC / "matmul.c"), workdir=workdir,
                            probe={"compile_cmd": mock_compile_cmd()}, sim_model=str(fixture_path(model)),
                            ga=ga_section)

    return make

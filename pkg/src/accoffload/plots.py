"""Figures for the report command. Uses the Agg backend; nothing is shown."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_generations(rows: Sequence, path: Path, title: str | None = None) -> Path:
    """Best speedup over the all-CPU baseline per generation (step plot)."""
    gens = [r.generation for r in rows]
    speedup = [r.best_speedup for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.step(gens, speedup, where="post", color="tab:blue", lw=1.8)
    ax.plot(gens, speedup, "o", color="tab:blue", ms=4)
    ax.set_xlabel("GA generation")
    ax.set_ylabel("best speedup vs. CPU only")
    ax.set_xlim(min(gens) - 0.3, max(gens) + 0.3)
    ax.set_ylim(bottom=0)
    ax.grid(alpha=0.3)
    ax.annotate(f"{speedup[-1]:.2f}x", (gens[-1], speedup[-1]), textcoords="offset points",
                xytext=(-8, 6), ha="right", fontsize=9)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

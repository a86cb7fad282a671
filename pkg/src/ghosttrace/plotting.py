"""Figures for benchmark results."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import Overhead  # noqa: E402

RATIO_BOUND = 20.0


def overhead_figure(rows: Sequence[Overhead], path, bound: float = RATIO_BOUND) -> Path:
    """Bar chart of instrumented/original time ratios, one bar per program."""
    path = Path(path)
    names = [Path(r.program).stem for r in rows]
    ratios = [r.ratio for r in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.5 * len(rows) + 2), 4.0))
    ax.bar(range(len(rows)), ratios, color="#4c72b0")
    ax.axhline(bound, color="#c44e52", linestyle="--", linewidth=1, label=f"bound ({bound:g}x)")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("instrumented / original time")
    ax.set_ylim(0, max([bound, *ratios]) * 1.1)
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("Instrumentation overhead")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path

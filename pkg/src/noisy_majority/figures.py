"""Matplotlib rendering of the report figures.

The command line writes these PNGs next to the delimited output so a run
leaves both the data and a ready-to-read picture.  The standalone plot
scripts emitted alongside regenerate the same figures from the CSVs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import NOISE_THRESHOLD, equilibrium_bias, theorem_thresholds
from .harness import PhasePoint

__all__ = ["render_sweep_figure", "render_trajectory_figure"]


def render_sweep_figure(points: list[PhasePoint], n: int, path: str | Path) -> Path:
    """Phase diagram: mean |s|/n against p, threshold and prediction marked."""
    path = Path(path)
    p = [pt.p for pt in points]
    bias = [pt.mean_abs_bias_over_n for pt in points]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    grid = np.linspace(min(p), max(p), 400)
    predicted = [
        (equilibrium_bias(n, x) or 0.0) / n if x < NOISE_THRESHOLD else 0.0
        for x in grid
    ]
    ax.plot(grid, predicted, color="0.6", linewidth=1.0, label="equilibrium |s|/n")
    ax.plot(p, bias, marker="o", linestyle="-", color="tab:blue", label="measured")
    ax.axvline(NOISE_THRESHOLD, color="tab:red", linestyle="--", label="p = 1/3")
    ax.set_xlabel("noise probability p")
    ax.set_ylabel("mean |s| / n")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trajectory_figure(
    biases: np.ndarray, n: int, p: float, gamma: float, path: str | Path
) -> Path:
    """Bias trajectory with the equilibrium and break levels marked."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(np.arange(len(biases)), biases, color="tab:blue", linewidth=0.9, label="bias")
    s_eq = equilibrium_bias(n, p) if p < NOISE_THRESHOLD else None
    if s_eq is not None:
        ax.axhline(s_eq, color="tab:green", linewidth=0.8, label="equilibrium bias")
        ax.axhline(-s_eq, color="tab:green", linewidth=0.8)
    level = theorem_thresholds(n, p, gamma=gamma).symmetry_break_level
    ax.axhline(level, color="tab:orange", linestyle=":", linewidth=0.8,
               label="gamma*sqrt(n ln n)")
    ax.axhline(-level, color="tab:orange", linestyle=":", linewidth=0.8)
    ax.set_xlabel("round")
    ax.set_ylabel("bias s")
    ax.set_title(f"n={n}, p={p:g}")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

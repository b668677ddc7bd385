"""File-based matplotlib renderings of runs and sweep results.

Everything renders through the Agg backend straight to image files; nothing
here ever opens a window.  These are companions to the delimited outputs,
not replacements: the CSVs stay the interface of record.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import SimulationResult
from .experiments import GridResult, MatrixResult, ThresholdResult


def save_trajectory(result: SimulationResult, path: str | Path) -> None:
    """Per-agent value trajectories with the safety interval shaded."""
    n = len(result.initial_values)
    rounds = [0] + [t.k + 1 for t in result.traces]
    series = np.empty((len(rounds), n))
    series[0] = result.initial_values
    for row, t in enumerate(result.traces, start=1):
        series[row] = t.values
    fig, ax = plt.subplots(figsize=(8, 4.5))
    lo, hi = result.verdict.safety_interval
    ax.axhspan(lo, hi, color="tab:green", alpha=0.12, label="safety interval")
    for i in range(n):
        ax.plot(rounds, series[:, i], lw=1.0, alpha=0.8 if n <= 12 else 0.4)
    if result.verdict.rounds_to_converge is not None:
        ax.axvline(
            result.verdict.rounds_to_converge,
            color="tab:gray",
            ls="--",
            lw=1.0,
            label=f"converged at k={result.verdict.rounds_to_converge}",
        )
    ax.set_xlabel("round")
    ax.set_ylabel("value")
    ax.set_title(
        f"{result.config.protocol} / {result.config.adversary.model}, "
        f"n={n}, f={result.config.adversary.f}, f_real={result.config.adversary.f_real}"
    )
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_grid(result: GridResult, path: str | Path) -> None:
    """Success-rate heatmap over (f_real, radius)."""
    spec = result.spec
    levels = list(spec.f_real_levels)
    radii = list(spec.radii)
    mat = np.array([[result.rate(fr, r) for r in radii] for fr in levels])
    fig, ax = plt.subplots(figsize=(1.2 + 0.55 * len(radii), 1.2 + 0.45 * len(levels)))
    im = ax.imshow(mat, origin="lower", aspect="auto", vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(radii)), [f"{r:g}" for r in radii], rotation=45, fontsize=8)
    ax.set_yticks(range(len(levels)), [str(fr) for fr in levels], fontsize=8)
    ax.set_xlabel("radius")
    ax.set_ylabel("f_real")
    ax.set_title(f"success rate: {spec.protocol} / {spec.model}, f={spec.f}, n={spec.n}")
    if len(radii) * len(levels) <= 200:
        for yi, fr in enumerate(levels):
            for xi, _ in enumerate(radii):
                ax.text(
                    xi,
                    yi,
                    f"{mat[yi, xi]:.2f}".rstrip("0").rstrip("."),
                    ha="center",
                    va="center",
                    fontsize=7,
                    color="white" if mat[yi, xi] < 0.6 else "black",
                )
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_matrix(result: MatrixResult, path: str | Path) -> None:
    """Annotated table of the max tolerated f_real per protocol/model."""
    rows = result.protocols
    cols = result.models
    mat = np.array([[result.max_f_real[(p, m)] for m in cols] for p in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(1.5 + 1.0 * len(cols), 1.0 + 0.6 * len(rows)))
    im = ax.imshow(mat, cmap="YlGn", aspect="auto")
    ax.set_xticks(range(len(cols)), [str(m) for m in cols])
    ax.set_yticks(range(len(rows)), [str(p) for p in rows])
    for yi in range(len(rows)):
        for xi in range(len(cols)):
            ax.text(xi, yi, f"{int(mat[yi, xi])}", ha="center", va="center", fontsize=11)
    ax.set_title(f"max tolerated f_real (f={result.f}, radius={result.radius:g})")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_thresholds(results: Sequence[ThresholdResult], path: str | Path) -> None:
    """Mean threshold radius per sweep, with per-topology scatter.

    Topologies where no grid radius succeeded are drawn as open markers
    pinned above the grid.
    """
    fig, ax = plt.subplots(figsize=(1.5 + 1.1 * max(len(results), 1), 4.2))
    labels = []
    top = 0.0
    for res in results:
        top = max(top, max(res.spec.radii))
    fail_y = top * 1.08 if top else 1.0
    for xi, res in enumerate(results):
        spec = res.spec
        labels.append(f"{spec.protocol}/{spec.model}\nf={spec.f}")
        found = [r for r in res.thresholds.values() if r is not None]
        missing = sum(1 for r in res.thresholds.values() if r is None)
        jitter = np.linspace(-0.18, 0.18, len(res.thresholds))
        yvals = [r if r is not None else fail_y for r in res.thresholds.values()]
        filled = [r is not None for r in res.thresholds.values()]
        for dx, y, ok in zip(jitter, yvals, filled):
            ax.plot(
                xi + dx,
                y,
                marker="o",
                ms=5,
                mfc="tab:blue" if ok else "none",
                mec="tab:blue" if ok else "tab:red",
                ls="none",
            )
        if found:
            ax.plot(
                [xi - 0.25, xi + 0.25],
                [float(np.mean(found))] * 2,
                color="tab:orange",
                lw=2.0,
            )
        if missing:
            ax.text(xi, fail_y * 1.02, f"{missing} none", ha="center", fontsize=7, color="tab:red")
    ax.set_xticks(range(len(results)), labels, fontsize=8)
    ax.set_ylabel("threshold radius")
    ax.set_title("smallest all-success radius per topology")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

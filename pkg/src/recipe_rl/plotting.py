"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def new_figure(width=6.4, height=None, nrows=1, ncols=1):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if not height:
        height = width * golden_ratio
    fig, ax = plt.subplots(nrows, ncols, figsize=(width, height))
    return fig, ax


def save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def learning_curves(curves: dict[str, list], path, threshold: float | None = None) -> None:
    """Best-so-far objective and per-episode reward for one or more runs.

    ``curves`` maps a label (e.g. ``"seed 3"``) to a list of EpisodeRecord.
    """
    fig, (ax_best, ax_reward) = new_figure(7.0, 6.0, nrows=2)
    for label, curve in curves.items():
        ep = [r.episode for r in curve]
        ax_best.step(ep, [r.best_f for r in curve], where="post", label=label, lw=1.2)
        ax_reward.plot(ep, [r.episode_reward for r in curve], lw=0.8, label=label)
    if threshold is not None:
        ax_best.axhline(threshold, color="k", ls="--", lw=0.8, label="oracle 0.5% quantile")
    ax_best.set_ylabel("best objective so far")
    ax_best.set_yscale("symlog", linthresh=1e-3)
    ax_reward.set_ylabel("episode reward")
    ax_reward.set_xlabel("episode")
    if len(curves) <= 10:
        ax_best.legend(fontsize=7, ncol=2)
    save(fig, path)


def objective_histogram(values: np.ndarray, path, optimum: float, marks: dict[str, float] | None = None) -> None:
    fig, ax = new_figure()
    ax.hist(values, bins=80, color="0.6")
    ax.axvline(optimum, color="C3", lw=1.2, label=f"optimum {optimum:.4g}")
    for label, x in (marks or {}).items():
        ax.axvline(x, ls="--", lw=0.8, label=f"{label} {x:.4g}")
    ax.set_xlabel("objective (color gap)")
    ax.set_ylabel("states")
    ax.legend(fontsize=8)
    save(fig, path)

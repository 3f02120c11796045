"""Static SVG figures: regret curves with one-std bands and a runtime bar chart."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulator import PolicyAggregate  # noqa: E402

plt.rcParams["svg.hashsalt"] = "infex"
plt.rcParams["svg.fonttype"] = "path"


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_regret(aggregates: list[PolicyAggregate], path: Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for agg in aggregates:
        line = ax.plot(agg.checkpoints, agg.mean_curve, label=agg.label, lw=1.4)[0]
        ax.fill_between(
            agg.checkpoints,
            agg.mean_curve - agg.std_curve,
            agg.mean_curve + agg.std_curve,
            color=line.get_color(),
            alpha=0.15,
            lw=0,
        )
    ax.set_xlabel("time step")
    ax.set_ylabel("cumulative regret")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save(fig, path)


def plot_runtime(aggregates: list[PolicyAggregate], path: Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = [agg.label for agg in aggregates]
    means = [agg.mean_ns / 1e9 for agg in aggregates]
    stds = [agg.std_ns / 1e9 for agg in aggregates]
    ax.bar(range(len(labels)), means, yerr=stds, capsize=3, color="tab:blue", alpha=0.8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("selection + update time (s)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)

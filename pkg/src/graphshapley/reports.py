"""Figure rendering for the evaluation reports.

Each plot is written next to its CSV so a report directory is
self-contained: delimited data for machines, a PNG for humans.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_histogram(histogram: dict[int, int], path: str,
                   title: str = "Noisy variables in top-k explanations") -> None:
    buckets = sorted(histogram)
    counts = [histogram[b] for b in buckets]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(buckets, counts, color="#4878cf", edgecolor="black", linewidth=0.5)
    ax.set_xlabel("noisy variables among top-k")
    ax.set_ylabel("explanations")
    ax.set_title(title)
    ax.set_xticks(buckets)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ablation(results: dict[str, float], path: str,
                  title: str = "Mask strategy ablation") -> None:
    names = list(results)
    values = [results[n] for n in names]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(names, values, color="#6acc65", edgecolor="black", linewidth=0.5)
    ax.set_ylabel("motif accuracy")
    ax.set_ylim(0, 1.05)
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_timing(timings: dict[int, float], path: str,
                title: str = "Seconds per explanation vs. sample budget") -> None:
    budgets = sorted(timings)
    seconds = [timings[p] for p in budgets]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(budgets, seconds, marker="o", color="#d65f5f")
    ax.set_xlabel("samples P")
    ax.set_ylabel("seconds per explanation")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_explanation(phi_nodes: dict[int, float], phi_features: dict[int, float],
                     path: str, title: str = "Explanation coefficients") -> None:
    """Two-panel bar chart of node and feature attributions."""
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    for ax, data, label in ((axes[0], phi_nodes, "node"),
                            (axes[1], phi_features, "feature")):
        if data:
            ids = sorted(data, key=lambda k: -abs(data[k]))[:15]
            ax.barh([str(i) for i in ids][::-1], [data[i] for i in ids][::-1],
                    color="#4878cf")
        ax.set_xlabel("contribution")
        ax.set_title(f"top {label}s")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

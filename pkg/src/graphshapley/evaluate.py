"""Evaluation harness: ground-truth accuracy, noise robustness, strategy
ablation and runtime measurement, with CSV report writers."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import GroundTruth
from .errors import TargetNotInMotif
from .explain import ExplainOptions, Explanation, explain
from .gnn import GnnModel
from .graph import Graph


@dataclass
class AccuracyReport:
    """Top-k hit counts against motif ground truth."""

    k: int
    num_targets: int
    hits: int
    per_node: dict[int, int] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        denom = self.k * self.num_targets
        return self.hits / denom if denom else float("nan")


def motif_accuracy(explanations: list[Explanation], truth: GroundTruth,
                   k: int | None = None) -> AccuracyReport:
    """Binary-classification accuracy of top-k node explanations.

    k defaults to motif_size - 1: the explained node sits in its own motif
    but is never a player, so it is excluded from both ranking and truth.
    """
    if k is None:
        k = truth.motif_size - 1
    hits = 0
    per_node = {}
    counted = 0
    for e in explanations:
        v = e.target
        if v not in truth.motif_nodes:
            raise TargetNotInMotif(f"node {v} has no ground-truth motif")
        motif = set(truth.motif_nodes[v]) - {v}
        top = e.top_nodes(k)
        node_hits = sum(1 for u in top if u in motif)
        per_node[v] = node_hits
        hits += node_hits
        counted += 1
    return AccuracyReport(k=k, num_targets=counted, hits=hits, per_node=per_node)


def noise_inclusion(explanations: list[Explanation], noisy_ids: set[int],
                    k: int, kind: str = "features") -> dict:
    """Histogram of how many noisy variables land in each top-k explanation.

    Returns {"histogram": {0..k: count}, "mean": mean noisy count}.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hist = {i: 0 for i in range(k + 1)}
    counts = []
    for e in explanations:
        top = e.top_features(k) if kind == "features" else e.top_nodes(k)
        n = sum(1 for i in top if i in noisy_ids)
        hist[n] += 1
        counts.append(n)
    return {"histogram": hist, "mean": float(np.mean(counts)) if counts else 0.0}


def explain_targets(g: Graph, model: GnnModel, targets: list[int],
                    options: ExplainOptions, jobs: int = 1) -> list[Explanation]:
    """Explain many nodes; order-stable regardless of the job count."""
    def one(v: int) -> Explanation:
        return explain(g, model, v, replace(options, seed=options.seed + v))

    if jobs <= 1:
        return [one(v) for v in targets]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, targets))


def ablation_run(g: Graph, model: GnnModel, truth: GroundTruth,
                 targets: list[int], strategies: list[str], p: int,
                 seed: int = 0, jobs: int = 1,
                 base_options: ExplainOptions | None = None) -> dict[str, float]:
    """Same model, targets and budget across strategies; per-strategy accuracy."""
    base = base_options or ExplainOptions()
    results = {}
    for strategy in strategies:
        opts = replace(base, strategy=strategy, num_samples=p, seed=seed)
        explanations = explain_targets(g, model, targets, opts, jobs)
        results[strategy] = motif_accuracy(explanations, truth).accuracy
    return results


def timing_run(g: Graph, model: GnnModel, targets: list[int],
               budgets: list[int], seed: int = 0,
               base_options: ExplainOptions | None = None) -> dict[int, float]:
    """Mean wall-clock seconds per explanation at each sample budget."""
    base = base_options or ExplainOptions()
    results = {}
    for p in budgets:
        opts = replace(base, num_samples=p, seed=seed)
        start = time.perf_counter()
        explain_targets(g, model, targets, opts, jobs=1)
        results[p] = (time.perf_counter() - start) / len(targets)
    return results


# --- CSV writers -------------------------------------------------------

def write_accuracy_csv(path: str, rows: list[dict]) -> None:
    """Rows carry strategy, dataset, P, accuracy."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["strategy", "dataset", "P", "accuracy"])
        writer.writeheader()
        writer.writerows(rows)


def write_histogram_csv(path: str, histogram: dict[int, int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket", "count"])
        for bucket in sorted(histogram):
            writer.writerow([bucket, histogram[bucket]])


def write_timing_csv(path: str, timings: dict[int, float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["P", "seconds"])
        for p in sorted(timings):
            writer.writerow([p, f"{timings[p]:.6f}"])

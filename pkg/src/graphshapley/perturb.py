"""Graph generator: turn a coalition mask into a perturbed graph.

Excluded features of the explained node fall back to the dataset mean
(or a contrast vector); excluded player nodes are isolated by dropping
all their incident edges. An optional pass restores the indirect
influence of far neighbors by re-inserting one shortest path to the
explained node, with the intermediate nodes' features neutralized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .gnn import GRAPH_TASK, GnnModel, gcn_forward
from .graph import Graph, k_hop_neighbors, shortest_path
from .masks import MaskBatch, PlayerIndex

NODE_LOCAL = "node-local"
CONTRASTIVE = "contrastive"
GLOBAL_SUBGRAPH_FEATURES = "global-subgraph-features"
GRAPH_TASK_MODE = "graph-task"
GLOBAL_NODE_SET = "global-node-set"

NEUTRAL_MEAN = "mean"
NEUTRAL_COPY_V = "copy-v"


@dataclass
class PerturbConfig:
    """How masks map back to graphs.

    ``feature_baseline`` defaults to the per-column dataset mean. The two
    neutralization modes for intermediate path nodes reflect a genuine
    ambiguity in the source method (mean values vs. a copy of the
    explained node's features); both are selectable.
    """

    mode: str = NODE_LOCAL
    feature_baseline: np.ndarray | None = None
    indirect_effect: bool = False
    contrast_features: np.ndarray | None = None
    global_nodes: tuple[int, ...] = ()
    path_neutralization: Literal["mean", "copy-v"] = NEUTRAL_MEAN
    mc_samples: int = 100
    seed: int = 0


@dataclass
class PerturbSample:
    """One coalition mask with the model output on its perturbed graph."""

    mask: np.ndarray
    output: np.ndarray
    target_score: float


def feature_baseline(g: Graph, cfg: PerturbConfig) -> np.ndarray:
    if cfg.feature_baseline is not None:
        return np.asarray(cfg.feature_baseline, dtype=np.float64)
    return g.features.mean(axis=0)


def _mc_mean(g: Graph, cfg: PerturbConfig) -> np.ndarray:
    """Feature mean estimated from a seeded uniform draw of dataset rows."""
    rng = np.random.default_rng(cfg.seed)
    idx = rng.integers(g.num_nodes, size=cfg.mc_samples)
    return g.features[idx].mean(axis=0)


def gen_perturbed(g: Graph, players: PlayerIndex, mask: np.ndarray,
                  cfg: PerturbConfig | None = None) -> Graph:
    """Apply one coalition mask: masked-out features of v take the baseline
    value, masked-out player nodes lose all their edges. The explained node
    is never isolated directly and non-player nodes keep their edges.
    """
    cfg = cfg or PerturbConfig()
    mask = np.asarray(mask)
    b, d = players.num_features, players.num_nodes
    if mask.shape != (b + d,):
        raise ValueError(f"mask length {mask.shape} != B+D = {b + d}")

    feats = g.features
    off_features = [players.feature_ids[j] for j in range(b) if mask[j] == 0]
    if off_features:
        feats = feats.copy()
        if cfg.mode == CONTRASTIVE:
            baseline = np.asarray(cfg.contrast_features, dtype=np.float64)
        elif cfg.mode == GLOBAL_SUBGRAPH_FEATURES:
            baseline = _mc_mean(g, cfg)
        else:
            baseline = feature_baseline(g, cfg)
        if cfg.mode == GLOBAL_SUBGRAPH_FEATURES and players.v is not None:
            rows = [players.v] + list(players.node_ids)
        elif players.v is not None:
            rows = [players.v]
        else:
            rows = list(range(g.num_nodes))
        for row in rows:
            feats[row, off_features] = baseline[off_features]

    off_nodes = {players.node_ids[j] for j in range(d) if mask[b + j] == 0}
    if off_nodes:
        edges = [(i, j) for i, j in g.edges if i not in off_nodes and j not in off_nodes]
    else:
        edges = g.edges
    return Graph(g.num_nodes, frozenset(edges), feats, g.node_labels, g.graph_label)


def apply_indirect_effect(g_orig: Graph, g_pert: Graph, players: PlayerIndex,
                          mask: np.ndarray, v: int,
                          cfg: PerturbConfig | None = None) -> Graph:
    """Reconnect included player nodes that the perturbation cut off from v.

    For every included player node with no path to v inside the perturbed
    k-hop subgraph, one shortest path from the original graph is restored;
    intermediate nodes outside the coalition get neutralized features.
    """
    cfg = cfg or PerturbConfig()
    b = players.num_features
    included = [players.node_ids[j] for j in range(players.num_nodes)
                if mask[b + j] == 1]
    if not included:
        return g_pert

    ball = set(players.node_ids) | {v}
    sub_edges = [(i, j) for i, j in g_pert.edges if i in ball and j in ball]
    sub = {u: [] for u in ball}
    for i, j in sub_edges:
        sub[i].append(j)
        sub[j].append(i)
    reach = _component_of(sub, v)

    edges = None
    feats = None
    included_set = set(included) | {v}
    for w in included:
        if w in reach:
            continue
        path = shortest_path(g_orig, v, w)
        if edges is None:
            edges = set(g_pert.edges)
        for a, bnode in zip(path[:-1], path[1:]):
            edges.add((min(a, bnode), max(a, bnode)))
        middle = [n for n in path[1:-1] if n not in included_set]
        if middle:
            if feats is None:
                feats = g_pert.features.copy()
            if cfg.path_neutralization == NEUTRAL_COPY_V:
                neutral = g_orig.features[v]
            else:
                neutral = _mc_mean(g_orig, cfg)
            for n in middle:
                feats[n] = neutral
        # Restored edges may reconnect other pending nodes; recompute lazily.
        sub = {u: [] for u in ball}
        for i, j in edges:
            if i in ball and j in ball:
                sub[i].append(j)
                sub[j].append(i)
        reach = _component_of(sub, v)
    if edges is None:
        return g_pert
    return Graph(g_pert.num_nodes, frozenset(edges),
                 feats if feats is not None else g_pert.features,
                 g_pert.node_labels, g_pert.graph_label)


def _component_of(adj: dict[int, list[int]], v: int) -> set[int]:
    seen = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def eval_samples(g: Graph, players: PlayerIndex, batch: MaskBatch,
                 model: GnnModel, target, cfg: PerturbConfig | None = None
                 ) -> list[PerturbSample]:
    """Evaluate the frozen model on every perturbed graph of the batch.

    ``target`` is the explained node id for node tasks, ignored for graph
    tasks. The regression target is the probability of the class the model
    predicts on the unperturbed input (mean over the node set in global
    mode). Order follows the batch.
    """
    cfg = cfg or PerturbConfig()
    base_probs = gcn_forward(model, g)
    if model.task == GRAPH_TASK:
        predicted = int(np.argmax(base_probs))
    elif cfg.mode == GLOBAL_NODE_SET:
        predicted = [int(np.argmax(base_probs[u])) for u in cfg.global_nodes]
    else:
        predicted = int(np.argmax(base_probs[target]))

    samples = []
    for mask in batch.masks:
        g_pert = gen_perturbed(g, players, mask, cfg)
        if cfg.indirect_effect and players.v is not None:
            g_pert = apply_indirect_effect(g, g_pert, players, mask, players.v, cfg)
        probs = gcn_forward(model, g_pert)
        if model.task == GRAPH_TASK:
            out = probs
            score = float(probs[predicted])
        elif cfg.mode == GLOBAL_NODE_SET:
            out = probs[list(cfg.global_nodes)].mean(axis=0)
            score = float(np.mean([probs[u, cu]
                                   for u, cu in zip(cfg.global_nodes, predicted)]))
        else:
            out = probs[target]
            score = float(out[predicted])
        samples.append(PerturbSample(np.array(mask, copy=True), out, score))
    return samples

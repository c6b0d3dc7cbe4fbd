"""Player reduction, Shapley kernel weights and coalition mask generators.

A "player" is either a retained feature of the explained node (B of them)
or a retained neighbor node (D of them); the explained node itself never
plays. Masks are binary vectors of length B + D, features first.

Five generators are available, from exhaustive enumeration to the
budgeted separated sampler that exhausts extreme coalition orders first
and then diversifies remaining draws by down-weighting players that were
already sampled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import BudgetTooSmall, EmptyPlayerSet, TooManyPlayers
from .gnn import GnnModel
from .graph import Graph, k_hop_neighbors

ALL = "all"
RANDOM = "random"
SMART = "smart"
SMART_SEPARATE = "smartseparate"
SMARTER_SEPARATE = "smarterseparate"

STRATEGIES = (ALL, RANDOM, SMART, SMART_SEPARATE, SMARTER_SEPARATE)

DEFAULT_ANCHOR_WEIGHT = 1e6
ENUMERATION_LIMIT = 20


@dataclass(frozen=True)
class PlayerIndex:
    """Index maps from mask positions back to feature ids and node ids."""

    feature_ids: tuple[int, ...]
    node_ids: tuple[int, ...]
    v: int | None = None

    def __post_init__(self):
        if len(set(self.feature_ids)) != len(self.feature_ids):
            raise ValueError("duplicate feature ids")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ValueError("duplicate node ids")
        if self.v is not None and self.v in self.node_ids:
            raise ValueError("explained node cannot be a player")
        if self.num_players < 1:
            raise EmptyPlayerSet("no features or nodes left to play")

    @property
    def num_features(self) -> int:
        return len(self.feature_ids)

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_players(self) -> int:
        return self.num_features + self.num_nodes


@dataclass
class MaskBatch:
    """Coalition masks (rows of a P x (B+D) 0/1 matrix) with aligned weights."""

    masks: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.masks = np.asarray(self.masks, dtype=np.int8)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.masks.shape[0] != self.weights.shape[0]:
            raise ValueError("masks and weights must align")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")

    def __len__(self) -> int:
        return self.masks.shape[0]


def reduce_players(g: Graph, model: GnnModel, v: int, lam: float = 1.0) -> PlayerIndex:
    """Drop players that cannot matter: nodes beyond the model's receptive
    field, and features of v inside the lam-sigma band around the dataset
    mean.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    node_ids = tuple(k_hop_neighbors(g, v, model.num_layers))
    mu = g.features.mean(axis=0)
    sigma = g.features.std(axis=0)
    xv = g.features[v]
    feature_ids = tuple(j for j in range(g.num_features)
                        if abs(xv[j] - mu[j]) > lam * sigma[j])
    if not feature_ids and not node_ids:
        raise EmptyPlayerSet(f"node {v}: no retained features or neighbors")
    return PlayerIndex(feature_ids, node_ids, v)


def kernel_weight(m: int, s: int, c: float = DEFAULT_ANCHOR_WEIGHT) -> float:
    """Shapley kernel (m-1) / (m * s * C(m-1, s)); the empty and full
    coalitions get the large anchor constant ``c`` standing in for the
    infinite weight that pins efficiency.

    Computed in log space so m up to a few hundred stays finite.
    """
    if m < 1 or not 0 <= s <= m:
        raise ValueError("need 0 <= s <= m, m >= 1")
    if s == 0 or s == m:
        return c
    if m == 1:
        return c
    log_binom = lgamma(m) - lgamma(s + 1) - lgamma(m - s)
    return float(np.exp(np.log(m - 1.0) - np.log(float(m) * s) - log_binom))


def _anchor_masks(b: int, d: int) -> list[np.ndarray]:
    """All-zero, all-one, and (all features, zero nodes), deduplicated."""
    m = b + d
    feat_only = np.zeros(m, dtype=np.int8)
    feat_only[:b] = 1
    anchors = [np.zeros(m, dtype=np.int8), np.ones(m, dtype=np.int8), feat_only]
    seen = set()
    out = []
    for a in anchors:
        key = a.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(a)
    return out


def _dedup(masks: list[np.ndarray], weights: list[float]) -> MaskBatch:
    seen = set()
    keep_m, keep_w = [], []
    for mk, w in zip(masks, weights):
        key = mk.tobytes()
        if key not in seen:
            seen.add(key)
            keep_m.append(mk)
            keep_w.append(w)
    return MaskBatch(np.array(keep_m), np.array(keep_w))


def _smart_block(m: int, budget: int, s_max: int, rng: np.random.Generator,
                 diversify: bool) -> list[np.ndarray]:
    """Order-by-order coalition sampler over ``m`` variables.

    Exhausts orders k = 0, 1, ... (two masks per subset: the subset alone
    and its complement) while the 90% smart budget allows; the remainder is
    either filled by weighted-diversity draws of the first inexhaustible
    order (``diversify``) or left to the 10% random tail.
    """
    if budget <= 0:
        return []
    masks: list[np.ndarray] = []
    smart_budget = int(round(0.9 * budget))
    k = 0
    while len(masks) < smart_budget and k <= min(s_max, m - 1):
        n_subsets = _binom_int(m, k)
        if len(masks) + 2 * n_subsets <= smart_budget:
            for subset in itertools.combinations(range(m), k):
                u = np.zeros(m, dtype=np.int8)
                v = np.ones(m, dtype=np.int8)
                for i in subset:
                    u[i] = 1
                    v[i] = 0
                masks.append(u)
                masks.append(v)
            k += 1
        else:
            if diversify:
                w = np.ones(m)
                while len(masks) < smart_budget:
                    # Max-weight subset of order k = the k least-sampled
                    # variables; ties broken at random.
                    order = np.lexsort((rng.random(m), -w))
                    subset = order[:k] if k > 0 else order[:1]
                    p = int(rng.integers(2))
                    mask = np.full(m, p, dtype=np.int8)
                    mask[subset] = 1 - p
                    masks.append(mask)
                    w[subset] = 1.0 / (1.0 + 1.0 / w[subset])
            break
    while len(masks) < budget:
        masks.append((rng.random(m) < 0.5).astype(np.int8))
    return masks[:budget]


def _binom_int(m: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (m - i) // (i + 1)
    return out


def _feature_budget(p: int, b: int, d: int, r: float | None) -> int:
    """Split of the sample budget between the feature and node blocks."""
    m = b + d
    if r is not None:
        return int(r * p)
    if b == 0 or d == 0:
        return int(p * b / m)
    return int(0.5 * p / 2 + 0.5 * p * b / m)


def gen_masks(players: PlayerIndex, p: int, strategy: str = SMARTER_SEPARATE,
              s_max: int = 4, r: float | None = None, seed: int = 0,
              c: float = DEFAULT_ANCHOR_WEIGHT,
              block_kernel: bool = True) -> MaskBatch:
    """Generate a deduplicated coalition batch of at most ``p`` masks.

    The three anchor coalitions (all-zero, all-one, all-features/zero-nodes)
    open every batch with weight ``c``. Separated strategies weight each
    mask with the kernel of its own block (``block_kernel``); passing False
    uses the full player count instead, for ablation.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    b, d = players.num_features, players.num_nodes
    m = b + d
    rng = np.random.default_rng(seed)
    anchors = _anchor_masks(b, d)

    def joint_weight(mask: np.ndarray) -> float:
        s = int(mask.sum())
        return c if s in (0, m) else kernel_weight(m, s, c)

    # Joint strategies weight every mask, anchors included, with the
    # full-M kernel: the all-features/zero-nodes coalition is still always
    # present but keeps its natural weight, otherwise a full enumeration
    # would be pinned to the relative-efficiency split and drift away from
    # the exact Shapley values. Separated strategies pin all three anchors.
    if strategy == ALL:
        if m > ENUMERATION_LIMIT:
            raise TooManyPlayers(f"cannot enumerate 2^{m} coalitions")
        masks = list(anchors)
        for bits in itertools.product((0, 1), repeat=m):
            masks.append(np.array(bits, dtype=np.int8))
        return _dedup(masks, [joint_weight(mk) for mk in masks])

    if p < len(anchors) + 1:
        raise BudgetTooSmall(f"budget {p} cannot exceed the {len(anchors)} anchors")
    budget = p - len(anchors)

    if strategy in (RANDOM, SMART):
        if strategy == RANDOM:
            body = [(rng.random(m) < 0.5).astype(np.int8) for _ in range(budget)]
        else:
            body = _smart_block(m, budget, s_max, rng, diversify=True)
        masks = list(anchors) + body
        return _dedup(masks, [joint_weight(mk) for mk in masks])

    masks = list(anchors)
    weights = [c] * len(anchors)

    # Separated strategies: feature-block masks ride with zero nodes,
    # node-block masks with all features on.
    diversify = strategy == SMARTER_SEPARATE
    p_feat = _feature_budget(budget, b, d, r)
    p_feat = min(max(p_feat, 0), budget)
    feat_body = _smart_block(b, p_feat, s_max, rng, diversify) if b else []
    node_body = _smart_block(d, budget - p_feat, s_max, rng, diversify) if d else []

    for fm in feat_body:
        mask = np.zeros(m, dtype=np.int8)
        mask[:b] = fm
        masks.append(mask)
        s = int(fm.sum())
        if block_kernel:
            weights.append(c if s in (0, b) else kernel_weight(b, s, c))
        else:
            st = int(mask.sum())
            weights.append(c if st in (0, m) else kernel_weight(m, st, c))
    for nm in node_body:
        mask = np.ones(m, dtype=np.int8)
        mask[b:] = nm
        masks.append(mask)
        s = int(nm.sum())
        if block_kernel:
            weights.append(c if s in (0, d) else kernel_weight(d, s, c))
        else:
            st = int(mask.sum())
            weights.append(c if st in (0, m) else kernel_weight(m, st, c))
    return _dedup(masks, weights)

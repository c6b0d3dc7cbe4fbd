"""Surrogate fitting and the end-to-end explanation pipeline.

The explanation is the coefficient vector of a weighted linear model
fitted on (mask, perturbed prediction) pairs with Shapley kernel weights;
the intercept is the base value. A brute-force enumeration oracle over
all coalitions is provided for verification, together with the
closed-form check of the kernel's normal matrix.
"""

from __future__ import annotations

import json
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientSamples, SingularSystem, TooManyPlayers
from .gnn import GRAPH_TASK, GnnModel, gcn_forward
from .graph import Graph
from .linalg import wls_solve
from .masks import (DEFAULT_ANCHOR_WEIGHT, SMARTER_SEPARATE, MaskBatch,
                    PlayerIndex, gen_masks, kernel_weight, reduce_players)
from .perturb import (GRAPH_TASK_MODE, NODE_LOCAL, PerturbConfig,
                      PerturbSample, eval_samples)

WLR = "wlr"
WEIGHTED_LASSO = "lasso"

R_SQUARED_WARN = 0.90

EXPLANATION_SCHEMA_VERSION = 1


@dataclass
class Explanation:
    """Base value plus per-feature and per-node attribution coefficients."""

    base_value: float
    phi_features: dict[int, float]
    phi_nodes: dict[int, float]
    predicted_class: int
    full_prediction: float
    isolated_prediction: float
    r_squared: float
    num_samples: int
    target: int | None = None
    options: dict = field(default_factory=dict)

    @property
    def phi(self) -> np.ndarray:
        """All coefficients in player order (features first)."""
        return np.array(list(self.phi_features.values())
                        + list(self.phi_nodes.values()))

    def top_nodes(self, k: int) -> list[int]:
        """Node ids of the k largest node coefficients, descending."""
        ranked = sorted(self.phi_nodes, key=lambda n: -self.phi_nodes[n])
        return ranked[:k]

    def top_features(self, k: int) -> list[int]:
        ranked = sorted(self.phi_features, key=lambda j: -self.phi_features[j])
        return ranked[:k]

    def to_json(self) -> dict:
        return {
            "schema_version": EXPLANATION_SCHEMA_VERSION,
            "target": self.target,
            "predicted_class": self.predicted_class,
            "base_value": self.base_value,
            "full_prediction": self.full_prediction,
            "isolated_prediction": self.isolated_prediction,
            "phi_features": [{"id": int(k), "value": v}
                             for k, v in self.phi_features.items()],
            "phi_nodes": [{"id": int(k), "value": v}
                          for k, v in self.phi_nodes.items()],
            "r_squared": self.r_squared,
            "num_samples": self.num_samples,
            "options": self.options,
        }

    @classmethod
    def from_json(cls, doc: dict) -> Explanation:
        return cls(
            base_value=doc["base_value"],
            phi_features={int(e["id"]): e["value"] for e in doc["phi_features"]},
            phi_nodes={int(e["id"]): e["value"] for e in doc["phi_nodes"]},
            predicted_class=doc["predicted_class"],
            full_prediction=doc["full_prediction"],
            isolated_prediction=doc["isolated_prediction"],
            r_squared=doc["r_squared"],
            num_samples=doc["num_samples"],
            target=doc.get("target"),
            options=doc.get("options", {}),
        )


def fit_explanation(samples: list[PerturbSample], weights: np.ndarray,
                    players: PlayerIndex, fit_kind: str = WLR,
                    lasso_alpha: float | None = None,
                    predicted_class: int = 0,
                    target: int | None = None,
                    options: dict | None = None) -> Explanation:
    """Fit the weighted surrogate on the perturbation dataset.

    The design is [1 | z]; kernel weights make the fit honor the anchor
    coalitions, which pins the intercept at the base value and the
    coefficient sum at the explainable gap.
    """
    m = players.num_players
    p = len(samples)
    if fit_kind == WLR and p < m + 1:
        raise InsufficientSamples(f"{p} samples cannot identify {m + 1} coefficients")
    if p == 0:
        raise InsufficientSamples("no samples")
    z = np.array([s.mask for s in samples], dtype=np.float64)
    y = np.array([s.target_score for s in samples])
    w = np.asarray(weights, dtype=np.float64)
    design = np.hstack([np.ones((p, 1)), z])

    if fit_kind == WLR:
        # The WLS fit is invariant to weight scale; normalizing keeps the
        # normal matrix conditioned when kernel weights span many orders of
        # magnitude, so the ridge fallback can regularize unidentified
        # directions.  The lasso path keeps the raw scale: its penalty is
        # absolute, and shrinking the weights would inflate it implicitly.
        coef = wls_solve(design, y, w / w.max(), ridge=0.0)
    elif fit_kind == WEIGHTED_LASSO:
        coef = _weighted_lasso(design, y, w, lasso_alpha)
    else:
        raise ValueError(f"unknown fit kind {fit_kind!r}")

    pred = design @ coef
    ybar = np.average(y, weights=w)
    ss_res = np.sum(w * (y - pred) ** 2)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if r2 < R_SQUARED_WARN:
        warnings.warn(f"surrogate fit quality low: R^2 = {r2:.3f}", stacklevel=2)

    b = players.num_features
    full_pred, iso_pred = _anchor_targets(samples, b)
    return Explanation(
        base_value=float(coef[0]),
        phi_features={fid: float(coef[1 + j])
                      for j, fid in enumerate(players.feature_ids)},
        phi_nodes={nid: float(coef[1 + b + j])
                   for j, nid in enumerate(players.node_ids)},
        predicted_class=predicted_class,
        full_prediction=full_pred,
        isolated_prediction=iso_pred,
        r_squared=float(r2),
        num_samples=p,
        target=target,
        options=options or {},
    )


def _anchor_targets(samples: list[PerturbSample], b: int) -> tuple[float, float]:
    """Targets observed at the all-one and all-features/zero-nodes masks."""
    full = iso = float("nan")
    for s in samples:
        if s.mask.all():
            full = s.target_score
        if s.mask[:b].all() and not s.mask[b:].any():
            iso = s.target_score
    return full, iso


def _weighted_lasso(design: np.ndarray, y: np.ndarray, w: np.ndarray,
                    alpha: float | None, max_iter: int = 2000,
                    tol: float = 1e-10) -> np.ndarray:
    """Coordinate-descent soft-thresholding; the intercept is unpenalized."""
    p, m = design.shape
    if alpha is None:
        alpha = 0.01 * float(np.max(np.abs(design[:, 1:].T @ (w * y))))
    # Warm-start at the WLS solution: with anchor-dominated kernel weights
    # the design is nearly collinear and cold-started coordinate descent
    # needs O(1/(1 - correlation)) sweeps to cross the flat valley.
    try:
        coef = wls_solve(design, y, w / w.max(), ridge=0.0)
    except SingularSystem:
        coef = np.zeros(m)
    col_norm = np.array([np.sum(w * design[:, j] ** 2) for j in range(m)])
    residual = y - design @ coef
    for _ in range(max_iter):
        delta = 0.0
        for j in range(m):
            if col_norm[j] == 0:
                continue
            rho = np.sum(w * design[:, j] * residual) + col_norm[j] * coef[j]
            if j == 0:
                new = rho / col_norm[j]
            else:
                new = np.sign(rho) * max(abs(rho) - alpha, 0.0) / col_norm[j]
            if new != coef[j]:
                residual += design[:, j] * (coef[j] - new)
                delta = max(delta, abs(new - coef[j]))
                coef[j] = new
        if delta < tol:
            break
    return coef


def exact_shapley(value_fn: Callable[[tuple[int, ...]], float],
                  num_players: int) -> tuple[np.ndarray, float]:
    """Brute-force Shapley values of a set function over num_players players.

    Returns (phi vector, value of the empty coalition). Enumeration is
    guarded at 20 players.
    """
    m = num_players
    if m > 20:
        raise TooManyPlayers(f"{m} players exceed the enumeration guard")
    vals = np.empty(1 << m)
    for code in range(1 << m):
        subset = tuple(j for j in range(m) if code >> j & 1)
        vals[code] = value_fn(subset)

    # phi_j = sum over S without j of |S|!(M-|S|-1)!/M! (val(S+j) - val(S))
    fact = [1.0] * (m + 1)
    for i in range(1, m + 1):
        fact[i] = fact[i - 1] * i
    phi = np.zeros(m)
    for code in range(1 << m):
        s = bin(code).count("1")
        if s == m:
            continue
        coef = fact[s] * fact[m - s - 1] / fact[m]
        for j in range(m):
            if not code >> j & 1:
                phi[j] += coef * (vals[code | (1 << j)] - vals[code])
    return phi, float(vals[0])


def normal_matrix_check(m: int, c: float = DEFAULT_ANCHOR_WEIGHT) -> float:
    """Max absolute deviation of Z^T W Z from ((m-1)/m) I + c J, using all
    2^m coalitions with kernel weights and anchors at c.
    """
    if m > 15:
        raise TooManyPlayers("check limited to 15 players")
    z = np.array([[code >> j & 1 for j in range(m)] for code in range(1 << m)],
                 dtype=np.float64)
    w = np.array([kernel_weight(m, int(row.sum()), c) for row in z])
    ztwz = (z * w[:, None]).T @ z
    expected = ((m - 1) / m) * np.eye(m) + c * np.ones((m, m))
    return float(np.max(np.abs(ztwz - expected)))


def rescale(e: Explanation, alpha: float) -> Explanation:
    """Redistribute the explainable gap: nodes get alpha of it, features
    the rest; ratios within each block are preserved. A block whose current
    sum is zero passes through unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    gap = e.full_prediction - e.base_value
    node_sum = sum(e.phi_nodes.values())
    feat_sum = sum(e.phi_features.values())
    phi_nodes = dict(e.phi_nodes)
    phi_features = dict(e.phi_features)
    if node_sum != 0.0:
        factor = alpha * gap / node_sum
        phi_nodes = {k: v * factor for k, v in phi_nodes.items()}
    if feat_sum != 0.0:
        factor = (1.0 - alpha) * gap / feat_sum
        phi_features = {k: v * factor for k, v in phi_features.items()}
    return replace(e, phi_nodes=phi_nodes, phi_features=phi_features)


@dataclass
class ExplainOptions:
    """Everything tunable on the end-to-end pipeline."""

    strategy: str = SMARTER_SEPARATE
    num_samples: int = 400
    lam: float = 1.0
    c: float = DEFAULT_ANCHOR_WEIGHT
    s_max: int = 4
    r: float | None = None
    fit_kind: str = WLR
    lasso_alpha: float | None = None
    alpha: float | None = None
    seed: int = 0
    indirect_effect: bool = False
    mode: str = NODE_LOCAL
    contrast_features: np.ndarray | None = None
    global_nodes: tuple[int, ...] = ()
    graph_players: str = "nodes"
    block_kernel: bool = True

    def perturb_config(self) -> PerturbConfig:
        return PerturbConfig(
            mode=self.mode,
            indirect_effect=self.indirect_effect,
            contrast_features=self.contrast_features,
            global_nodes=tuple(self.global_nodes),
            seed=self.seed,
        )

    def public_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "num_samples": self.num_samples,
            "lambda": self.lam,
            "c": self.c,
            "s_max": self.s_max,
            "r": self.r,
            "fit_kind": self.fit_kind,
            "alpha": self.alpha,
            "seed": self.seed,
            "indirect_effect": self.indirect_effect,
            "mode": self.mode,
        }


def graph_task_players(g: Graph, which: str = "nodes") -> PlayerIndex:
    """Graph classification plays either all nodes or all features, never both."""
    if which == "nodes":
        return PlayerIndex((), tuple(range(g.num_nodes)), None)
    if which == "features":
        return PlayerIndex(tuple(range(g.num_features)), (), None)
    raise ValueError("graph players must be 'nodes' or 'features'")


def explain(g: Graph, model: GnnModel, target: int | None = None,
            options: ExplainOptions | None = None,
            players: PlayerIndex | None = None) -> Explanation:
    """Full pipeline: reduce players, sample masks, evaluate the model on
    perturbed graphs, fit the surrogate, optionally rescale.

    Deterministic given ``options.seed``. ``players`` overrides the
    automatic reduction (used by the verification suite to inject players).
    """
    opts = options or ExplainOptions()
    cfg = opts.perturb_config()
    if model.task == GRAPH_TASK:
        if players is None:
            players = graph_task_players(g, opts.graph_players)
        cfg.mode = GRAPH_TASK_MODE if cfg.mode == NODE_LOCAL else cfg.mode
    elif players is None:
        players = reduce_players(g, model, target, opts.lam)

    batch = gen_masks(players, opts.num_samples, opts.strategy, opts.s_max,
                      opts.r, opts.seed, opts.c, opts.block_kernel)
    samples = eval_samples(g, players, batch, model, target, cfg)
    base_probs = gcn_forward(model, g)
    if model.task == GRAPH_TASK:
        predicted = int(np.argmax(base_probs))
    else:
        predicted = int(np.argmax(base_probs[target]))
    e = fit_explanation(samples, batch.weights, players, opts.fit_kind,
                        opts.lasso_alpha, predicted, target,
                        opts.public_dict())
    if opts.alpha is not None:
        e = rescale(e, opts.alpha)
    return e


def induced_value_function(g: Graph, model: GnnModel, players: PlayerIndex,
                           target: int | None,
                           cfg: PerturbConfig | None = None
                           ) -> Callable[[tuple[int, ...]], float]:
    """The coalition game the explainer plays, exposed for the exact oracle:
    val(S) = model score of the originally predicted class on the graph
    perturbed by the mask of S.
    """
    cfg = cfg or PerturbConfig()
    m = players.num_players

    def value(subset: tuple[int, ...]) -> float:
        mask = np.zeros(m, dtype=np.int8)
        mask[list(subset)] = 1
        batch = MaskBatch(mask[None, :], np.ones(1))
        sample = eval_samples(g, players, batch, model, target, cfg)[0]
        return sample.target_score

    return value


def save_explanation(e: Explanation, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(e.to_json(), fh, indent=2)
        fh.write("\n")


def load_explanation(path: str) -> Explanation:
    with open(path) as fh:
        return Explanation.from_json(json.load(fh))

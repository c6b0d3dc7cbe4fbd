"""Minimal graph convolutional network with manual backpropagation.

The network is the black box that the explainer probes: a stack of GCN
layers (symmetric-normalized propagation with self loops, ReLU) followed
by a fully connected softmax classifier. Graph classification inserts a
coordinate-wise max-pool over node embeddings before the classifier.

Everything is full-batch float64 numpy; no autograd framework involved,
gradients are derived by hand and validated against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MissingLabels
from .graph import Graph
from .linalg import finite_diff_grad

NODE_TASK = "node"
GRAPH_TASK = "graph"

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass
class GnnModel:
    """Ordered GCN layer weights plus the final classifier.

    ``layers`` holds (W, b) pairs with W of shape (in_dim, out_dim);
    ``classifier`` is the final (W, b) mapping the last hidden width to
    class logits. Biases are kept at zero when ``use_bias`` is False.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]
    classifier: tuple[np.ndarray, np.ndarray]
    task: str
    num_classes: int
    use_bias: bool = True

    def __post_init__(self):
        if self.task not in (NODE_TASK, GRAPH_TASK):
            raise ValueError(f"unknown task {self.task!r}")
        dims = self.layer_dims()
        for (w, b), din, dout in zip(self.layers, dims[:-1], dims[1:]):
            if w.shape != (din, dout) or b.shape != (dout,):
                raise DimensionMismatch("layer dimensions do not chain")
        wc, bc = self.classifier
        if wc.shape != (dims[-1], self.num_classes) or bc.shape != (self.num_classes,):
            raise DimensionMismatch("classifier width does not match last hidden layer")

    def layer_dims(self) -> list[int]:
        return [self.layers[0][0].shape[0]] + [w.shape[1] for w, _ in self.layers]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    def parameters(self) -> list[np.ndarray]:
        params = []
        for w, b in self.layers:
            params.append(w)
            if self.use_bias:
                params.append(b)
        params.append(self.classifier[0])
        if self.use_bias:
            params.append(self.classifier[1])
        return params

    def copy(self) -> GnnModel:
        return GnnModel(
            [(w.copy(), b.copy()) for w, b in self.layers],
            (self.classifier[0].copy(), self.classifier[1].copy()),
            self.task, self.num_classes, self.use_bias,
        )


@dataclass
class TrainConfig:
    epochs: int = 1000
    learning_rate: float = 1e-3
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if any(s <= 0 for s in self.split) or abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must be positive and sum to 1")


def init_model(
    layer_dims: list[int],
    num_classes: int,
    task: str = NODE_TASK,
    seed: int = 0,
    use_bias: bool = True,
) -> GnnModel:
    """Glorot-uniform initialized model; biases start at zero."""
    rng = np.random.default_rng(seed)
    layers = []
    for din, dout in zip(layer_dims[:-1], layer_dims[1:]):
        layers.append((_glorot(rng, din, dout), np.zeros(dout)))
    wc = _glorot(rng, layer_dims[-1], num_classes)
    return GnnModel(layers, (wc, np.zeros(num_classes)), task, num_classes, use_bias)


def _glorot(rng: np.random.Generator, din: int, dout: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (din + dout))
    return rng.uniform(-limit, limit, size=(din, dout))


def propagation_matrix(g: Graph) -> np.ndarray:
    """Symmetric-normalized adjacency with self loops: D̃^-1/2 (A+I) D̃^-1/2."""
    a = g.dense_adjacency()
    np.fill_diagonal(a, a.diagonal() + 1.0)
    dinv = 1.0 / np.sqrt(a.sum(axis=1))
    return a * dinv[:, None] * dinv[None, :]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cached(model: GnnModel, s: np.ndarray, x: np.ndarray) -> dict:
    """Run the network, keeping intermediates needed for backprop."""
    if x.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"features have {x.shape[1]} columns, model expects {model.input_dim}"
        )
    h = x
    pre, agg, acts = [], [], [h]
    for w, b in model.layers:
        a = s @ h
        z = a @ w + b
        h = np.maximum(z, 0.0)
        agg.append(a)
        pre.append(z)
        acts.append(h)
    wc, bc = model.classifier
    cache = {"agg": agg, "pre": pre, "acts": acts}
    if model.task == GRAPH_TASK:
        pool_idx = np.argmax(h, axis=0)
        pooled = h[pool_idx, np.arange(h.shape[1])]
        logits = pooled @ wc + bc
        cache.update(pool_idx=pool_idx, pooled=pooled)
    else:
        logits = h @ wc + bc
    cache["logits"] = logits
    cache["probs"] = _softmax(logits)
    return cache


def gcn_forward(model: GnnModel, g: Graph) -> np.ndarray:
    """Class probabilities: one row per node, or a single vector for graph tasks."""
    cache = _forward_cached(model, propagation_matrix(g), g.features)
    return cache["probs"]


def _zero_grads(model: GnnModel) -> list[np.ndarray]:
    return [np.zeros_like(p) for p in model.parameters()]


def _nll_backward(model: GnnModel, s: np.ndarray, x: np.ndarray,
                  labels: np.ndarray, mask: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Negative log-likelihood over masked nodes and its parameter gradients."""
    cache = _forward_cached(model, s, x)
    probs = cache["probs"]
    idx = np.flatnonzero(mask)
    n = len(idx)
    loss = -np.mean(np.log(probs[idx, labels[idx]] + 1e-300))

    dlogits = np.zeros_like(probs)
    dlogits[idx] = probs[idx]
    dlogits[idx, labels[idx]] -= 1.0
    dlogits /= n
    return loss, _backprop_from_logits(model, s, cache, dlogits)


def _graph_nll_backward(model: GnnModel, s: np.ndarray, x: np.ndarray,
                        label: int) -> tuple[float, list[np.ndarray]]:
    cache = _forward_cached(model, s, x)
    probs = cache["probs"]
    loss = -float(np.log(probs[label] + 1e-300))
    dlogits = probs.copy()
    dlogits[label] -= 1.0
    return loss, _backprop_from_logits(model, s, cache, dlogits)


def _backprop_from_logits(model: GnnModel, s: np.ndarray, cache: dict,
                          dlogits: np.ndarray) -> list[np.ndarray]:
    wc, _ = model.classifier
    if model.task == GRAPH_TASK:
        dwc = np.outer(cache["pooled"], dlogits)
        dbc = dlogits.copy()
        dpooled = wc @ dlogits
        dh = np.zeros_like(cache["acts"][-1])
        dh[cache["pool_idx"], np.arange(dh.shape[1])] = dpooled
    else:
        dwc = cache["acts"][-1].T @ dlogits
        dbc = dlogits.sum(axis=0)
        dh = dlogits @ wc.T

    layer_grads = []
    for li in range(model.num_layers - 1, -1, -1):
        w, _ = model.layers[li]
        dz = dh * (cache["pre"][li] > 0)
        dw = cache["agg"][li].T @ dz
        db = dz.sum(axis=0)
        layer_grads.append((dw, db))
        if li > 0:
            dh = s @ (dz @ w.T)
    layer_grads.reverse()

    grads = []
    for dw, db in layer_grads:
        grads.append(dw)
        if model.use_bias:
            grads.append(db)
    grads.append(dwc)
    if model.use_bias:
        grads.append(dbc)
    return grads


def _split_masks(n: int, split, rng: np.random.Generator,
                 eligible: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = np.flatnonzero(eligible)
    perm = rng.permutation(idx)
    n_train = max(1, int(round(split[0] * len(perm))))
    n_val = max(1, int(round(split[1] * len(perm))))
    masks = []
    for part in (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]):
        m = np.zeros(n, dtype=bool)
        m[part] = True
        masks.append(m)
    return tuple(masks)


def train(model: GnnModel, data: Graph | list[Graph],
          cfg: TrainConfig) -> tuple[GnnModel, list[dict]]:
    """Full-batch Adam training; returns the trained model and a per-epoch log.

    Node task: ``data`` is one graph whose labeled nodes (label >= 0) are
    split train/val/test. Graph task: ``data`` is a list of labeled graphs,
    split at the graph level. Reproducible given ``cfg.seed``.
    """
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)

    if isinstance(data, Graph):
        if model.task != NODE_TASK:
            raise ValueError("single graph supplied to a graph-classification model")
        if data.node_labels is None:
            raise MissingLabels("node task requires node labels")
        eligible = data.node_labels >= 0
        if not eligible.any():
            raise MissingLabels("no labeled nodes")
        tr, va, te = _split_masks(data.num_nodes, cfg.split, rng, eligible)
        s = propagation_matrix(data)
        x = data.features
        labels = data.node_labels

        def step():
            return _nll_backward(model, s, x, labels, tr)

        def accuracies():
            probs = _forward_cached(model, s, x)["probs"]
            pred = probs.argmax(axis=1)
            return tuple(
                float(np.mean(pred[m] == labels[m])) if m.any() else float("nan")
                for m in (tr, va, te)
            )
    else:
        if model.task != GRAPH_TASK:
            raise ValueError("graph list supplied to a node-classification model")
        if any(g.graph_label is None for g in data):
            raise MissingLabels("graph task requires graph labels")
        order = rng.permutation(len(data))
        n_train = max(1, int(round(cfg.split[0] * len(data))))
        n_val = max(1, int(round(cfg.split[1] * len(data))))
        parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
        mats = [(propagation_matrix(g), g.features, g.graph_label) for g in data]

        def step():
            total = 0.0
            grads = _zero_grads(model)
            for gi in parts[0]:
                s, x, y = mats[gi]
                loss, g_i = _graph_nll_backward(model, s, x, y)
                total += loss
                for acc, gg in zip(grads, g_i):
                    acc += gg
            n = len(parts[0])
            for gg in grads:
                gg /= n
            return total / n, grads

        def accuracies():
            out = []
            for part in parts:
                if len(part) == 0:
                    out.append(float("nan"))
                    continue
                hits = 0
                for gi in part:
                    s, x, y = mats[gi]
                    probs = _forward_cached(model, s, x)["probs"]
                    hits += int(probs.argmax() == y)
                out.append(hits / len(part))
            return tuple(out)

    params = model.parameters()
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    log = []
    for epoch in range(1, cfg.epochs + 1):
        loss, grads = step()
        if cfg.weight_decay:
            for p, g in zip(params, grads):
                if p.ndim == 2:
                    g += cfg.weight_decay * p
        for p, g, m, v in zip(params, grads, m_state, v_state):
            m *= _ADAM_BETA1
            m += (1 - _ADAM_BETA1) * g
            v *= _ADAM_BETA2
            v += (1 - _ADAM_BETA2) * g * g
            mhat = m / (1 - _ADAM_BETA1 ** epoch)
            vhat = v / (1 - _ADAM_BETA2 ** epoch)
            p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + _ADAM_EPS)
        tr_acc, va_acc, te_acc = accuracies()
        log.append({"epoch": epoch, "loss": float(loss),
                    "train_acc": tr_acc, "val_acc": va_acc, "test_acc": te_acc})
    if cfg.epochs == 0:
        tr_acc, va_acc, te_acc = accuracies()
        log.append({"epoch": 0, "loss": float("nan"),
                    "train_acc": tr_acc, "val_acc": va_acc, "test_acc": te_acc})
    return model, log


def grad_check(model: GnnModel, g: Graph, h: float = 1e-5,
               max_coords: int = 80, seed: int = 0) -> float:
    """Max relative error of manual backprop against central differences.

    Probes up to ``max_coords`` randomly sampled parameters of the node-task
    NLL loss on ``g`` (all labeled nodes in the mask).
    """
    if g.node_labels is None:
        raise MissingLabels("grad_check needs node labels")
    s = propagation_matrix(g)
    mask = g.node_labels >= 0
    model = model.copy()
    _, grads = _nll_backward(model, s, g.features, g.node_labels, mask)

    params = model.parameters()
    flat_analytic = np.concatenate([gg.ravel() for gg in grads])
    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    coords = (np.arange(total) if total <= max_coords
              else np.sort(rng.choice(total, size=max_coords, replace=False)))

    def loss_at(vec: np.ndarray) -> float:
        # vec holds only the probed coordinates
        saved = [p.copy() for p in params]
        flat = np.concatenate([p.ravel() for p in params])
        flat[coords] = vec
        off = 0
        for p, sz in zip(params, sizes):
            p[...] = flat[off:off + sz].reshape(p.shape)
            off += sz
        loss, _ = _nll_backward(model, s, g.features, g.node_labels, mask)
        for p, sv in zip(params, saved):
            p[...] = sv
        return loss

    base = np.concatenate([p.ravel() for p in params])[coords]
    numeric = finite_diff_grad(loss_at, base, h)
    analytic = flat_analytic[coords]
    rel = np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-8)
    return float(rel.max())


# --- model persistence -------------------------------------------------

_MODEL_FORMAT = "graphshapley-model"


def save_model(model: GnnModel, path: str) -> None:
    """Write a self-describing text file; round-trip exact (hex floats)."""
    meta = {
        "format": _MODEL_FORMAT,
        "version": 1,
        "task": model.task,
        "num_classes": model.num_classes,
        "layer_dims": model.layer_dims(),
        "use_bias": model.use_bias,
    }
    names = []
    arrays = []
    for i, (w, b) in enumerate(model.layers):
        names += [f"W{i}", f"b{i}"]
        arrays += [w, b]
    names += ["Wc", "bc"]
    arrays += list(model.classifier)
    with open(path, "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        for name, arr in zip(names, arrays):
            fh.write(f"{name} {' '.join(map(str, arr.shape))}\n")
            fh.write(" ".join(float(x).hex() for x in arr.ravel()) + "\n")


def load_model(path: str) -> GnnModel:
    with open(path) as fh:
        meta = json.loads(fh.readline())
        if meta.get("format") != _MODEL_FORMAT:
            raise ValueError(f"{path} is not a model file")
        arrays = {}
        while True:
            header = fh.readline()
            if not header:
                break
            parts = header.split()
            name, shape = parts[0], tuple(int(x) for x in parts[1:])
            values = [float.fromhex(tok) for tok in fh.readline().split()]
            arrays[name] = np.array(values).reshape(shape)
    n_layers = len(meta["layer_dims"]) - 1
    layers = [(arrays[f"W{i}"], arrays[f"b{i}"]) for i in range(n_layers)]
    return GnnModel(layers, (arrays["Wc"], arrays["bc"]), meta["task"],
                    meta["num_classes"], meta["use_bias"])

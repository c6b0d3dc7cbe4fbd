"""Command-line entry point: dataset building, training, explanation and
evaluation as reproducible, seed-driven runs.

Exit codes: 0 success, 2 usage or input error, 3 domain error (for
instance an empty player set). All outputs are JSON/CSV with a schema
version field; evaluation reports also render a PNG next to each CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import datasets, evaluate, gnn, masks, reports
from .errors import GraphShapleyError
from .explain import (ExplainOptions, exact_shapley, explain,
                      induced_value_function, save_explanation)
from .masks import reduce_players
from .perturb import CONTRASTIVE, GLOBAL_NODE_SET

SCHEMA_VERSION = 1
DEFAULT_SEED = 0
OUT_ENV_VAR = "GRAPHSHAPLEY_OUT"

# Default sample budgets per dataset kind.
DEFAULT_BUDGETS = {
    datasets.BA_SHAPES: 400,
    datasets.BA_COMMUNITY: 800,
    datasets.TREE_CYCLES: 1400,
    datasets.TREE_GRID: 1500,
}


class UsageError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get(OUT_ENV_VAR, ".")


def _write_json(path: str, doc: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(path: str):
    if not os.path.exists(path):
        raise UsageError(f"dataset manifest not found: {path}")
    return datasets.load_manifest(path)


def _load_model(path: str) -> gnn.GnnModel:
    if not os.path.exists(path):
        raise UsageError(f"model file not found: {path}")
    return gnn.load_model(path)


# --- dataset -----------------------------------------------------------

def cmd_dataset(args) -> int:
    overrides = {}
    if args.base is not None:
        overrides["base_size"] = args.base
    if args.motifs is not None:
        overrides["num_motifs"] = args.motifs
    if args.perturb is not None:
        overrides["perturb_edge_fraction"] = args.perturb
    if args.attach is not None:
        overrides["ba_attach"] = args.attach
    if args.features is not None:
        overrides["num_features"] = args.features
    try:
        spec = datasets.default_spec(args.kind, seed=args.seed, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    built, truth = datasets.build_synthetic(spec)
    graphs = built if isinstance(built, list) else [built]

    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    noise_info = None
    if args.noisy_features or args.noisy_nodes:
        if len(graphs) != 1:
            raise UsageError("noise injection applies to single-graph datasets")
        g = graphs[0]
        dist = (datasets.UniformSparse(args.noise_p)
                if args.noise_dist == "uniform"
                else datasets.BernoulliLike(args.noise_p))
        if args.noisy_features:
            g, ids = datasets.add_noisy_features(g, args.noisy_features, dist,
                                                 seed=args.seed)
            noise_info = {"kind": "features", "ids": sorted(ids)}
        if args.noisy_nodes:
            g, ids = datasets.add_noisy_nodes(g, args.noisy_nodes,
                                              args.connect_prob, dist,
                                              seed=args.seed)
            noise_info = {"kind": "nodes", "ids": sorted(ids)}
        graphs = [g]

    entries = []
    for i, g in enumerate(graphs):
        name = "graph.txt" if len(graphs) == 1 else f"graph_{i:04d}.txt"
        datasets.save_graph(g, os.path.join(out_dir, name))
        entry = {"path": name}
        if g.graph_label is not None:
            entry["graph_label"] = int(g.graph_label)
        entries.append(entry)
    manifest_path = datasets.write_manifest(out_dir, spec, entries, truth)
    if noise_info is not None:
        with open(manifest_path) as fh:
            doc = json.load(fh)
        doc["noise"] = noise_info
        with open(manifest_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")

    total_nodes = sum(g.num_nodes for g in graphs)
    total_edges = sum(len(g.edges) for g in graphs)
    print(f"{spec.kind}: {len(graphs)} graph(s), {total_nodes} nodes, "
          f"{total_edges} edges -> {manifest_path}")
    return 0


# --- train -------------------------------------------------------------

def cmd_train(args) -> int:
    graphs, _, doc = _load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)

    if len(graphs) > 1:
        task = gnn.GRAPH_TASK
        num_classes = max(g.graph_label for g in graphs) + 1
        in_dim = graphs[0].num_features
        data = graphs
    else:
        task = gnn.NODE_TASK
        g = graphs[0]
        if g.node_labels is None:
            raise UsageError("dataset has no node labels to train on")
        num_classes = int(g.node_labels.max()) + 1
        in_dim = g.num_features
        data = g

    dims = [in_dim] + [args.hidden] * args.layers
    model = gnn.init_model(dims, num_classes, task, seed=args.seed)
    cfg = gnn.TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                          split=tuple(args.split), seed=args.seed,
                          weight_decay=args.weight_decay)
    model, log = gnn.train(model, data, cfg)

    model_path = os.path.join(args.out, "model.txt")
    gnn.save_model(model, model_path)
    final = log[-1]
    _write_json(os.path.join(args.out, "metrics.json"), {
        "dataset": doc.get("kind"),
        "epochs": args.epochs,
        "learning_rate": args.lr,
        "seed": args.seed,
        "train_accuracy": final["train_acc"],
        "val_accuracy": final["val_acc"],
        "test_accuracy": final["test_acc"],
        "final_loss": final["loss"],
    })
    print(f"trained {args.layers}x{args.hidden} {task} model: "
          f"train {final['train_acc']:.3f} val {final['val_acc']:.3f} "
          f"test {final['test_acc']:.3f} -> {model_path}")
    return 0


# --- explain -----------------------------------------------------------

def _explain_options(args, kind: str | None) -> ExplainOptions:
    samples = args.samples
    if samples is None:
        samples = DEFAULT_BUDGETS.get(kind, 400)
    opts = ExplainOptions(
        strategy=args.strategy,
        num_samples=samples,
        lam=args.lam,
        fit_kind=args.fit,
        alpha=args.alpha,
        seed=args.seed,
        indirect_effect=args.indirect_effect,
    )
    return opts


def cmd_explain(args) -> int:
    graphs, _, doc = _load_dataset(args.data)
    model = _load_model(args.model)
    os.makedirs(args.out, exist_ok=True)
    opts = _explain_options(args, doc.get("kind"))

    if model.task == gnn.GRAPH_TASK:
        if args.graph is None:
            raise UsageError("--graph is required for graph-classification models")
        g = graphs[args.graph]
        target = None
    else:
        g = graphs[0]
        if args.node is None and not args.nodes_file:
            raise UsageError("--node (or --nodes-file) is required for node models")
        target = args.node

    if args.contrast_node is not None:
        opts = replace(opts, mode=CONTRASTIVE,
                       contrast_features=g.features[args.contrast_node])
    if args.global_nodes:
        nodes = tuple(int(t) for t in args.global_nodes.split(","))
        opts = replace(opts, mode=GLOBAL_NODE_SET, global_nodes=nodes)

    if args.nodes_file:
        with open(args.nodes_file) as fh:
            targets = [int(t) for t in fh.read().split()]
        explanations = evaluate.explain_targets(g, model, targets, opts,
                                                jobs=args.jobs)
        for e in explanations:
            save_explanation(e, os.path.join(args.out, f"explanation_{e.target}.json"))
        print(f"explained {len(explanations)} nodes -> {args.out}")
        return 0

    e = explain(g, model, target, opts)
    out_doc = e.to_json()
    if args.oracle:
        players = (None if model.task == gnn.GRAPH_TASK
                   else reduce_players(g, model, target, opts.lam))
        if players is None:
            from .explain import graph_task_players
            players = graph_task_players(g, opts.graph_players)
        if players.num_players > masks.ENUMERATION_LIMIT:
            raise UsageError(f"--oracle needs B+D <= {masks.ENUMERATION_LIMIT}")
        value = induced_value_function(g, model, players, target,
                                       opts.perturb_config())
        phi, phi0 = exact_shapley(value, players.num_players)
        deviation = float(np.max(np.abs(e.phi - phi)))
        out_doc["oracle"] = {
            "phi": phi.tolist(),
            "base_value": phi0,
            "max_deviation": deviation,
        }
    path = os.path.join(args.out, "explanation.json")
    _write_json(path, out_doc)
    reports.plot_explanation(e.phi_nodes, e.phi_features,
                             os.path.join(args.out, "explanation.png"))
    gap = e.full_prediction - e.base_value
    print(f"target={e.target} class={e.predicted_class} base={e.base_value:.4f} "
          f"gap={gap:.4f} r2={e.r_squared:.4f} -> {path}")
    return 0


# --- eval --------------------------------------------------------------

def _pick_targets(g, truth, num_targets: int, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    motif_nodes = sorted(truth.motif_nodes)
    if num_targets >= len(motif_nodes):
        return motif_nodes
    return sorted(rng.choice(motif_nodes, size=num_targets, replace=False).tolist())


def cmd_eval(args) -> int:
    graphs, truth, doc = _load_dataset(args.data)
    model = _load_model(args.model)
    g = graphs[0]
    os.makedirs(args.out, exist_ok=True)
    kind = doc.get("kind")
    samples = args.samples or DEFAULT_BUDGETS.get(kind, 400)
    opts = ExplainOptions(strategy=args.strategy, num_samples=samples,
                          seed=args.seed, indirect_effect=args.indirect_effect)

    if args.mode == "accuracy":
        targets = _pick_targets(g, truth, args.num_targets, args.seed)
        explanations = evaluate.explain_targets(g, model, targets, opts, args.jobs)
        report = evaluate.motif_accuracy(explanations, truth)
        evaluate.write_accuracy_csv(os.path.join(args.out, "accuracy.csv"), [{
            "strategy": opts.strategy, "dataset": kind, "P": samples,
            "accuracy": f"{report.accuracy:.4f}"}])
        reports.plot_ablation({opts.strategy: report.accuracy},
                              os.path.join(args.out, "accuracy.png"),
                              title=f"Motif accuracy ({kind}, P={samples})")
        print(f"accuracy={report.accuracy:.4f} over {report.num_targets} targets "
              f"(k={report.k})")
        return 0

    if args.mode == "noise":
        noise = doc.get("noise")
        if not noise:
            raise UsageError("dataset manifest has no injected-noise record")
        noisy_ids = set(noise["ids"])
        rng = np.random.default_rng(args.seed)
        labeled = (np.flatnonzero(g.node_labels >= 0) if g.node_labels is not None
                   else np.arange(g.num_nodes))
        targets = sorted(rng.choice(labeled, size=min(args.num_targets, len(labeled)),
                                    replace=False).tolist())
        explanations = evaluate.explain_targets(g, model, targets, opts, args.jobs)
        result = evaluate.noise_inclusion(explanations, noisy_ids, args.k,
                                          kind=noise["kind"])
        evaluate.write_histogram_csv(os.path.join(args.out, "noise_histogram.csv"),
                                     result["histogram"])
        reports.plot_histogram(result["histogram"],
                               os.path.join(args.out, "noise_histogram.png"))
        print(f"mean noisy {noise['kind']} in top-{args.k}: {result['mean']:.3f}")
        return 0

    if args.mode == "ablation":
        strategies = args.strategies.split(",")
        for s in strategies:
            if s not in masks.STRATEGIES:
                raise UsageError(f"unknown strategy {s!r}")
        targets = _pick_targets(g, truth, args.num_targets, args.seed)
        results = evaluate.ablation_run(g, model, truth, targets, strategies,
                                        samples, args.seed, args.jobs)
        rows = [{"strategy": s, "dataset": kind, "P": samples,
                 "accuracy": f"{a:.4f}"} for s, a in results.items()]
        evaluate.write_accuracy_csv(os.path.join(args.out, "ablation.csv"), rows)
        reports.plot_ablation(results, os.path.join(args.out, "ablation.png"))
        for s, a in results.items():
            print(f"{s}: {a:.4f}")
        return 0

    if args.mode == "timing":
        budgets = [int(t) for t in args.budgets.split(",")] if args.budgets else []
        if not budgets:
            raise UsageError("timing mode needs --budgets")
        targets = _pick_targets(g, truth, args.num_targets, args.seed)
        timings = evaluate.timing_run(g, model, targets, budgets, args.seed)
        evaluate.write_timing_csv(os.path.join(args.out, "timing.csv"), timings)
        reports.plot_timing(timings, os.path.join(args.out, "timing.png"))
        for p, sec in sorted(timings.items()):
            print(f"P={p}: {sec:.3f}s per explanation")
        return 0

    raise UsageError(f"unknown eval mode {args.mode!r}")


# --- parser ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphshapley",
        description="Shapley-value explanations for graph neural networks.")
    parser.add_argument("--config", help="JSON file of default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="build a synthetic benchmark")
    p.add_argument("kind", choices=datasets.KINDS)
    p.add_argument("--base", type=int, help="base structure size")
    p.add_argument("--motifs", type=int, help="number of motifs (or graphs)")
    p.add_argument("--perturb", type=float, help="random-edge fraction")
    p.add_argument("--attach", type=int, help="preferential-attachment parameter")
    p.add_argument("--features", type=int, help="feature dimension")
    p.add_argument("--noisy-features", type=float, default=0.0,
                   help="fraction of noisy feature columns to append")
    p.add_argument("--noisy-nodes", type=float, default=0.0,
                   help="fraction of noisy nodes to append")
    p.add_argument("--noise-p", type=float, default=0.013,
                   help="density of the noise distribution")
    p.add_argument("--noise-dist", choices=["bernoulli", "uniform"],
                   default="bernoulli")
    p.add_argument("--connect-prob", type=float, default=0.003)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the GCN on a dataset")
    p.add_argument("--data", required=True, help="dataset manifest path")
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--hidden", type=int, default=20)
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--split", type=float, nargs=3, default=[0.8, 0.1, 0.1])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="explain one prediction")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--node", type=int)
    p.add_argument("--graph", type=int)
    p.add_argument("--nodes-file", help="file of node ids to explain in bulk")
    p.add_argument("--strategy", choices=masks.STRATEGIES,
                   default=masks.SMARTER_SEPARATE)
    p.add_argument("--samples", type=int,
                   help="coalition budget (defaults per dataset kind)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--alpha", type=float, help="node/feature importance split")
    p.add_argument("--fit", choices=["wlr", "lasso"], default="wlr")
    p.add_argument("--indirect-effect", action="store_true")
    p.add_argument("--contrast-node", type=int)
    p.add_argument("--global-nodes", help="comma-separated node ids")
    p.add_argument("--oracle", action="store_true",
                   help="also run the exact enumeration oracle")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("eval", help="evaluation reports (CSV + PNG)")
    p.add_argument("--mode", choices=["accuracy", "noise", "ablation", "timing"],
                   required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--strategy", choices=masks.STRATEGIES,
                   default=masks.SMARTER_SEPARATE)
    p.add_argument("--strategies", default="random,smarterseparate")
    p.add_argument("--samples", type=int)
    p.add_argument("--budgets", help="comma-separated budgets for timing mode")
    p.add_argument("--num-targets", type=int, default=20)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--indirect-effect", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # A config file supplies default flag values; explicit flags win.
    if "--config" in argv:
        idx = argv.index("--config")
        config_path = argv[idx + 1]
        try:
            with open(config_path) as fh:
                config = json.load(fh)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    else:
        config = {}
    parser = build_parser()
    if config:
        for action in parser._subparsers._group_actions[0].choices.values():
            known = {a.dest for a in action._actions}
            action.set_defaults(**{k.replace("-", "_"): v for k, v in config.items()
                                   if k.replace("-", "_") in known})
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GraphShapleyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

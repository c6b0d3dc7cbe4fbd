"""Shapley-value explanations for graph neural network predictions.

Coalitions of node features and neighbor nodes are perturbed, a frozen
GCN is evaluated on each perturbed graph, and a kernel-weighted linear
surrogate is fitted; its coefficients are the explanation.
"""

from .errors import (BudgetTooSmall, DimensionMismatch, EmptyPlayerSet,
                     GraphShapleyError, InconsistentDimensions,
                     InsufficientSamples, MissingLabels, NoPath, ParseError,
                     SingularSystem, TargetNotInMotif, TooManyPlayers)
from .explain import (ExplainOptions, Explanation, exact_shapley, explain,
                      fit_explanation, induced_value_function,
                      load_explanation, normal_matrix_check, rescale,
                      save_explanation)
from .gnn import (GnnModel, TrainConfig, gcn_forward, grad_check, init_model,
                  load_model, save_model, train)
from .graph import Graph, isolate_nodes, k_hop_neighbors, shortest_path
from .masks import (MaskBatch, PlayerIndex, gen_masks, kernel_weight,
                    reduce_players)
from .perturb import (PerturbConfig, PerturbSample, apply_indirect_effect,
                      eval_samples, gen_perturbed)

__version__ = "1.0.0"

__all__ = [
    "BudgetTooSmall", "DimensionMismatch", "EmptyPlayerSet",
    "GraphShapleyError", "InconsistentDimensions", "InsufficientSamples",
    "MissingLabels", "NoPath", "ParseError", "SingularSystem",
    "TargetNotInMotif", "TooManyPlayers",
    "ExplainOptions", "Explanation", "exact_shapley", "explain",
    "fit_explanation", "induced_value_function", "load_explanation",
    "normal_matrix_check", "rescale", "save_explanation",
    "GnnModel", "TrainConfig", "gcn_forward", "grad_check", "init_model",
    "load_model", "save_model", "train",
    "Graph", "isolate_nodes", "k_hop_neighbors", "shortest_path",
    "MaskBatch", "PlayerIndex", "gen_masks", "kernel_weight",
    "reduce_players",
    "PerturbConfig", "PerturbSample", "apply_indirect_effect",
    "eval_samples", "gen_perturbed",
    "__version__",
]

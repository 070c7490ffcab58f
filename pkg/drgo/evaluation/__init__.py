"""Ranking metrics and the weighted BPR variance diagnostic

Experiment harnesses that train models live in `drgo.evaluation.experiments`.
"""
from .exceptions import EmptyPositivesError, EvaluationError, VarianceDiagnosticError
from .ranking import DEFAULT_KS, EvalReport, evaluate, ndcg_at_k, recall_at_k, split_report, top_k_items
from .variance import noisy_weight_path, synthetic_variance_diagnostic, triplet_leverage, weighted_bpr_variance

__all__ = [
    "DEFAULT_KS",
    "EvalReport",
    "EmptyPositivesError",
    "EvaluationError",
    "VarianceDiagnosticError",
    "evaluate",
    "ndcg_at_k",
    "noisy_weight_path",
    "recall_at_k",
    "split_report",
    "synthetic_variance_diagnostic",
    "top_k_items",
    "triplet_leverage",
    "weighted_bpr_variance",
]

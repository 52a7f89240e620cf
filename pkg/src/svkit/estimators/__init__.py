from .baselines import linear_closed_form, loo_result, loo_values, uniform_division, uniform_result
from .coalition import gt_shapley, mle_shapley, re_shapley, regression_weight
from .core import MarginalStats, Session, ShapleyResult
from .exact import exact_shapley, shapley_from_table
from .permutation import cp_shapley, mc_shapley

SAMPLING_ALGOS = ("MC", "RE", "MLE", "GT", "CP")
ALGOS = ("exact", "MC", "RE", "MLE", "GT", "CP", "LOO", "UNIF", "LINEAR")

__all__ = [
    "ALGOS", "SAMPLING_ALGOS", "MarginalStats", "Session", "ShapleyResult",
    "cp_shapley", "exact_shapley", "gt_shapley", "linear_closed_form", "loo_result",
    "loo_values", "mc_shapley", "mle_shapley", "re_shapley", "regression_weight",
    "shapley_from_table", "uniform_division", "uniform_result",
]

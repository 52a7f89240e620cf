"""Shapley value estimation for data-analytics games."""
from .convergence import ConvergenceState, NotReady, update_and_check
from .estimators import (ShapleyResult, cp_shapley, exact_shapley, gt_shapley, linear_closed_form,
                         loo_values, mc_shapley, mle_shapley, re_shapley, uniform_division)
from .game import (Coalition, GameSpec, PlayerSet, UtilityCache, UtilityFunction, complement,
                   eval_utility, make_game, predecessors)
from .registry import register_extension

__version__ = "0.1.0"

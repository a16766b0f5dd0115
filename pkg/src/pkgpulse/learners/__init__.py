from .forest import (DEFAULT_HYPERPARAMS, ForestParams, RegressionTree, best_split, fit_tree,
                     forest_fit, forest_predict)
from .grid import DEFAULT_GRID, GridResult, expand_grid, grid_search
from .rankers import (RankerParams, UntrainedModelError, init_params, lr_pair_grad, lr_pair_loss,
                      lr_score, mlp_pair_grad, mlp_pair_loss, mlp_score, pair_grad, pair_loss,
                      score, sgd_fit, sigmoid, softplus)

__all__ = [
    "DEFAULT_GRID", "DEFAULT_HYPERPARAMS", "ForestParams", "GridResult", "RankerParams",
    "RegressionTree", "UntrainedModelError", "best_split", "expand_grid", "fit_tree",
    "forest_fit", "forest_predict", "grid_search", "init_params", "lr_pair_grad", "lr_pair_loss",
    "lr_score", "mlp_pair_grad", "mlp_pair_loss", "mlp_score", "pair_grad", "pair_loss", "score",
    "sgd_fit", "sigmoid", "softplus",
]

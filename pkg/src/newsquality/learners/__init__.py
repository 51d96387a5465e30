from .gbt import GbtModel, GbtParams, RegressionTree, feature_importance, rank, train_gbt
from .logistic import LogisticModel, SchemaError, train_logistic
from .validation import cross_validate, fold_assignment, train_test_split

__all__ = [
    "GbtModel", "GbtParams", "RegressionTree", "feature_importance", "rank", "train_gbt",
    "LogisticModel", "SchemaError", "train_logistic",
    "cross_validate", "fold_assignment", "train_test_split",
]

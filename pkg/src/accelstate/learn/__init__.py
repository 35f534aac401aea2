"""From-scratch RF / GB / SVM classifiers for windowed accelerometer features."""

from .estimators import (
    SMO_MAX_ITER,
    SMO_TOLERANCE,
    Boosting,
    Forest,
    GbParams,
    RfParams,
    SvmModel,
    SvmParams,
    fit_boosting,
    fit_forest,
    fit_svm_model,
    kernel_matrix,
    log_loss,
)
from .model import (
    ClassifierKind,
    StandardizationStats,
    TrainedClassifier,
    classify_with_threshold,
    fit_classifier,
    fit_gradient_boosting,
    fit_random_forest,
    fit_svm,
    gini_importance,
    load_model,
    model_from_dict,
    model_to_dict,
    predict_scores,
    save_model,
    select_top_k,
    standardize_apply,
    standardize_fit,
)
from .tree import Tree, derive_seed, fit_decision_tree, fit_regression_tree

__all__ = [
    "Boosting",
    "ClassifierKind",
    "Forest",
    "GbParams",
    "RfParams",
    "SMO_MAX_ITER",
    "SMO_TOLERANCE",
    "StandardizationStats",
    "SvmModel",
    "SvmParams",
    "TrainedClassifier",
    "Tree",
    "classify_with_threshold",
    "derive_seed",
    "fit_boosting",
    "fit_classifier",
    "fit_decision_tree",
    "fit_forest",
    "fit_gradient_boosting",
    "fit_random_forest",
    "fit_regression_tree",
    "fit_svm",
    "fit_svm_model",
    "gini_importance",
    "kernel_matrix",
    "load_model",
    "log_loss",
    "model_from_dict",
    "model_to_dict",
    "predict_scores",
    "save_model",
    "select_top_k",
    "standardize_apply",
    "standardize_fit",
]

"""Auditing conditional coverage of prediction sets."""

from .data import Dataset, DataError, Schema, load_csv, make_folds, write_csv
from .ert import ERTReport, ert_from_predictions, ert_kfold, ert_oracle, ert_terms
from .classifiers import ClassifierSpec, fit_classifier
from .scores import BRIER, L1, LOG_LOSS, ProperScore, divergence, get_score, split_over_under

__version__ = "0.1.0"

__all__ = [
    "BRIER",
    "ClassifierSpec",
    "DataError",
    "Dataset",
    "ERTReport",
    "L1",
    "LOG_LOSS",
    "ProperScore",
    "Schema",
    "divergence",
    "ert_from_predictions",
    "ert_kfold",
    "ert_oracle",
    "ert_terms",
    "fit_classifier",
    "get_score",
    "load_csv",
    "make_folds",
    "split_over_under",
    "write_csv",
]

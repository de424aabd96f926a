"""QDA with a reduced feature space built from shrinkage precision estimates.

Estimator options use the same keys as a pipeline entry in a JSON config
(``penalty``, ``lambda``, ``gamma``, ``standardize_mean``, ``admm``, ...).
"""

from __future__ import annotations

import json
import os
from typing import Any, Sequence

import numpy as np

from . import _core
from ._core import QdaModel, SsdrError

__version__ = _core.__version__

__all__ = [
    "QDA",
    "SSDRClassifier",
    "SsdrError",
    "cross_validate",
    "estimate_precision",
    "load_csv",
    "mhat",
    "projection_basis",
    "simulate",
]


def _options(estimator: str, options: dict[str, Any]) -> str:
    return json.dumps({"estimator": estimator, **options})


def _encode_labels(y: Sequence[Any]) -> tuple[np.ndarray, list[int]]:
    classes, codes = np.unique(np.asarray(y), return_inverse=True)
    return classes, codes.astype(int).tolist()


def _features(x: Any) -> np.ndarray:
    return np.asarray(x, dtype=float, order="F")


def estimate_precision(cov, n: int, estimator: str = "sample", mean=None, **options) -> dict:
    """Precision estimate for one class from its covariance (divisor n) and size."""
    cov = np.asarray(cov, dtype=float)
    mean = np.zeros(0) if mean is None else np.asarray(mean, dtype=float)
    return _core.estimate_precision(cov, int(n), mean, _options(estimator, options))


def mhat(x, y, estimator: str = "sample", **options) -> np.ndarray:
    """Dimension-reduction matrix built from the class summaries of (x, y)."""
    _, codes = _encode_labels(y)
    return _core.mhat(_features(x), codes, _options(estimator, options))


def projection_basis(m: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading r left singular vectors of m and all singular values."""
    u, sv, _, _ = _core.projection_basis(np.asarray(m, dtype=float), int(r))
    return u, sv


class QDA:
    """Quadratic discriminant analysis with a pluggable precision estimator."""

    def __init__(self, estimator: str = "sample", **options):
        self.estimator = estimator
        self.options = options

    def fit(self, x, y) -> "QDA":
        self.classes_, codes = _encode_labels(y)
        self.model_ = QdaModel.fit(_features(x), codes, _options(self.estimator, self.options))
        return self

    def decision_scores(self, x) -> np.ndarray:
        return self.model_.scores(_features(x))

    def predict(self, x) -> np.ndarray:
        return self.classes_[np.asarray(self.model_.predict(_features(x)), dtype=int)]

    def error_rate(self, x, y) -> float:
        return float(np.mean(self.predict(x) != np.asarray(y)))


class SSDRClassifier:
    """Project onto r directions of the stabilized matrix, then fit sample QDA there."""

    def __init__(self, r: int, estimator: str = "sample", **options):
        self.r = r
        self.estimator = estimator
        self.options = options

    def fit(self, x, y) -> "SSDRClassifier":
        x = _features(x)
        self.basis_, self.singular_values_ = projection_basis(
            mhat(x, y, self.estimator, **self.options), self.r)
        self.qda_ = QDA().fit(x @ self.basis_, y)
        return self

    def transform(self, x) -> np.ndarray:
        return _features(x) @ self.basis_

    def predict(self, x) -> np.ndarray:
        return self.qda_.predict(self.transform(x))

    def error_rate(self, x, y) -> float:
        return self.qda_.error_rate(self.transform(x), y)


def load_csv(path: str | os.PathLike, label_column: str | int = 0, header: bool = True):
    """(features, labels, class_names); an int label_column is a 0-based index."""
    label = f"#{label_column}" if isinstance(label_column, int) else label_column
    x, y, names = _core.load_csv(os.fspath(path), label, header)
    return x, np.asarray(y, dtype=int), list(names)


def _with_schema(config: dict) -> str:
    return json.dumps({"schema_version": 1, **config})


def simulate(config: dict) -> dict:
    """Monte Carlo study; ``config`` takes the keys of a ``simulate`` config file."""
    return json.loads(_core.simulate(_with_schema(config)))


def cross_validate(config: dict, base_dir: str | os.PathLike = ".") -> dict:
    """Repeated stratified k-fold CV; ``config`` takes the keys of a ``cv`` config file."""
    return json.loads(_core.cross_validate(_with_schema(config), os.fspath(base_dir)))

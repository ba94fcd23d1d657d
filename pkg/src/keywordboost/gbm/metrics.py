"""Binary classification metrics in the precision / recall / F1 / support layout."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    per_class: dict  # label -> ClassMetrics
    accuracy: float

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def confusion(self):
        """[[tn, fp], [fn, tp]] with rows = true label, columns = predicted label."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])


def _ratio(a, b):
    return a / b if b else 0.0


def _class_metrics(tp, fp, fn):
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return ClassMetrics(precision, recall, f1, tp + fn)


def classification_metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise DomainError("need equal-length, non-empty label arrays")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    per_class = {1: _class_metrics(tp, fp, fn), 0: _class_metrics(tn, fn, fp)}
    return Metrics(tp, fp, tn, fn, per_class, (tp + tn) / y_true.size)


def evaluate(model, X, y, threshold=0.5) -> Metrics:
    """Predict label 1 iff the probability exceeds ``threshold``."""
    return classification_metrics(y, (model.predict_proba(X) > threshold).astype(np.int64))

"""Gradient boosting on squared loss with optional GOSS sampling and feature bundling."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DomainError
from .binning import BinMapper
from .efb import bundle_columns, efb_bundle, singleton_bundles
from .goss import GossConfig, goss_partition
from .tree import BinnedData, grow_tree


@dataclass(frozen=True)
class TrainConfig:
    num_leaves: int = 31
    min_data_in_leaf: int = 20
    max_depth: int | None = None
    learning_rate: float = 0.01
    num_iterations: int = 500
    goss: GossConfig | None = None
    efb: float | None = None  # max conflict rate; None disables bundling
    max_bins: int = 255
    loss: str = "squared"
    seed: int = 0

    def __post_init__(self):
        if self.num_leaves < 2:
            raise DomainError("num_leaves must be >= 2")
        if self.min_data_in_leaf < 1:
            raise DomainError("min_data_in_leaf must be >= 1")
        if self.num_iterations < 0 or not self.learning_rate > 0:
            raise DomainError("need num_iterations >= 0 and learning_rate > 0")
        if self.loss not in ("squared", "logistic"):
            raise DomainError(f"unknown loss {self.loss!r}")
        if self.efb is not None and not (0 <= self.efb <= 1):
            raise DomainError("efb max conflict rate must be in [0, 1]")

    def plain(self):
        """Same setup with GOSS and bundling switched off."""
        return replace(self, goss=None, efb=None)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def compute_gradients(labels, predictions, loss="squared"):
    """Negative gradients: y - F for squared loss, y - sigmoid(F) for logistic."""
    y = np.asarray(labels, dtype=np.float64)
    F = np.asarray(predictions, dtype=np.float64)
    if y.shape != F.shape:
        raise DomainError("labels and predictions differ in length")
    if loss == "logistic":
        return y - _sigmoid(F)
    return y - F


@dataclass
class Ensemble:
    trees: list
    learning_rate: float
    n_features: int
    config: TrainConfig = field(default_factory=TrainConfig)
    bundles: list = field(default_factory=list)
    history: dict = field(default_factory=dict)

    def raw_score(self, X):
        X = _check_matrix(X, self.n_features)
        F = np.zeros(X.shape[0])
        for tree in self.trees:
            F += self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X):
        F = self.raw_score(X)
        if self.config.loss == "logistic":
            return _sigmoid(F)
        return np.clip(F, 0.0, 1.0)

    def predict_label(self, X, threshold=0.5):
        return (self.predict_proba(X) > threshold).astype(np.int64)


def _check_matrix(X, n_features):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise DomainError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def predict(model: Ensemble, row) -> float:
    """Probability of label 1 for a single row."""
    return float(model.predict_proba(np.asarray(row, dtype=np.float64)[None, :])[0])


def prepare(X, cfg: TrainConfig) -> BinnedData:
    mapper = BinMapper(cfg.max_bins).fit(X)
    binned = mapper.transform(X)
    n_bins = mapper.n_bins
    if cfg.efb is None:
        bundles = singleton_bundles(n_bins)
    else:
        # only features whose bin 0 means zero can share a bundle
        bundles = efb_bundle(binned != 0, cfg.efb, n_bins, mapper.zero_bin)
    return BinnedData(mapper, bundles, bundle_columns(binned, bundles))


def _squared_residual(y, F):
    return float(np.mean((y - F) ** 2))


def fit_ensemble(X, y, cfg: TrainConfig = TrainConfig(), eval_set=None) -> Ensemble:
    """Boost ``cfg.num_iterations`` trees; F starts at 0 and moves by learning_rate * tree.

    With ``eval_set=(X_val, y_val)`` the per-iteration loss (mean squared residual
    of the probability) and accuracy of both sets are recorded in ``history``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("training matrix is empty")
    if len(y) != X.shape[0]:
        raise DomainError("labels and rows differ in length")
    data = prepare(X, cfg)
    rng = np.random.default_rng(cfg.seed)
    H = X.shape[0]
    F = np.zeros(H)
    model = Ensemble([], cfg.learning_rate, X.shape[1], cfg, data.bundles)
    history = {"train_loss": [], "train_acc": [], "val_loss": [], "val_acc": []}
    if eval_set is not None:
        X_val = _check_matrix(eval_set[0], X.shape[1])
        y_val = np.asarray(eval_set[1], dtype=np.float64)
        F_val = np.zeros(len(y_val))
    for _ in range(cfg.num_iterations):
        delta = compute_gradients(y, F, cfg.loss)
        if cfg.goss is not None:
            sample = goss_partition(delta, cfg.goss, rng)
            grad = delta * sample.weights(H)
        else:
            grad = delta
        tree, leaves = grow_tree(data, grad, num_leaves=cfg.num_leaves, min_data_in_leaf=cfg.min_data_in_leaf,
                                 max_depth=cfg.max_depth)
        for node, rows in leaves:
            F[rows] += cfg.learning_rate * tree.value[node]
        model.trees.append(tree)
        if eval_set is not None:
            F_val += cfg.learning_rate * tree.predict(X_val)
            _record(history, "train", y, F, cfg.loss)
            _record(history, "val", y_val, F_val, cfg.loss)
    model.history = history
    return model


def _record(history, prefix, y, F, loss):
    p = _sigmoid(F) if loss == "logistic" else np.clip(F, 0.0, 1.0)
    history[f"{prefix}_loss"].append(_squared_residual(y, p if loss == "logistic" else F))
    history[f"{prefix}_acc"].append(float(np.mean((p > 0.5) == (y > 0.5))))


def feature_importance(model: Ensemble):
    """(feature, number of splits) over all trees, most used first, ties by index."""
    counts = np.zeros(model.n_features, dtype=np.int64)
    for tree in model.trees:
        np.add.at(counts, tree.split_features(), 1)
    return sorted(((f, int(c)) for f, c in enumerate(counts)), key=lambda e: (-e[1], e[0]))

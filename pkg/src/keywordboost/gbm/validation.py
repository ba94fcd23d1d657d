"""Seeded stratified splits and repeated-holdout cross-validation."""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DomainError, StratificationError
from .boosting import TrainConfig, fit_ensemble


def stratified_split(y, test_fraction, rng):
    """(train_idx, test_idx), both sorted; class proportions kept by largest remainder."""
    if not (0 < test_fraction < 1):
        raise DomainError("test_fraction must be in (0, 1)")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    y = np.asarray(y)
    classes = [0, 1]
    idx = {c: np.flatnonzero(y == c) for c in classes}
    for c in classes:
        if len(idx[c]) < 2:
            raise StratificationError(f"class {c} has {len(idx[c])} rows; need at least 2")
    n_test = int(np.floor(test_fraction * len(y) + 0.5))
    exact = {c: test_fraction * len(idx[c]) for c in classes}
    take = {c: int(np.floor(exact[c])) for c in classes}
    by_remainder = sorted(classes, key=lambda c: (-(exact[c] - take[c]), c))
    for c in by_remainder[: max(0, n_test - sum(take.values()))]:
        take[c] += 1
    train, test = [], []
    for c in classes:
        take[c] = min(max(take[c], 1), len(idx[c]) - 1)
        perm = rng.permutation(idx[c])
        test.append(perm[: take[c]])
        train.append(perm[take[c]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def kfold_indices(y, folds, rng):
    """Stratified k-fold assignment: list of (train_idx, val_idx)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    y = np.asarray(y)
    fold_of = np.empty(len(y), dtype=np.int64)
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) < 2:
            raise StratificationError(f"class {c} has {len(members)} rows; need at least 2")
        perm = rng.permutation(members)
        fold_of[perm] = np.arange(len(perm)) % folds
    return [(np.flatnonzero(fold_of != k), np.flatnonzero(fold_of == k)) for k in range(folds)]


@dataclass
class CvReport:
    curves: list          # one dict of per-iteration lists per repetition
    val_accuracy: list    # final validation accuracy per repetition
    train_sizes: list
    val_sizes: list

    @property
    def mean_accuracy(self):
        return float(np.mean(self.val_accuracy))

    @property
    def std_accuracy(self):
        return float(np.std(self.val_accuracy))


def cross_validate(X, y, cfg: TrainConfig = TrainConfig(), repetitions=10, val_fraction=0.2, seed=0,
                   mode="repeated") -> CvReport:
    """Repeated stratified holdout (``repeated``) or stratified k-fold (``kfold``)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    if mode == "repeated":
        splits = [stratified_split(y, val_fraction, rng) for _ in range(repetitions)]
    elif mode == "kfold":
        splits = kfold_indices(y, repetitions, rng)
    else:
        raise DomainError(f"unknown cv mode {mode!r}")
    report = CvReport([], [], [], [])
    for rep, (tr, va) in enumerate(splits):
        model = fit_ensemble(X[tr], y[tr], _with_seed(cfg, seed, rep), eval_set=(X[va], y[va]))
        report.curves.append(model.history)
        acc = model.history["val_acc"][-1] if model.history["val_acc"] else float(
            np.mean((model.predict_proba(X[va]) > 0.5) == (y[va] == 1)))
        report.val_accuracy.append(acc)
        report.train_sizes.append(len(tr))
        report.val_sizes.append(len(va))
    return report


def _with_seed(cfg, seed, rep):
    return replace(cfg, seed=int(np.random.SeedSequence([cfg.seed, seed, rep]).generate_state(1)[0]))

"""Equal-frequency quantile binning of non-negative feature columns."""

import numpy as np

from ..errors import DomainError


def _quantile_edges(values, max_bins):
    """Upper bin edges that are actual data values, one per equal-frequency bin."""
    v = np.sort(values)
    distinct = np.unique(v)
    if len(distinct) <= max_bins:
        return distinct
    n = len(v)
    ranks = np.ceil(np.arange(1, max_bins + 1) * n / max_bins).astype(np.int64) - 1
    return np.unique(v[ranks])


class BinMapper:
    """Per-feature bin edges; bin b holds values in (edges[b-1], edges[b]].

    Columns containing zeros reserve bin 0 for exactly zero so that sparse
    features can share a bundle.
    """

    def __init__(self, max_bins=255):
        if max_bins < 2:
            raise DomainError("max_bins must be >= 2")
        self.max_bins = max_bins
        self.edges = []

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        if not np.all(np.isfinite(X)) or np.any(X < 0):
            raise DomainError("features must be finite and non-negative")
        self.edges = []
        for col in X.T:
            nonzero = col[col != 0]
            if len(nonzero) < len(col):
                rest = _quantile_edges(nonzero, self.max_bins - 1) if len(nonzero) else np.zeros(0)
                edges = np.concatenate([[0.0], rest])
            else:
                edges = _quantile_edges(col, self.max_bins)
            self.edges.append(edges)
        return self

    @property
    def n_bins(self):
        return np.array([len(e) for e in self.edges], dtype=np.int64)

    @property
    def zero_bin(self):
        """True where bin 0 means exactly zero."""
        return np.array([e[0] == 0.0 for e in self.edges])

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape, dtype=np.int32)
        for f, edges in enumerate(self.edges):
            out[:, f] = np.minimum(np.searchsorted(edges, X[:, f], side="left"), len(edges) - 1)
        return out

    def threshold(self, feature, bin_index):
        return float(self.edges[feature][bin_index])

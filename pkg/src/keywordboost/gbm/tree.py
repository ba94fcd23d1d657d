"""Leaf-wise histogram tree growth on bundled, binned features."""

import heapq
from dataclasses import dataclass

import numpy as np
from numba import njit

NO_FEATURE = -1


@njit(cache=True)
def _node_totals(rows, grad):
    s = 0.0
    for r in rows:
        s += grad[r]
    return s


@njit(cache=True)
def _build_histogram(rows, columns, grad, group_base, n_flat):
    hist_g = np.zeros(n_flat)
    hist_c = np.zeros(n_flat, dtype=np.int64)
    n_groups = columns.shape[1]
    for r in rows:
        g = grad[r]
        for k in range(n_groups):
            idx = group_base[k] + columns[r, k]
            hist_g[idx] += g
            hist_c[idx] += 1
    return hist_g, hist_c


@njit(cache=True)
def _best_split(hist_g, hist_c, feat_base, feat_bins, total_g, total_c, min_leaf, allowed):
    best_gain = -np.inf
    best_f = -1
    best_b = -1
    best_sl = 0.0
    best_cl = 0
    for f in range(feat_base.shape[0]):
        n = feat_bins[f]
        if n < 2 or not allowed[f]:
            continue
        base = feat_base[f]
        nz_g = 0.0
        nz_c = 0
        for b in range(1, n):
            nz_g += hist_g[base + b]
            nz_c += hist_c[base + b]
        # bin 0 by subtraction: zeros are never accumulated explicitly
        sl = total_g - nz_g
        cl = total_c - nz_c
        for b in range(n - 1):
            if b > 0:
                sl += hist_g[base + b]
                cl += hist_c[base + b]
            cr = total_c - cl
            if cl < min_leaf or cr < min_leaf:
                continue
            sr = total_g - sl
            gain = (sl * sl / cl + sr * sr / cr) / total_c
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_b = b
                best_sl = sl
                best_cl = cl
    return best_f, best_b, best_gain, best_sl, best_cl


@njit(cache=True)
def _partition(rows, column, offset, n_bins, threshold_bin):
    left = np.empty(rows.shape[0], dtype=np.int64)
    right = np.empty(rows.shape[0], dtype=np.int64)
    nl = 0
    nr = 0
    for r in rows:
        v = column[r]
        b = v - offset if offset <= v < offset + n_bins else 0
        if b <= threshold_bin:
            left[nl] = r
            nl += 1
        else:
            right[nr] = r
            nr += 1
    return left[:nl], right[:nr]


@njit(cache=True)
def _predict_tree(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def _apply_tree(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@dataclass
class Tree:
    """Flat node arrays; node 0 is the root, feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    threshold_bin: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def predict(self, X):
        return _predict_tree(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold,
                             self.left, self.right, self.value)

    def apply(self, X):
        return _apply_tree(np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold,
                           self.left, self.right)

    def split_features(self):
        return self.feature[self.feature >= 0]

    def preorder(self):
        """Node indices in preorder."""
        out, stack = [], [0]
        while stack:
            n = stack.pop()
            out.append(n)
            if self.feature[n] >= 0:
                stack.append(int(self.right[n]))
                stack.append(int(self.left[n]))
        return out

    @classmethod
    def from_preorder(cls, nodes):
        """Rebuild from [(feature, threshold) | (None, value)] in preorder."""
        n = len(nodes)
        feature = np.full(n, NO_FEATURE, dtype=np.int64)
        threshold = np.zeros(n)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        value = np.zeros(n)
        pos = 0

        def build():
            nonlocal pos
            idx = pos
            pos += 1
            f, v = nodes[idx]
            if f is None:
                value[idx] = v
            else:
                feature[idx], threshold[idx] = f, v
                left[idx] = build()
                right[idx] = build()
            return idx

        build()
        return cls(feature, threshold, np.full(n, -1, dtype=np.int64), left, right, value,
                   np.zeros(n, dtype=np.int64))


class BinnedData:
    """Training matrix after binning and bundling, plus lookup tables for the kernels."""

    def __init__(self, mapper, bundles, columns):
        self.mapper = mapper
        self.bundles = bundles
        self.columns = np.ascontiguousarray(columns, dtype=np.int32)
        n_features = len(mapper.edges)
        self.n_features = n_features
        group_base = np.zeros(len(bundles), dtype=np.int64)
        feat_base = np.zeros(n_features, dtype=np.int64)
        feat_group = np.zeros(n_features, dtype=np.int64)
        feat_offset = np.zeros(n_features, dtype=np.int64)
        acc = 0
        for g, bundle in enumerate(bundles):
            group_base[g] = acc
            for f, off in zip(bundle.members, bundle.offsets):
                feat_base[f] = acc + off
                feat_group[f] = g
                feat_offset[f] = off
            acc += bundle.total_bins
        self.group_base = group_base
        self.n_flat = acc
        self.feat_base = feat_base
        self.feat_group = feat_group
        self.feat_offset = feat_offset
        self.feat_bins = mapper.n_bins


@dataclass(order=True)
class _Candidate:
    priority: float
    order: int
    node: int = 0
    feature: int = 0
    threshold_bin: int = 0


def grow_tree(data: BinnedData, grad, rows=None, num_leaves=31, min_data_in_leaf=20, max_depth=None,
              allowed=None):
    """Grow one regression tree on (possibly GOSS-weighted) gradients.

    Leaves are split best-first by squared-error reduction; the split within a
    leaf maximises the variance gain over all histogram bins. Leaf values are the
    weighted gradient sum over the leaf's row count.
    """
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    if rows is None:
        rows = np.arange(data.columns.shape[0], dtype=np.int64)
    if allowed is None:
        allowed = np.ones(data.n_features, dtype=np.bool_)
    nodes_rows = [rows]
    nodes_sum = [_node_totals(rows, grad)]
    nodes_depth = [0]
    feature = [NO_FEATURE]
    threshold = [0.0]
    threshold_bin = [-1]
    left = [-1]
    right = [-1]
    heap = []
    counter = 0

    def consider(node):
        nonlocal counter
        r = nodes_rows[node]
        c = len(r)
        if c < 2 * min_data_in_leaf or (max_depth is not None and nodes_depth[node] >= max_depth):
            return
        hg, hc = _build_histogram(r, data.columns, grad, data.group_base, data.n_flat)
        s = nodes_sum[node]
        f, b, gain, sl, cl = _best_split(hg, hc, data.feat_base, data.feat_bins, s, c, min_data_in_leaf, allowed)
        if f < 0:
            return
        parent = s * s / c
        improvement = gain * c - parent
        if not improvement > 1e-10 * abs(parent):
            return
        heapq.heappush(heap, _Candidate(-improvement, counter, node, int(f), int(b)))
        counter += 1

    consider(0)
    n_leaves = 1
    while heap and n_leaves < num_leaves:
        cand = heapq.heappop(heap)
        node, f = cand.node, cand.feature
        g = data.feat_group[f]
        lrows, rrows = _partition(nodes_rows[node], data.columns[:, g], data.feat_offset[f],
                                  data.feat_bins[f], cand.threshold_bin)
        feature[node] = f
        threshold_bin[node] = cand.threshold_bin
        threshold[node] = data.mapper.threshold(f, cand.threshold_bin)
        children = []
        for child_rows in (lrows, rrows):
            idx = len(nodes_rows)
            nodes_rows.append(child_rows)
            nodes_sum.append(_node_totals(child_rows, grad))
            nodes_depth.append(nodes_depth[node] + 1)
            feature.append(NO_FEATURE)
            threshold.append(0.0)
            threshold_bin.append(-1)
            left.append(-1)
            right.append(-1)
            children.append(idx)
        left[node], right[node] = children
        nodes_rows[node] = None
        n_leaves += 1
        for child in children:
            consider(child)

    n = len(feature)
    value = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    leaf_rows = []
    for i in range(n):
        if feature[i] == NO_FEATURE:
            r = nodes_rows[i]
            count[i] = len(r)
            value[i] = nodes_sum[i] / len(r) if len(r) else 0.0
            leaf_rows.append((i, r))
    tree = Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(threshold_bin, dtype=np.int64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), value, count)
    return tree, leaf_rows


def best_root_split(data: BinnedData, grad, min_data_in_leaf=1):
    """(feature, threshold, gain) of the best split at the root, or None."""
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    rows = np.arange(data.columns.shape[0], dtype=np.int64)
    hg, hc = _build_histogram(rows, data.columns, grad, data.group_base, data.n_flat)
    allowed = np.ones(data.n_features, dtype=np.bool_)
    f, b, gain, _, _ = _best_split(hg, hc, data.feat_base, data.feat_bins, _node_totals(rows, grad), len(rows),
                                   min_data_in_leaf, allowed)
    if f < 0:
        return None
    return int(f), data.mapper.threshold(f, b), float(gain)

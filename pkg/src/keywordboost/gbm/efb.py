"""Exclusive feature bundling.

Features that are rarely nonzero on the same rows are packed into one column:
member f keeps its bins shifted by a cumulative offset, and a row where every
member is zero maps to 0.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FeatureBundle:
    members: tuple  # feature indices, ascending offset
    bin_counts: tuple
    offsets: tuple
    conflict_count: int = 0

    @classmethod
    def of(cls, members, bin_counts, conflict_count=0):
        offsets, acc = [], 0
        for n in bin_counts:
            offsets.append(acc)
            acc += int(n)
        return cls(tuple(int(m) for m in members), tuple(int(n) for n in bin_counts), tuple(offsets),
                   int(conflict_count))

    @property
    def total_bins(self):
        return self.offsets[-1] + self.bin_counts[-1]


def efb_merge_row(values, bundle: FeatureBundle):
    """Bundled value of one row given its member values (bins).

    The nonzero member contributes value + offset; on a conflict the member with
    the highest offset wins.
    """
    out = 0
    for v, offset in zip(values, bundle.offsets):
        if v != 0:
            out = v + offset
    return out


def conflict_matrix(nonzero):
    """Pairwise counts of rows where both features are nonzero."""
    nz = np.asarray(nonzero, dtype=np.float64)
    return (nz.T @ nz).astype(np.int64)


def efb_bundle(nonzero, max_conflict_rate=0.0, bin_counts=None, bundleable=None):
    """Greedy bundling: visit features by descending conflict degree, put each into
    the first bundle it fits in, else open a new one.

    ``nonzero`` is an (H, F) boolean matrix. A feature fits a bundle if the total
    conflicts of the bundle stay within ``max_conflict_rate * H``. Features marked
    False in ``bundleable`` always stay alone.
    """
    nonzero = np.asarray(nonzero, dtype=bool)
    H, F = nonzero.shape
    if bin_counts is None:
        bin_counts = np.full(F, 2, dtype=np.int64)
    if bundleable is None:
        bundleable = np.ones(F, dtype=bool)
    conflicts = conflict_matrix(nonzero)
    np.fill_diagonal(conflicts, 0)
    degree = (conflicts > 0).sum(axis=1)
    order = sorted(range(F), key=lambda f: (-degree[f], f))
    budget = max_conflict_rate * H
    groups = []  # [members, union mask, conflicts, bundleable]
    for f in order:
        placed = False
        if bundleable[f]:
            for g in groups:
                if not g[3]:
                    continue
                added = int(np.count_nonzero(g[1] & nonzero[:, f]))
                if g[2] + added <= budget:
                    g[0].append(f)
                    g[1] |= nonzero[:, f]
                    g[2] += added
                    placed = True
                    break
        if not placed:
            groups.append([[f], nonzero[:, f].copy(), 0, bool(bundleable[f])])
    bundles = []
    for members, _, count, _ in groups:
        members = sorted(members)
        bundles.append(FeatureBundle.of(members, [bin_counts[m] for m in members], count))
    bundles.sort(key=lambda b: b.members[0])
    return bundles


def singleton_bundles(bin_counts):
    return [FeatureBundle.of([f], [n]) for f, n in enumerate(bin_counts)]


def bundle_columns(binned, bundles):
    """Column-wise merge of a binned matrix into one int column per bundle."""
    H = binned.shape[0]
    out = np.zeros((H, len(bundles)), dtype=np.int32)
    for g, bundle in enumerate(bundles):
        col = out[:, g]
        for f, offset in zip(bundle.members, bundle.offsets):
            v = binned[:, f]
            nz = v != 0
            col[nz] = v[nz] + offset
    return out

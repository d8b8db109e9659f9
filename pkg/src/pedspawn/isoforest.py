"""Isolation forest for outlier removal in ground-candidate point sets.

Each tree is grown on a random subsample by recursively picking a random
axis (among axes that still vary inside the node) and a uniform split value
between that axis' min and max.  Points that isolate quickly are anomalous;
scores follow s(x) = 2^(-E[h(x)] / c(psi)) where h is the path length, psi
the per-tree subsample size, and c(n) = 2*H(n-1) - 2*(n-1)/n the average
unsuccessful-search path length of a binary search tree (H = harmonic
number, computed exactly).

Training points are canonicalized by lexicographic sort before subsampling,
so a fitted model depends only on the point multiset and the seed, not on
input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TREES = 100
DEFAULT_SUBSAMPLE = 256


def harmonic(n: int) -> float:
    """Exact n-th harmonic number H(n) = sum_{k<=n} 1/k, H(0) = 0."""
    if n <= 0:
        return 0.0
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def average_path_length(n: int) -> float:
    """c(n): expected isolation depth of a point among n points."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


@dataclass
class _Tree:
    # Flat node arrays; feature < 0 marks a leaf and leaf_size holds its
    # training-point count (> 1 when the height cap or duplicates stop it).
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_size: np.ndarray
    depth: np.ndarray


@dataclass
class IsolationForestModel:
    trees: list = field(default_factory=list)
    subsample_size: int = DEFAULT_SUBSAMPLE
    height_limit: int = 0
    n_features: int = 0


def _build_tree(data: np.ndarray, rng: np.random.Generator, height_limit: int) -> _Tree:
    n = data.shape[0]
    # Two uniforms per internal node (axis pick, split fraction); a tree on n
    # points has at most n - 1 internal nodes.
    draws = rng.random(2 * max(n - 1, 1))
    feature, threshold, left, right, leaf_size, depth = [], [], [], [], [], []
    counter = 0

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_size.append(0)
        depth.append(0)
        return len(feature) - 1

    def grow(idx: np.ndarray, d: int) -> int:
        nonlocal counter
        node = new_node()
        depth[node] = d
        sub = data[idx]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        varying = np.nonzero(hi > lo)[0]
        if idx.size <= 1 or d >= height_limit or varying.size == 0:
            leaf_size[node] = idx.size
            return node
        axis = varying[int(draws[counter] * varying.size)]
        split = lo[axis] + draws[counter + 1] * (hi[axis] - lo[axis])
        counter += 2
        mask = sub[:, axis] < split
        # A uniform draw can coincide with the minimum, leaving one side
        # empty; nudge such splits into a 1 / rest partition.
        if not mask.any():
            mask = sub[:, axis] == lo[axis]
            mask &= np.cumsum(mask) == 1
        elif mask.all():
            mask = ~(sub[:, axis] == hi[axis])
            keep_one = sub[:, axis] == hi[axis]
            keep_one &= np.cumsum(keep_one) == 1
            mask = ~keep_one
        feature[node] = int(axis)
        threshold[node] = float(split)
        left[node] = grow(idx[mask], d + 1)
        right[node] = grow(idx[~mask], d + 1)
        return node

    grow(np.arange(n), 0)
    return _Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        leaf_size=np.asarray(leaf_size, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int32),
    )


def fit_isolation_forest(points: np.ndarray, t: int = DEFAULT_TREES,
                         subsample: int = DEFAULT_SUBSAMPLE,
                         seed: int = 0) -> IsolationForestModel:
    """Fit t isolation trees on subsample-sized draws of ``points`` (N, d)."""
    data = np.asarray(points, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 points to fit, got {n}")
    if subsample < 2:
        raise ValueError(f"subsample must be >= 2, got {subsample}")
    psi = min(subsample, n)
    height_limit = int(np.ceil(np.log2(psi)))
    # Canonical order: model depends on the point multiset, not input order.
    data = data[np.lexsort(data.T[::-1])]
    seeds = np.random.SeedSequence(seed).spawn(t)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        idx = rng.choice(n, size=psi, replace=False) if psi < n else np.arange(n)
        trees.append(_build_tree(data[idx], rng, height_limit))
    return IsolationForestModel(trees=trees, subsample_size=psi,
                                height_limit=height_limit, n_features=data.shape[1])


def path_lengths(model: IsolationForestModel, points: np.ndarray) -> np.ndarray:
    """Mean isolation path length per point, averaged over the forest."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {pts.shape[1]}")
    adjust_table = np.array([average_path_length(s)
                             for s in range(model.subsample_size + 1)])
    total = np.zeros(pts.shape[0])
    for tree in model.trees:
        node = np.zeros(pts.shape[0], dtype=np.int32)
        while True:
            feat = tree.feature[node]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                break
            cur = node[active]
            go_left = pts[active, feat[active]] < tree.threshold[cur]
            node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        total += tree.depth[node] + adjust_table[tree.leaf_size[node]]
    return total / len(model.trees)


def anomaly_scores(model: IsolationForestModel, points: np.ndarray) -> np.ndarray:
    """Batch anomaly scores in (0, 1); higher means more anomalous."""
    mean_h = path_lengths(model, points)
    return np.power(2.0, -mean_h / average_path_length(model.subsample_size))


def anomaly_score(model: IsolationForestModel, point) -> float:
    return float(anomaly_scores(model, np.asarray(point, dtype=np.float64)[None, :])[0])

"""Tree-ensemble survival models.

``fit_rsf`` grows a random survival forest: bootstrap samples, log-rank
splits over ``mtry`` random features, Nelson-Aalen leaves, and predictions
that average leaf cumulative hazards (so curves of different subjects may
cross). ``fit_gbcox`` boosts least-squares regression trees on the gradient
of the Cox partial likelihood; its output is a PH model with a Breslow
baseline.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import StepFunction, SurvivalDataset, SurvivalPredictionMatrix, TimeGrid, validate_dataset
from .exceptions import DegenerateSplit, DimensionMismatch, NoEventsObserved
from .linear import cox_score_gradient, ph_predict
from .nonparam import breslow_baseline, risk_table

__all__ = [
    "SurvivalTree",
    "RSFModel",
    "RegressionTree",
    "GradientBoostedCoxModel",
    "logrank_split_statistic",
    "resolve_mtry",
    "fit_rsf",
    "rsf_predict",
    "fit_gbcox",
    "gbcox_predict",
]

MAX_CANDIDATES = 64
CANDIDATE_CAP_NODE_SIZE = 256


def logrank_split_statistic(left_times, left_events, right_times, right_events) -> float:
    """Absolute standardised two-sample log-rank statistic.

    Returns 0.0 when the variance term vanishes (no informative event times).
    """
    lt = np.asarray(left_times, dtype=float)
    rt = np.asarray(right_times, dtype=float)
    le = np.asarray(left_events, dtype=bool)
    re = np.asarray(right_events, dtype=bool)
    if lt.size == 0 or rt.size == 0:
        raise DegenerateSplit("both groups must be nonempty")
    times = np.concatenate([lt, rt])
    events = np.concatenate([le, re])
    if not events.any():
        raise DegenerateSplit("no events in the combined group")
    uniq, d, n = risk_table(times, events)
    at_l = (lt[None, :] >= uniq[:, None]).sum(axis=1).astype(float)
    d_l = (le[None, :] & (lt[None, :] == uniq[:, None])).sum(axis=1).astype(float)
    at_r = n - at_l
    d_r = d - d_l
    num = np.sum((d_l * at_r - d_r * at_l) / n)
    ok = n > 1
    var = np.sum(np.where(ok, d * at_l * at_r * (n - d) / np.where(ok, n * n * (n - 1), 1.0), 0.0))
    if var <= 0:
        return 0.0
    return float(abs(num) / math.sqrt(var))


def resolve_mtry(mtry, p: int) -> int:
    """Number of features tried per split; accepts ints, ``"sqrt"`` or ``"third"``."""
    if mtry is None or mtry == "sqrt":
        m = math.ceil(math.sqrt(p))
    elif mtry == "third":
        m = max(1, round(p / 3))
    else:
        m = int(mtry)
    if not 1 <= m <= p:
        raise ValueError(f"mtry={mtry!r} resolves to {m}, outside [1, {p}]")
    return m


@dataclass(frozen=True, eq=False)
class SurvivalTree:
    """Binary tree with Nelson-Aalen cumulative hazards in the leaves.

    Node arrays: ``feature`` (-1 for leaves), ``threshold`` (go left when
    ``x[feature] <= threshold``), ``left``/``right`` child ids and ``leaf_id``.
    Leaf ``l`` stores its hazard in CSR form: ``event_times[leaf_k[s]]`` and
    ``leaf_h[s]`` for ``s`` in ``leaf_ptr[l]:leaf_ptr[l+1]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_id: np.ndarray
    leaf_ptr: np.ndarray
    leaf_k: np.ndarray
    leaf_h: np.ndarray
    event_times: np.ndarray
    min_leaf_size: int = 1
    max_depth: int = -1

    @property
    def n_leaves(self) -> int:
        return self.leaf_ptr.size - 1

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        nodes = _kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)
        return self.leaf_id[nodes]

    def leaf_function(self, leaf: int) -> StepFunction:
        s = slice(self.leaf_ptr[leaf], self.leaf_ptr[leaf + 1])
        return StepFunction(self.event_times[self.leaf_k[s]], self.leaf_h[s], 0.0)

    def leaf_cumhaz_on_grid(self, grid: TimeGrid) -> np.ndarray:
        """Matrix of leaf cumulative hazards evaluated on ``grid``."""
        g = grid.knots
        n_entries = self.leaf_k.size
        owner = np.repeat(np.arange(self.n_leaves), np.diff(self.leaf_ptr))
        inc = np.diff(self.leaf_h, prepend=0.0)
        starts = self.leaf_ptr[:-1][self.leaf_ptr[:-1] < self.leaf_ptr[1:]]
        inc[starts] = self.leaf_h[starts]
        pos = np.searchsorted(g, self.event_times[self.leaf_k], side="left") if n_entries else np.zeros(0, int)
        m = np.zeros((self.n_leaves, g.size + 1))
        np.add.at(m, (owner, pos), inc)
        return np.cumsum(m, axis=1)[:, : g.size]


@dataclass(frozen=True, eq=False)
class RSFModel:
    trees: list
    n_trees: int
    mtry: int
    min_leaf_size: int
    max_depth: int
    seed: int
    n_features: int


def _grow_one(X, kt, ev, event_times, b, seed, mtry, min_leaf, max_depth):
    rng = np.random.default_rng([seed, b])
    n = X.shape[0]
    samples = rng.integers(0, n, n)
    tree_seed = int(rng.integers(0, 2**63 - 1))
    arrays = _kernels.grow_logrank_tree(
        X, kt, ev, samples, mtry, min_leaf, max_depth, MAX_CANDIDATES, CANDIDATE_CAP_NODE_SIZE, tree_seed
    )
    return SurvivalTree(*arrays, event_times=event_times, min_leaf_size=min_leaf, max_depth=max_depth)


def bootstrap_samples(n: int, seed: int, b: int) -> np.ndarray:
    """Bootstrap indices used for tree ``b`` of a forest seeded with ``seed``."""
    return np.random.default_rng([seed, b]).integers(0, n, n)


def fit_rsf(d: SurvivalDataset, n_trees: int = 200, mtry="sqrt", min_leaf_size: int = 15,
            max_depth=None, seed: int = 0, n_jobs: int = 1) -> RSFModel:
    """Fit a random survival forest.

    Each tree draws its bootstrap sample and split randomness from a stream
    keyed by ``(seed, tree index)``, so forests are reproducible regardless of
    ``n_jobs``.
    """
    validate_dataset(d)
    if not d.events.any():
        raise NoEventsObserved("cannot grow survival trees without events")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    m = resolve_mtry(mtry, d.p)
    depth = -1 if max_depth is None else int(max_depth)
    X = np.ascontiguousarray(d.features)
    event_times = np.unique(d.times[d.events])
    kt = np.searchsorted(event_times, d.times, side="right").astype(np.int64)
    ev = d.events.astype(np.uint8)
    args = (X, kt, ev, event_times)
    if n_jobs == 1:
        trees = [_grow_one(*args, b, seed, m, min_leaf_size, depth) for b in range(n_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = list(pool.map(lambda b: _grow_one(*args, b, seed, m, min_leaf_size, depth), range(n_trees)))
    return RSFModel(trees, n_trees, m, min_leaf_size, depth, seed, d.p)


def rsf_predict(model: RSFModel, X, grid: TimeGrid) -> SurvivalPredictionMatrix:
    """Survival curves ``exp(-mean_b H_b(t | x))`` from the forest."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features")
    h = np.zeros((X.shape[0], len(grid)))
    for tree in model.trees:
        h += tree.leaf_cumhaz_on_grid(grid)[tree.apply(X)]
    h /= len(model.trees)
    return SurvivalPredictionMatrix.from_cumhaz(grid, h)


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X) -> np.ndarray:
        return self.value[_kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)]

    def shifted(self, c: float) -> "RegressionTree":
        leaf = self.feature < 0
        return RegressionTree(self.feature, self.threshold, self.left, self.right,
                              np.where(leaf, self.value + c, self.value))


def fit_ls_tree(X, order, target, active, max_depth: int, min_leaf: int = 1) -> RegressionTree:
    """Least-squares regression tree grown level by level.

    ``order`` holds the column-wise argsort of ``X``; only rows flagged in
    ``active`` drive the splits and leaf means.
    """
    n = X.shape[0]
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    node_id = np.where(active, 0, -1).astype(np.int64)
    level = [0]
    for _ in range(max_depth):
        local = np.full(len(feature), -1, dtype=np.int64)
        local[level] = np.arange(len(level))
        node_of = np.where(node_id >= 0, local[np.maximum(node_id, 0)], -1)
        bf, bt, _ = _kernels.best_ls_splits(X, order, node_of, target, len(level), min_leaf)
        nxt = []
        for k, node in enumerate(level):
            if bf[k] < 0:
                continue
            ln, rn = len(feature), len(feature) + 1
            feature += [-1, -1]
            threshold += [0.0, 0.0]
            left += [-1, -1]
            right += [-1, -1]
            value += [0.0, 0.0]
            feature[node], threshold[node], left[node], right[node] = int(bf[k]), float(bt[k]), ln, rn
            members = node_id == node
            goes_left = X[:, bf[k]] <= bt[k]
            node_id[members & goes_left] = ln
            node_id[members & ~goes_left] = rn
            nxt += [ln, rn]
        if not nxt:
            break
        level = nxt
    act = node_id >= 0
    sums = np.bincount(node_id[act], weights=target[act], minlength=len(feature))
    cnts = np.bincount(node_id[act], minlength=len(feature))
    value = np.where(cnts > 0, sums / np.maximum(cnts, 1), 0.0)
    return RegressionTree(
        np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64), value,
    )


@dataclass(frozen=True, eq=False)
class GradientBoostedCoxModel:
    stages: list
    learning_rate: float
    baseline: StepFunction
    subsample: float
    n_features: int
    train_loglik: list = field(default_factory=list)

    def risk(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features")
        f = np.zeros(X.shape[0])
        for tree in self.stages:
            f += self.learning_rate * tree.predict(X)
        return f


def fit_gbcox(d: SurvivalDataset, n_stages: int = 200, learning_rate: float = 0.1, max_depth: int = 3,
              subsample: float = 1.0, seed: int = 0, min_leaf_size: int = 1) -> GradientBoostedCoxModel:
    """Gradient boosting with the Cox partial-likelihood loss.

    Each stage fits a least-squares tree to the per-subject gradient of the
    partial log-likelihood and adds ``learning_rate`` times its output to the
    scores. ``train_loglik`` records the training partial log-likelihood
    before each stage and after the last one.
    """
    validate_dataset(d)
    if not d.events.any():
        raise NoEventsObserved("cannot boost without events")
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must lie in (0, 1]")
    if not 0 < subsample <= 1:
        raise ValueError("subsample must lie in (0, 1]")
    X = np.ascontiguousarray(d.features)
    n = d.n
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"))
    f = np.zeros(n)
    stages, trace = [], []
    all_rows = np.ones(n, dtype=bool)
    for m in range(n_stages):
        ll, grad = cox_score_gradient(d.times, d.events, f)
        trace.append(ll)
        if subsample < 1.0:
            rng = np.random.default_rng([seed, m])
            active = np.zeros(n, dtype=bool)
            active[rng.choice(n, max(1, round(subsample * n)), replace=False)] = True
        else:
            active = all_rows
        tree = fit_ls_tree(X, order, grad, active, max_depth, min_leaf_size)
        stages.append(tree)
        f = f + learning_rate * tree.predict(X)
    trace.append(cox_score_gradient(d.times, d.events, f)[0])
    return GradientBoostedCoxModel(stages, learning_rate, breslow_baseline(d, f), subsample, d.p, trace)


def gbcox_predict(model: GradientBoostedCoxModel, X, grid: TimeGrid):
    risk = model.risk(X)
    return ph_predict(model.baseline, risk, grid), risk

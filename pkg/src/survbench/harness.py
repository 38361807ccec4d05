"""Nested cross-validation, grid search, benchmark sweeps and the sample-size
ablation.

Every outer fold runs an independent grid search on its training portion
(``inner_folds`` folds repeated ``inner_repeats`` times with reshuffling),
picks the candidate with the highest mean Antolini C-index, refits it on the
whole training portion and scores it on the held-out fold. Feature
standardisation statistics always come from the portion being fitted.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .core import SurvivalDataset, TimeGrid, validate_dataset
from .ensemble import fit_gbcox, fit_rsf, gbcox_predict, resolve_mtry, rsf_predict
from .exceptions import AllCandidatesFailed, EmptySweep, TooFewSubjects, ZeroVariance
from .linear import ElasticNetConfig, cox_predict, fit_cox, fit_coxnet
from .metrics import DEFAULT_QUANTILES, MetricReport, antolini_c, evaluate, score_correlation
from .synthetic import GeneratorSpec, generate, subsample_indices

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "DEFAULT_GRIDS",
    "ModelSpec",
    "NestedCVPlan",
    "FittedModel",
    "FoldResult",
    "BenchmarkReport",
    "SelectionResult",
    "AblationRow",
    "Standardizer",
    "fit_model",
    "split_folds",
    "inner_select",
    "evaluate_fold",
    "nested_cv",
    "run_benchmark",
    "run_ablation",
    "METRIC_FIELDS",
]

METHODS = ("coxph", "coxnet", "rsf", "gbcox")

DEFAULT_GRIDS = {
    "coxph": {"ridge_eps": [1e-6]},
    "coxnet": {
        "l1_ratio": [0.1, 0.5, 0.9, 1.0],
        "lambda": [float(f"{v:.3g}") for v in np.geomspace(1e-4, 0.3, 8)],
    },
    "rsf": {"n_trees": [200], "mtry": ["sqrt", "third"], "min_leaf_size": [10, 25]},
    "gbcox": {"n_stages": [100, 300], "learning_rate": [0.05, 0.1], "max_depth": [2, 3]},
}

_PARAM_CHECKS = {
    "coxph": {"ridge_eps": lambda v: v >= 0},
    "coxnet": {"lambda": lambda v: v >= 0, "l1_ratio": lambda v: 0 <= v <= 1},
    "rsf": {
        "n_trees": lambda v: int(v) == v and v >= 1,
        "mtry": lambda v: v in ("sqrt", "third") or (int(v) == v and v >= 1),
        "min_leaf_size": lambda v: int(v) == v and v >= 1,
        "max_depth": lambda v: v is None or (int(v) == v and v >= 0),
    },
    "gbcox": {
        "n_stages": lambda v: int(v) == v and v >= 0,
        "learning_rate": lambda v: 0 < v <= 1,
        "max_depth": lambda v: int(v) == v and v >= 1,
        "subsample": lambda v: 0 < v <= 1,
        "min_leaf_size": lambda v: int(v) == v and v >= 1,
    },
}

# one row per (dataset, method, fold, metric) in the long-format report
METRIC_FIELDS = (
    "antolini",
    "harrell_avg",
    "harrell_q25",
    "harrell_q50",
    "harrell_q75",
    "brier_avg",
    "auroc_avg",
)


def metric_values(m: MetricReport) -> dict:
    q = list(m.harrell_per_quartile) + [float("nan")] * (3 - len(m.harrell_per_quartile))
    return {
        "antolini": m.antolini,
        "harrell_avg": m.harrell_quartile_avg,
        "harrell_q25": q[0],
        "harrell_q50": q[1],
        "harrell_q75": q[2],
        "brier_avg": m.brier_avg,
        "auroc_avg": m.auroc_avg,
    }


@dataclass(frozen=True)
class ModelSpec:
    method: str
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        grid = dict(self.grid) if self.grid else dict(DEFAULT_GRIDS[self.method])
        checks = _PARAM_CHECKS[self.method]
        for name, values in grid.items():
            if name not in checks:
                raise ValueError(f"{self.method} has no hyperparameter {name!r}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ValueError(f"grid for {name!r} must be a nonempty list")
            for v in values:
                if not checks[name](v):
                    raise ValueError(f"{self.method}.{name}={v!r} is out of range")
        object.__setattr__(self, "grid", grid)

    def candidates(self) -> list[dict]:
        names = list(self.grid)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.grid[k] for k in names))]


@dataclass(frozen=True)
class NestedCVPlan:
    outer_folds: int = 3
    inner_folds: int = 5
    inner_repeats: int = 2
    shuffle_seed: int = 0
    grid_knots: int = 100

    def __post_init__(self):
        if self.outer_folds < 2 or self.inner_folds < 2 or self.inner_repeats < 1:
            raise ValueError("need outer_folds >= 2, inner_folds >= 2 and inner_repeats >= 1")


def _seed(*coords) -> int:
    return int(np.random.SeedSequence([int(c) for c in coords]).generate_state(1)[0])


class Standardizer:
    """Column means and scales learned on one portion, applied to any other."""

    def __init__(self, train: SurvivalDataset):
        self.mean = train.features.mean(axis=0)
        sd = train.features.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)

    def __call__(self, d: SurvivalDataset) -> SurvivalDataset:
        return d.with_features((d.features - self.mean) / self.scale)


@dataclass(frozen=True, eq=False)
class FittedModel:
    """Uniform wrapper: every model predicts curves; PH models also risks."""

    method: str
    model: object

    def predict(self, X, grid: TimeGrid):
        if self.method in ("coxph", "coxnet"):
            return cox_predict(self.model, X, grid)
        if self.method == "gbcox":
            return gbcox_predict(self.model, X, grid)
        return rsf_predict(self.model, X, grid), None


def fit_model(method: str, params: dict, train: SurvivalDataset, seed: int = 0) -> FittedModel:
    p = dict(params)
    if method == "coxph":
        model = fit_cox(train, ridge_eps=p.get("ridge_eps", 1e-6))
    elif method == "coxnet":
        model = fit_coxnet(train, ElasticNetConfig(p["lambda"], p.get("l1_ratio", 1.0)))
    elif method == "rsf":
        model = fit_rsf(
            train,
            n_trees=int(p.get("n_trees", 200)),
            mtry=p.get("mtry", "sqrt"),
            min_leaf_size=int(p.get("min_leaf_size", 15)),
            max_depth=p.get("max_depth"),
            seed=seed,
        )
    elif method == "gbcox":
        model = fit_gbcox(
            train,
            n_stages=int(p.get("n_stages", 200)),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=int(p.get("max_depth", 3)),
            subsample=p.get("subsample", 1.0),
            seed=seed,
            min_leaf_size=int(p.get("min_leaf_size", 1)),
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return FittedModel(method, model)


def split_folds(d, k: int, seed: int, stratify_on_event: bool = True) -> list[np.ndarray]:
    """Partition subject indices into ``k`` disjoint folds.

    With stratification, events and censored subjects are shuffled
    separately and dealt round-robin (censored subjects continue where the
    events stopped), so every fold's event count is within one of the others.
    """
    events = d.events if isinstance(d, SurvivalDataset) else np.ones(int(d), dtype=bool)
    n = events.size
    if k > n or k < 1:
        raise TooFewSubjects(f"cannot split {n} subjects into {k} folds")
    rng = np.random.default_rng(seed)
    if stratify_on_event:
        seq = np.concatenate([rng.permutation(np.flatnonzero(events)), rng.permutation(np.flatnonzero(~events))])
    else:
        seq = rng.permutation(n)
    labels = np.arange(n) % k
    return [np.sort(seq[labels == f]) for f in range(k)]


def _inner_splits(train: SurvivalDataset, plan: NestedCVPlan, seed: int):
    splits = []
    for r in range(plan.inner_repeats):
        folds = split_folds(train, plan.inner_folds, _seed(seed, r))
        for f, val in enumerate(folds):
            tr = np.sort(np.concatenate([folds[g] for g in range(plan.inner_folds) if g != f]))
            splits.append((tr, val))
    return splits


def _score_candidate(train, tr_idx, val_idx, method, params, plan, seed):
    tr, val = train.subset(tr_idx), train.subset(val_idx)
    scale = Standardizer(tr)
    tr, val = scale(tr), scale(val)
    try:
        model = fit_model(method, params, tr, seed)
        pred, _ = model.predict(val.features, TimeGrid.from_event_quantiles(tr, plan.grid_knots))
        return antolini_c(pred, val)
    except Exception as exc:  # recorded as a failed fit, never fatal
        log.warning("inner fit failed for %s %s: %s", method, params, exc)
        return float("nan")


def _sort_key(params: dict):
    return tuple((0, float(v), "") if isinstance(v, (int, float)) and v is not None else (1, 0.0, str(v))
                 for _, v in sorted(params.items()))


@dataclass
class SelectionResult:
    best_params: dict
    candidates: list
    scores: list
    n_fits: int


def inner_select(train: SurvivalDataset, spec: ModelSpec, plan: NestedCVPlan, seed: int = 0,
                 n_jobs: int = 1) -> SelectionResult:
    """Grid search maximising the mean Antolini C-index over the inner
    validation sets. Ties go to the lexicographically smallest parameter
    tuple, then to grid order."""
    candidates = spec.candidates()
    splits = _inner_splits(train, plan, seed)
    tasks = [(c, s) for c in range(len(candidates)) for s in range(len(splits))]
    run = delayed(_score_candidate)
    scores = Parallel(n_jobs=n_jobs)(
        run(train, splits[s][0], splits[s][1], spec.method, candidates[c], plan, _seed(seed, 7, s))
        for c, s in tasks
    )
    table = np.array(scores, dtype=float).reshape(len(candidates), len(splits))
    with np.errstate(all="ignore"):
        means = [float(np.nanmean(row)) if np.any(~np.isnan(row)) else float("nan") for row in table]
    ok = [i for i, m in enumerate(means) if not math.isnan(m)]
    if not ok:
        raise AllCandidatesFailed(f"every {spec.method} candidate failed")
    top = max(means[i] for i in ok)
    winners = sorted((i for i in ok if means[i] == top), key=lambda i: (_sort_key(candidates[i]), i))
    return SelectionResult(dict(candidates[winners[0]]), candidates, means, len(tasks))


@dataclass
class FoldResult:
    dataset: str
    method: str
    fold: int
    metrics: MetricReport | None
    params: dict | None
    fit_seconds: float = 0.0
    predict_seconds: float = 0.0
    select_seconds: float = 0.0
    n_fits: int = 0
    n_train: int = 0
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "fold": self.fold,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "params": self.params,
            "fit_seconds": self.fit_seconds,
            "predict_seconds": self.predict_seconds,
            "select_seconds": self.select_seconds,
            "n_fits": self.n_fits,
            "n_train": self.n_train,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FoldResult":
        data = dict(data)
        if data.get("metrics") is not None:
            data["metrics"] = MetricReport.from_dict(data["metrics"])
        return cls(**data)


def evaluate_fold(train: SurvivalDataset, test: SurvivalDataset, spec: ModelSpec, plan: NestedCVPlan,
                  seed: int = 0, qs=DEFAULT_QUANTILES, n_jobs: int = 1, dataset: str = "", fold: int = 0,
                  params: dict | None = None) -> FoldResult:
    """Select (unless ``params`` is given), refit on ``train`` and score on ``test``."""
    scale = Standardizer(train)
    train_s, test_s = scale(train), scale(test)
    t0 = time.perf_counter()
    n_fits = 0
    if params is None:
        sel = inner_select(train_s, spec, plan, seed, n_jobs)
        params, n_fits = sel.best_params, sel.n_fits
    t1 = time.perf_counter()
    model = fit_model(spec.method, params, train_s, _seed(seed, 11))
    t2 = time.perf_counter()
    pred, _ = model.predict(test_s.features, TimeGrid.from_event_quantiles(train_s, plan.grid_knots))
    t3 = time.perf_counter()
    metrics = evaluate(pred, test_s, qs)
    return FoldResult(dataset, spec.method, fold, metrics, params, t2 - t1, t3 - t2, t1 - t0,
                      n_fits + 1, train.n)


def nested_cv(d: SurvivalDataset, spec: ModelSpec, plan: NestedCVPlan, qs=DEFAULT_QUANTILES,
              dataset: str = "", n_jobs: int = 1) -> list[FoldResult]:
    """Outer-fold results for one (dataset, method); failures are recorded
    in ``FoldResult.error`` instead of raised."""
    validate_dataset(d)
    rows = []
    for f, test_idx in enumerate(split_folds(d, plan.outer_folds, plan.shuffle_seed)):
        train_idx = np.setdiff1d(np.arange(d.n), test_idx)
        try:
            row = evaluate_fold(d.subset(train_idx), d.subset(test_idx), spec, plan,
                                _seed(plan.shuffle_seed, f, METHODS.index(spec.method)), qs, n_jobs, dataset, f)
        except Exception as exc:
            log.error("fold %d of %s/%s failed: %s", f, dataset, spec.method, exc)
            row = FoldResult(dataset, spec.method, f, None, None, n_train=train_idx.size, error=repr(exc))
        rows.append(row)
    return rows


@dataclass
class BenchmarkReport:
    rows: list

    @property
    def failed(self) -> list:
        return [r for r in self.rows if r.error is not None]

    def cells(self) -> list[tuple[str, str]]:
        seen = []
        for r in self.rows:
            if (r.dataset, r.method) not in seen:
                seen.append((r.dataset, r.method))
        return seen

    def aggregates(self) -> list[dict]:
        """Mean and min-max range per (dataset, method, metric) over folds."""
        out = []
        for ds, method in self.cells():
            rows = [r for r in self.rows if r.dataset == ds and r.method == method and r.metrics is not None]
            for name in METRIC_FIELDS:
                vals = np.array([metric_values(r.metrics)[name] for r in rows], dtype=float)
                vals = vals[~np.isnan(vals)]
                if vals.size == 0:
                    out.append({"dataset": ds, "method": method, "metric": name,
                                "mean": float("nan"), "min": float("nan"), "max": float("nan"), "n": 0})
                    continue
                out.append({"dataset": ds, "method": method, "metric": name, "mean": float(vals.mean()),
                            "min": float(vals.min()), "max": float(vals.max()), "n": int(vals.size)})
        return out

    def cell_mean(self, dataset: str, method: str, metric: str) -> float:
        if metric == "brier_rescaled":
            vals = [r.metrics.brier_rescaled for r in self.rows
                    if r.dataset == dataset and r.method == method and r.metrics is not None]
            return float(np.mean(vals)) if vals else float("nan")
        for a in self.aggregates():
            if (a["dataset"], a["method"], a["metric"]) == (dataset, method, metric):
                return a["mean"]
        raise KeyError((dataset, method, metric))

    def correlations(self) -> dict:
        """Pearson correlations between per-cell mean scores."""
        cells = [c for c in self.cells() if not math.isnan(self.cell_mean(*c, "antolini"))]
        out = {}
        if len(cells) < 2:
            return out
        ant = [self.cell_mean(*c, "antolini") for c in cells]
        for other in ("brier_rescaled", "auroc_avg", "harrell_avg"):
            try:
                out[f"antolini_vs_{other}"] = score_correlation(ant, [self.cell_mean(*c, other) for c in cells])
            except (ZeroVariance, ValueError):
                out[f"antolini_vs_{other}"] = float("nan")
        return out

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkReport":
        return cls([FoldResult.from_dict(r) for r in data["rows"]])


def run_benchmark(datasets, specs, plan: NestedCVPlan, qs=DEFAULT_QUANTILES, n_jobs: int = 1) -> BenchmarkReport:
    """Nested CV for every (dataset, method) pair.

    ``datasets`` is a list of ``(name, SurvivalDataset)`` pairs.
    """
    datasets, specs = list(datasets), list(specs)
    if not datasets or not specs:
        raise EmptySweep("benchmark needs at least one dataset and one method")
    rows = []
    for name, d in datasets:
        for spec in specs:
            log.info("benchmark %s / %s", name, spec.method)
            rows.extend(nested_cv(d, spec, plan, qs, name, n_jobs))
    return BenchmarkReport(rows)


@dataclass
class AblationRow:
    dataset: str
    method: str
    size: int
    antolini: float
    harrell_avg: float
    metrics: MetricReport | None
    params: dict | None
    seconds: float
    error: str | None = None

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["metrics"] = None if self.metrics is None else self.metrics.to_dict()
        return d


def run_ablation(pool_spec: GeneratorSpec, sizes, specs, plan: NestedCVPlan, holdout_size: int = 2000,
                 censored_fraction: float = 0.30, qs=DEFAULT_QUANTILES, n_jobs: int = 1,
                 seed: int = 0) -> list[AblationRow]:
    """Antolini C-index versus training size on subsamples of one pool.

    A holdout of ``holdout_size`` subjects is drawn once (with the same
    censored fraction); training subsamples come from the rest of the pool.
    """
    pool, _ = generate(pool_spec)
    hold_idx = subsample_indices(pool.events, holdout_size, _seed(seed, 1), censored_fraction)
    rest = np.setdiff1d(np.arange(pool.n), hold_idx)
    holdout = pool.subset(hold_idx)
    rows = []
    for size in sizes:
        local = subsample_indices(pool.events[rest], int(size), _seed(seed, 2, int(size)), censored_fraction)
        train = pool.subset(rest[local])
        for spec in specs:
            t0 = time.perf_counter()
            try:
                res = evaluate_fold(train, holdout, spec, plan, _seed(seed, 3, int(size)), qs, n_jobs,
                                    pool_spec.kind, 0)
                m = res.metrics
                rows.append(AblationRow(pool_spec.kind, spec.method, int(size), m.antolini,
                                        m.harrell_quartile_avg, m, res.params, time.perf_counter() - t0))
            except Exception as exc:
                log.error("ablation %s n=%d failed: %s", spec.method, size, exc)
                rows.append(AblationRow(pool_spec.kind, spec.method, int(size), float("nan"), float("nan"),
                                        None, None, time.perf_counter() - t0, repr(exc)))
    return rows

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from survbench.core import SurvivalDataset
from survbench.exceptions import AllCandidatesFailed, EmptySweep, TooFewSubjects
from survbench.harness import (
    DEFAULT_GRIDS,
    ModelSpec,
    NestedCVPlan,
    Standardizer,
    evaluate_fold,
    inner_select,
    nested_cv,
    run_benchmark,
    split_folds,
)
from survbench.linear import coxnet_lambda_max
from survbench.synthetic import GeneratorSpec, generate


@pytest.fixture(scope="module")
def linph600():
    return generate(GeneratorSpec("linph", 600, 0))[0]


@pytest.fixture(scope="module")
def linph900():
    return generate(GeneratorSpec("linph", 900, 0))[0]


def ds_events(events):
    n = len(events)
    return SurvivalDataset(np.zeros((n, 1)), np.arange(1.0, n + 1), np.asarray(events, bool))


class TestSplitFolds:
    def test_partition(self):
        folds = split_folds(9, 3, 0)
        assert [f.size for f in folds] == [3, 3, 3]
        assert sorted(np.concatenate(folds).tolist()) == list(range(9))

    def test_exact_stratification(self):
        d = ds_events([1] * 6 + [0] * 3)
        for f in split_folds(d, 3, 5):
            assert d.events[f].sum() == 2 and (~d.events[f]).sum() == 1

    def test_same_seed_same_partition(self):
        d = ds_events([1, 0] * 10)
        a, b = split_folds(d, 4, 3), split_folds(d, 4, 3)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_few(self):
        with pytest.raises(TooFewSubjects):
            split_folds(2, 3, 0)

    @given(st.integers(3, 200), st.integers(2, 10), st.integers(0, 2**31), st.floats(0.05, 0.95))
    def test_event_counts_within_one(self, n, k, seed, frac):
        if k > n:
            return
        events = np.random.default_rng(seed).random(n) < frac
        folds = split_folds(ds_events(events), k, seed)
        counts = [events[f].sum() for f in folds]
        sizes = [f.size for f in folds]
        assert max(counts) - min(counts) <= 1 and max(sizes) - min(sizes) <= 1
        assert sorted(np.concatenate(folds).tolist()) == list(range(n))


class TestModelSpec:
    def test_defaults(self):
        assert ModelSpec("rsf").grid == DEFAULT_GRIDS["rsf"]
        assert len(ModelSpec("coxnet").candidates()) == 32
        assert len(ModelSpec("gbcox").candidates()) == 8

    @pytest.mark.parametrize("method,grid", [
        ("coxnet", {"l1_ratio": [1.5]}), ("rsf", {"n_trees": [0]}), ("gbcox", {"learning_rate": [0.0]}),
        ("coxph", {"alpha": [1]}), ("coxph", {"ridge_eps": []}),
    ])
    def test_invalid(self, method, grid):
        with pytest.raises(ValueError):
            ModelSpec(method, grid)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            ModelSpec("deepsurv")


class TestInnerSelect:
    def test_single_point_ten_fits(self, linph600):
        sel = inner_select(linph600, ModelSpec("coxph", {"ridge_eps": [1e-6]}), NestedCVPlan())
        assert sel.n_fits == 10 and sel.best_params == {"ridge_eps": 1e-6}

    def test_degenerate_candidate_loses(self, linph600):
        lmax = coxnet_lambda_max(linph600, 1.0)
        spec = ModelSpec("coxnet", {"lambda": [2 * lmax, 1e-3], "l1_ratio": [1.0]})
        sel = inner_select(linph600, spec, NestedCVPlan())
        assert sel.best_params["lambda"] == 1e-3
        assert sel.scores[0] == 0.5

    def test_tie_goes_to_first(self, linph600):
        spec = ModelSpec("coxph", {"ridge_eps": [1e-6, 1e-6]})
        sel = inner_select(linph600, spec, NestedCVPlan())
        assert sel.scores[0] == sel.scores[1]
        assert sel.best_params == {"ridge_eps": 1e-6}

    def test_lexicographic_tie_break(self, linph600):
        # identical constant predictions for both penalties above lambda_max
        lmax = coxnet_lambda_max(linph600, 1.0)
        spec = ModelSpec("coxnet", {"lambda": [4 * lmax, 2 * lmax], "l1_ratio": [1.0]})
        sel = inner_select(linph600, spec, NestedCVPlan())
        assert sel.best_params["lambda"] == 2 * lmax

    def test_all_fail(self, linph600):
        with pytest.raises(AllCandidatesFailed):
            inner_select(linph600.subset(np.arange(100)), ModelSpec("rsf", {"mtry": [50], "n_trees": [1]}),
                         NestedCVPlan())


class TestNestedCV:
    def test_coxph_linph_regression(self, linph900):
        rows = nested_cv(linph900, ModelSpec("coxph", {"ridge_eps": [1e-6, 1e-3]}), NestedCVPlan(), dataset="l")
        assert len(rows) == 3 and all(r.error is None for r in rows)
        got = [r.metrics.antolini for r in rows]
        # seeded end-to-end values
        assert got == pytest.approx([0.8583, 0.8755, 0.8913], abs=5e-5)
        assert sum(r.n_fits for r in rows) == 3 * (10 * 2 + 1)
        assert all(r.fit_seconds > 0 and r.predict_seconds > 0 for r in rows)

    def test_outer_folds_partition(self, linph900):
        folds = split_folds(linph900, 3, NestedCVPlan().shuffle_seed)
        allidx = np.concatenate(folds)
        assert allidx.size == linph900.n and np.unique(allidx).size == linph900.n

    def test_failures_are_recorded(self, linph600):
        rows = nested_cv(linph600, ModelSpec("rsf", {"mtry": [50], "n_trees": [1]}), NestedCVPlan())
        assert len(rows) == 3 and all(r.error and r.metrics is None for r in rows)

    def test_deterministic(self, linph600):
        spec = ModelSpec("gbcox", {"n_stages": [10], "subsample": [0.5]})
        a = [r.to_dict() for r in nested_cv(linph600, spec, NestedCVPlan(shuffle_seed=3))]
        b = [r.to_dict() for r in nested_cv(linph600, spec, NestedCVPlan(shuffle_seed=3))]
        for x, y in zip(a, b):
            for key in ("fit_seconds", "predict_seconds", "select_seconds"):
                x.pop(key), y.pop(key)
        assert a == b


class TestLeakage:
    def test_standardizer_uses_training_statistics(self, linph600):
        train, test = linph600.subset(np.arange(400)), linph600.subset(np.arange(400, 600))
        z = Standardizer(train)(test)
        mu, sd = train.features.mean(axis=0), train.features.std(axis=0)
        assert np.allclose(z.features, (test.features - mu) / sd)

    def test_canary_feature_does_not_help(self, linph600):
        rng = np.random.default_rng(0)
        train, test = linph600.subset(np.arange(400)), linph600.subset(np.arange(400, 600))
        # canary: noise on the training side, the outcome itself on the test side
        noise = rng.standard_normal((400, 1))
        oracle = -np.log(test.times)[:, None]
        oracle = (oracle - oracle.mean()) / oracle.std()
        with_c = (train.with_features(np.hstack([train.features, noise])),
                  test.with_features(np.hstack([test.features, oracle])))
        spec, plan = ModelSpec("coxph"), NestedCVPlan()
        base = evaluate_fold(train, test, spec, plan).metrics.antolini
        canary = evaluate_fold(*with_c, spec, plan).metrics.antolini
        assert canary <= base + 0.01


class TestBenchmark:
    def test_empty(self, linph600):
        with pytest.raises(EmptySweep):
            run_benchmark([("l", linph600)], [], NestedCVPlan())
        with pytest.raises(EmptySweep):
            run_benchmark([], [ModelSpec("coxph")], NestedCVPlan())

    def test_rows_aggregates_and_correlations(self, linph600):
        nonph = generate(GeneratorSpec("nonph", 600, 0))[0]
        specs = [ModelSpec("coxph"), ModelSpec("gbcox", {"n_stages": [30]})]
        rep = run_benchmark([("linph", linph600), ("nonph", nonph)], specs, NestedCVPlan())
        assert len(rep.rows) == 2 * 2 * 3
        for ds, m in rep.cells():
            assert sum(1 for r in rep.rows if (r.dataset, r.method) == (ds, m)) == 3
        aggs = rep.aggregates()
        assert len(aggs) == 4 * 7
        for a in aggs:
            assert a["min"] <= a["mean"] <= a["max"]
        assert set(rep.correlations()) == {"antolini_vs_brier_rescaled", "antolini_vs_auroc_avg",
                                           "antolini_vs_harrell_avg"}

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from survbench.core import (
    StepFunction,
    SurvivalDataset,
    SurvivalPredictionMatrix,
    TimeGrid,
    event_time_quantiles,
    sort_order,
    validate_dataset,
)
from survbench.exceptions import (
    EmptyDataset,
    LengthMismatch,
    NoEventsObserved,
    NonFiniteFeature,
    NonPositiveTime,
)
from survbench.synthetic import KINDS, GeneratorSpec, generate


def ds(times, events, X=None):
    n = len(times)
    X = np.zeros((n, 1)) if X is None else X
    return SurvivalDataset(np.asarray(X, float), np.asarray(times, float), np.asarray(events, bool))


def test_valid_triple_passes():
    validate_dataset(ds([1, 2, 3], [1, 0, 1]))


def test_zero_time_names_index():
    with pytest.raises(NonPositiveTime) as exc:
        validate_dataset(ds([1, 0.0, 3], [1, 1, 1]))
    assert exc.value.index == 1


def test_nan_feature_names_row_and_col():
    X = np.zeros((3, 2))
    X[2, 1] = np.nan
    with pytest.raises(NonFiniteFeature) as exc:
        validate_dataset(ds([1, 2, 3], [1, 1, 1], X))
    assert (exc.value.row, exc.value.col) == (2, 1)


def test_length_mismatch_and_empty():
    with pytest.raises(LengthMismatch):
        validate_dataset(SurvivalDataset(np.zeros((3, 1)), np.ones(2), np.ones(3, bool)))
    with pytest.raises(EmptyDataset):
        validate_dataset(SurvivalDataset(np.zeros((0, 1)), np.ones(0), np.ones(0, bool)))


def test_dataset_arrays_are_read_only():
    d = ds([1, 2], [1, 0])
    with pytest.raises(ValueError):
        d.times[0] = 5.0


def test_sort_order_ties_events_first_then_index():
    d = ds([2, 1, 2, 2], [0, 1, 1, 0])
    assert sort_order(d).tolist() == [1, 2, 0, 3]


def test_quantile_midpoint_convention():
    assert event_time_quantiles(ds([1, 2, 3, 4], [1, 1, 1, 1]), [0.5]).tolist() == [2.5]


def test_quantile_single_event():
    d = ds([5, 6, 7], [1, 0, 0])
    assert event_time_quantiles(d, [0.25, 0.5, 0.75]).tolist() == [5, 5, 5]


def test_quantile_no_events():
    with pytest.raises(NoEventsObserved):
        event_time_quantiles(ds([1, 2], [0, 0]), [0.5])


@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=30), st.randoms())
def test_quantiles_permutation_invariant(times, rnd):
    events = [True] * len(times)
    perm = list(range(len(times)))
    rnd.shuffle(perm)
    a = event_time_quantiles(ds(times, events), [0.25, 0.5, 0.75])
    b = event_time_quantiles(ds([times[i] for i in perm], events), [0.25, 0.5, 0.75])
    assert a.tolist() == b.tolist()


def test_step_function_right_continuous():
    f = StepFunction(np.array([1.0, 2.0]), np.array([0.8, 0.3]), 1.0)
    assert f(0.5) == 1.0 and f(1.0) == 0.8 and f(1.99) == 0.8 and f(2.0) == 0.3 and f(9) == 0.3
    assert f.left_limit(1.0) == 1.0 and f.left_limit(2.0) == 0.8
    assert f.is_survival() and not f.is_cumulative_hazard()


@given(st.lists(st.floats(0.01, 50), min_size=1, max_size=20, unique=True), st.floats(0.0, 60))
def test_refinement_leaves_evaluations_unchanged(knots, new):
    knots = np.sort(np.array(knots))
    f = StepFunction(knots, np.cumsum(np.ones(knots.size)), 0.0)
    g = f.refine(new)
    probe = np.concatenate([knots, knots + 1e-3, [0.0, new, 100.0]])
    assert np.array_equal(f(probe), g(probe))


def test_time_grid_validation_and_index():
    with pytest.raises(ValueError):
        TimeGrid(np.array([1.0, 1.0]))
    g = TimeGrid(np.array([1.0, 2.0, 3.0]))
    assert g.index(np.array([0.5, 1.0, 2.5, 9.0])).tolist() == [-1, 0, 1, 2]


def test_prediction_matrix_columns_and_padding():
    g = TimeGrid(np.array([1.0, 2.0]))
    p = SurvivalPredictionMatrix.from_survival(g, np.array([[0.9, 0.5], [0.8, 0.8]]))
    assert p.is_valid()
    assert p.survival_at(0.5).tolist() == [1.0, 1.0]
    assert p.survival_at(2.0).tolist() == [0.5, 0.8]
    assert np.allclose(p.cumhaz_at(1.5), -np.log([0.9, 0.8]))


def test_prediction_matrix_rejects_increasing_rows():
    with pytest.raises(ValueError):
        SurvivalPredictionMatrix.from_survival(TimeGrid(np.array([1.0, 2.0])), np.array([[0.5, 0.9]]))


@pytest.mark.parametrize("kind", KINDS)
def test_synthetic_output_validates(kind):
    d, _ = generate(GeneratorSpec(kind, 200, 3))
    validate_dataset(d)

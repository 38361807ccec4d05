"""Domain types shared by every other module.

A :class:`SurvivalDataset` holds the ``(x, t, delta)`` triple of right-censored
data. Curves over time are :class:`StepFunction` objects (right-continuous,
piecewise constant), and model output is a :class:`SurvivalPredictionMatrix`
holding one survival curve per subject on a shared :class:`TimeGrid`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EmptyDataset,
    LengthMismatch,
    NoEventsObserved,
    NonFiniteFeature,
    NonPositiveTime,
)

__all__ = [
    "SurvivalDataset",
    "TimeGrid",
    "StepFunction",
    "SurvivalPredictionMatrix",
    "validate_dataset",
    "event_time_quantiles",
    "sort_order",
]


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Feature matrix plus right-censored outcomes.

    Parameters
    ----------
    features : array_like, shape (n, p)
    times : array_like, shape (n,)
        Observed times (event or censoring), strictly positive.
    events : array_like of bool, shape (n,)
        ``True`` where the event was observed, ``False`` if right-censored.

    The arrays are copied and made read-only. Invariants are checked by
    :func:`validate_dataset`, not on construction, so that invalid input can
    be reported with the offending index.
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "times", _frozen(np.asarray(self.times, dtype=float).ravel()))
        object.__setattr__(self, "events", _frozen(np.asarray(self.events, dtype=bool).ravel()))

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "SurvivalDataset":
        idx = np.asarray(idx)
        return SurvivalDataset(self.features[idx], self.times[idx], self.events[idx])

    def with_features(self, features) -> "SurvivalDataset":
        return SurvivalDataset(features, self.times, self.events)

    def with_events(self, events) -> "SurvivalDataset":
        return SurvivalDataset(self.features, self.times, events)

    def equals(self, other: "SurvivalDataset") -> bool:
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.events, other.events)
        )


def validate_dataset(d: SurvivalDataset) -> None:
    """Raise a :class:`~survbench.exceptions.DatasetError` naming the first
    offending index if ``d`` breaks an invariant."""
    x, t, e = d.features, d.times, d.events
    if t.shape[0] == 0 or x.shape[0] == 0 or x.shape[1] == 0:
        raise EmptyDataset("dataset needs at least one subject and one feature")
    if not (x.shape[0] == t.shape[0] == e.shape[0]):
        raise LengthMismatch(
            f"features have {x.shape[0]} rows, times {t.shape[0]}, events {e.shape[0]}"
        )
    bad_t = ~(np.isfinite(t) & (t > 0))
    if bad_t.any():
        raise NonPositiveTime(int(np.flatnonzero(bad_t)[0]))
    bad_x = ~np.isfinite(x)
    if bad_x.any():
        row, col = np.argwhere(bad_x)[0]
        raise NonFiniteFeature(int(row), int(col))


def sort_order(d: SurvivalDataset) -> np.ndarray:
    """Deterministic ordering by (time, event first, original index)."""
    return np.lexsort((np.arange(d.n), ~d.events, d.times))


def event_time_quantiles(d: SurvivalDataset, qs) -> np.ndarray:
    """Empirical quantiles of the uncensored event times (linear interpolation
    between order statistics)."""
    qs = np.asarray(qs, dtype=float)
    if np.any((qs <= 0) | (qs >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    ev = d.times[d.events]
    if ev.size == 0:
        raise NoEventsObserved("all subjects are censored")
    return np.quantile(ev, qs, method="linear")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing, finite, positive evaluation times."""

    knots: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float).ravel()
        if k.size == 0:
            raise ValueError("time grid is empty")
        if not np.all(np.isfinite(k)) or k[0] <= 0:
            raise ValueError("time grid knots must be finite and positive")
        if np.any(np.diff(k) <= 0):
            raise ValueError("time grid knots must be strictly increasing")
        object.__setattr__(self, "knots", _frozen(k))

    def __len__(self):
        return self.knots.shape[0]

    @classmethod
    def from_event_quantiles(cls, d: SurvivalDataset, n_knots: int = 100) -> "TimeGrid":
        ev = d.times[d.events]
        if ev.size == 0:
            raise NoEventsObserved("cannot build a grid without events")
        return cls(np.unique(np.quantile(ev, np.linspace(0.0, 1.0, n_knots))))

    def index(self, t) -> np.ndarray:
        """Position of the largest knot <= t, or -1 if t precedes the grid."""
        return np.searchsorted(self.knots, t, side="right") - 1


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function.

    ``f(t)`` is the value at the largest knot ``<= t``, or
    ``value_before_first_knot`` when ``t`` precedes all knots.
    """

    knots: np.ndarray
    values: np.ndarray
    value_before_first_knot: float = 0.0

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if k.shape != v.shape:
            raise ValueError("knots and values differ in length")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", _frozen(k))
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "value_before_first_knot", float(self.value_before_first_knot))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.knots, t, side="right") - 1
        padded = np.concatenate(([self.value_before_first_knot], self.values))
        out = padded[pos + 1]
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """``lim_{s -> t-} f(s)``: value at the largest knot strictly below t."""
        t = np.asarray(t, dtype=float)
        pos = np.searchsorted(self.knots, t, side="left") - 1
        padded = np.concatenate(([self.value_before_first_knot], self.values))
        out = padded[pos + 1]
        return out if out.ndim else float(out)

    def refine(self, t: float) -> "StepFunction":
        """Insert a knot at ``t`` carrying the current value there."""
        if np.any(self.knots == t):
            return self
        v = self(t)
        pos = np.searchsorted(self.knots, t)
        return StepFunction(
            np.insert(self.knots, pos, t), np.insert(self.values, pos, v),
            self.value_before_first_knot,
        )

    def is_survival(self, atol: float = 0.0) -> bool:
        v = self.values
        return (
            self.value_before_first_knot == 1.0
            and bool(np.all(np.diff(v) <= atol))
            and bool(np.all((v >= -atol) & (v <= 1 + atol)))
        )

    def is_cumulative_hazard(self, atol: float = 0.0) -> bool:
        v = self.values
        return (
            self.value_before_first_knot == 0.0
            and bool(np.all(np.diff(v) >= -atol))
            and bool(np.all(v >= -atol))
        )


@dataclass(frozen=True, eq=False)
class SurvivalPredictionMatrix:
    """Per-subject survival curves on a shared grid.

    ``surv[i, k]`` is the predicted ``S(grid[k] | x_i)``. ``cumhaz`` holds the
    matching cumulative hazard ``-log S``; models that produce hazards
    natively pass it directly so that rank comparisons do not suffer from
    ``exp`` underflow. Use :meth:`from_cumhaz` or :meth:`from_survival`;
    ``native`` records which of the two was supplied, and rank-based metrics
    compare that representation so that no distinct input values collapse.
    """

    grid: TimeGrid
    surv: np.ndarray
    cumhaz: np.ndarray = field(repr=False)
    native: str = "cumhaz"

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.surv, dtype=float))
        h = np.atleast_2d(np.asarray(self.cumhaz, dtype=float))
        if s.shape[1] != len(self.grid) or s.shape != h.shape:
            raise ValueError("prediction matrix does not match the grid")
        if self.native not in ("cumhaz", "survival"):
            raise ValueError("native must be 'cumhaz' or 'survival'")
        object.__setattr__(self, "surv", _frozen(s))
        object.__setattr__(self, "cumhaz", _frozen(h))

    @classmethod
    def from_cumhaz(cls, grid: TimeGrid, cumhaz) -> "SurvivalPredictionMatrix":
        h = np.maximum(np.asarray(cumhaz, dtype=float), 0.0)
        return cls(grid, np.exp(-h), h)

    @classmethod
    def from_survival(cls, grid: TimeGrid, surv) -> "SurvivalPredictionMatrix":
        s = np.atleast_2d(np.asarray(surv, dtype=float))
        if not np.all((s >= 0.0) & (s <= 1.0)):
            raise ValueError("survival values must lie in [0, 1]")
        if np.any(np.diff(s, axis=1) > 0):
            raise ValueError("survival rows must be non-increasing")
        with np.errstate(divide="ignore"):
            h = -np.log(s)
        return cls(grid, s, h + 0.0, "survival")

    @property
    def n(self) -> int:
        return self.surv.shape[0]

    def columns(self, t) -> np.ndarray:
        """Grid column per time, shifted by one so that 0 means 'before the grid'."""
        return self.grid.index(t) + 1

    def padded_cumhaz(self) -> np.ndarray:
        return np.hstack([np.zeros((self.n, 1)), self.cumhaz])

    def padded_surv(self) -> np.ndarray:
        return np.hstack([np.ones((self.n, 1)), self.surv])

    def padded_risk(self) -> np.ndarray:
        """Padded matrix increasing in risk: cumulative hazard or ``-S``."""
        if self.native == "survival":
            return -self.padded_surv()
        return self.padded_cumhaz()

    def survival_at(self, t: float) -> np.ndarray:
        return self.padded_surv()[:, int(self.columns(t))]

    def cumhaz_at(self, t: float) -> np.ndarray:
        return self.padded_cumhaz()[:, int(self.columns(t))]

    def row_function(self, i: int) -> StepFunction:
        return StepFunction(self.grid.knots, self.surv[i], 1.0)

    def is_valid(self) -> bool:
        s = self.surv
        return bool(np.all((s >= 0) & (s <= 1)) and np.all(np.diff(s, axis=1) <= 0))

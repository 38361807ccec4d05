"""Kaplan-Meier, Nelson-Aalen and Breslow estimators.

Tied event times share one risk set (Breslow convention) in every estimator
here, so ``breslow_baseline`` with zero risks reproduces ``nelson_aalen``
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StepFunction, SurvivalDataset
from .exceptions import OverflowGuard

__all__ = [
    "KaplanMeierCurve",
    "kaplan_meier",
    "censoring_survival",
    "nelson_aalen",
    "breslow_baseline",
    "risk_table",
]


def risk_table(times, events, weights=None):
    """Distinct event times with their event counts and risk-set totals.

    Parameters
    ----------
    times, events : array_like
    weights : array_like, optional
        Per-subject weights summed into the risk sets (defaults to ones).

    Returns
    -------
    event_times, d, at_risk : ndarray
        ``at_risk[j]`` is the sum of weights over subjects with
        ``time >= event_times[j]``.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    w = np.ones_like(times) if weights is None else np.asarray(weights, dtype=float)
    uniq = np.unique(times[events])
    if uniq.size == 0:
        return uniq, np.zeros(0), np.zeros(0)
    d = np.bincount(np.searchsorted(uniq, times[events]), minlength=uniq.size).astype(float)
    # risk-set sums: suffix sums of weight over time-sorted subjects
    order = np.argsort(times, kind="stable")
    ts = times[order]
    suffix = np.cumsum(w[order][::-1])[::-1]
    first = np.searchsorted(ts, uniq, side="left")
    return uniq, d, suffix[first]


@dataclass(frozen=True)
class KaplanMeierCurve:
    curve: StepFunction
    at_risk: np.ndarray
    events_at: np.ndarray

    def __call__(self, t):
        return self.curve(t)

    def left_limit(self, t):
        return self.curve.left_limit(t)


def kaplan_meier(d: SurvivalDataset) -> KaplanMeierCurve:
    """Product-limit survival estimate with knots at the distinct event times."""
    t, dj, nj = risk_table(d.times, d.events)
    surv = np.cumprod(1.0 - dj / nj) if t.size else np.zeros(0)
    return KaplanMeierCurve(StepFunction(t, surv, 1.0), nj, dj)


def censoring_survival(d: SurvivalDataset) -> KaplanMeierCurve:
    """Kaplan-Meier estimate of the censoring distribution ``G(t)``."""
    return kaplan_meier(d.with_events(~d.events))


def nelson_aalen(d: SurvivalDataset) -> StepFunction:
    t, dj, nj = risk_table(d.times, d.events)
    return StepFunction(t, np.cumsum(dj / nj) if t.size else np.zeros(0), 0.0)


def breslow_baseline(d: SurvivalDataset, risk_scores) -> StepFunction:
    """Breslow cumulative baseline hazard for log-relative-hazard scores.

    Model survival is then ``exp(-H0(t) * exp(risk))``.
    """
    r = np.asarray(risk_scores, dtype=float)
    if r.shape != d.times.shape:
        raise ValueError("one risk score per subject is required")
    if r.size == 0:
        return StepFunction([], [], 0.0)
    center = float(np.mean(r))
    with np.errstate(over="ignore"):
        w = np.exp(r - center)
        if not np.all(np.isfinite(w)):
            raise OverflowGuard("exp(risk) overflows after centering")
        t, dj, sj = risk_table(d.times, d.events, w)
        h = np.cumsum(dj / sj) * np.exp(-center) if t.size else np.zeros(0)
    if not np.all(np.isfinite(h)):
        raise OverflowGuard("baseline hazard is not finite")
    return StepFunction(t, h, 0.0)

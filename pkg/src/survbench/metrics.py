"""Evaluation metrics for censored predictions.

Rank-based metrics compare predicted cumulative hazards (higher = riskier),
which orders subjects exactly as ``1 - S`` does but without ``exp``
underflow; predictions supplied as survival values are compared directly. Pair rule shared by every concordance measure: ``(i, j)`` is
comparable when ``i`` has an observed event and either ``t_i < t_j`` or
``t_i == t_j`` with ``j`` censored; tied scores count one half.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .core import SurvivalDataset, SurvivalPredictionMatrix, event_time_quantiles
from .exceptions import (
    DimensionMismatch,
    GridClampWarning,
    NoCasesOrControls,
    NoComparablePairs,
    ZeroVariance,
    ZeroWeightWarning,
)
from .nonparam import censoring_survival

__all__ = [
    "DEFAULT_QUANTILES",
    "MetricReport",
    "harrell_c",
    "harrell_c_quartile_avg",
    "antolini_c",
    "brier_score_at",
    "brier_summary",
    "cumulative_dynamic_auc_at",
    "auc_summary",
    "score_correlation",
    "evaluate",
]

DEFAULT_QUANTILES = (0.25, 0.5, 0.75)


def _check_rows(pred: SurvivalPredictionMatrix, test: SurvivalDataset):
    if pred.n != test.n:
        raise DimensionMismatch(f"{pred.n} predicted curves for {test.n} subjects")


def _warn_clamp(pred, t):
    if np.any(np.asarray(t) > pred.grid.knots[-1]):
        warnings.warn(
            "evaluation time beyond the prediction grid; using the last knot",
            GridClampWarning, stacklevel=3,
        )


def _concordance(score, col, test):
    conc, comp = _kernels.concordance_counts(score, col, test.times, test.events)
    if comp == 0:
        raise NoComparablePairs("no comparable pairs in the evaluation set")
    return conc / comp


def harrell_c(risks, test: SurvivalDataset) -> float:
    """Harrell's concordance of scalar risks (higher = earlier event)."""
    r = np.asarray(risks, dtype=float).reshape(-1, 1)
    if r.shape[0] != test.n:
        raise DimensionMismatch("one risk per subject is required")
    return _concordance(r, np.zeros(test.n, dtype=np.int64), test)


def harrell_c_quartile_avg(pred: SurvivalPredictionMatrix, test: SurvivalDataset, qs=DEFAULT_QUANTILES):
    """Harrell's C with risk ``1 - S(q | x)`` at event-time quantiles ``q``.

    Returns ``(mean, per_quantile)``. Quantiles without comparable pairs are
    reported as NaN and left out of the mean.
    """
    _check_rows(pred, test)
    times = event_time_quantiles(test, qs)
    _warn_clamp(pred, times)
    padded = pred.padded_risk()
    zeros = np.zeros(test.n, dtype=np.int64)
    values = []
    for t in times:
        col = int(pred.columns(t))
        try:
            values.append(_concordance(np.ascontiguousarray(padded[:, col:col + 1]), zeros, test))
        except NoComparablePairs:
            values.append(float("nan"))
    values = np.array(values)
    ok = ~np.isnan(values)
    if not ok.any():
        raise NoComparablePairs("no quantile had comparable pairs")
    return float(values[ok].mean()), values


def antolini_c(pred: SurvivalPredictionMatrix, test: SurvivalDataset) -> float:
    """Time-dependent concordance: for each comparable pair the curves are
    compared at the earlier subject's event time."""
    _check_rows(pred, test)
    cols = pred.columns(test.times).astype(np.int64)
    return _concordance(pred.padded_risk(), cols, test)


def _brier(pred, test, t, G):
    s = pred.survival_at(t)
    died = (test.times <= t) & test.events
    alive = test.times > t
    g_event = np.asarray(G.left_limit(test.times), dtype=float)
    g_t = float(G(t))
    dropped = (died & (g_event <= 0)) | (alive & (g_t <= 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(died, s ** 2 / g_event, 0.0) + np.where(alive, (1.0 - s) ** 2 / g_t, 0.0)
    if dropped.any():
        return float(np.mean(terms[~dropped])), int(dropped.sum())
    return float(np.mean(terms)), 0


def brier_score_at(pred: SurvivalPredictionMatrix, test: SurvivalDataset, t: float, G=None) -> float:
    """IPCW Brier score at time ``t``.

    Event terms are weighted by ``1 / G(t_i-)``, survivors by ``1 / G(t)``,
    where ``G`` is the Kaplan-Meier estimate of the censoring distribution on
    ``test``. Subjects censored before ``t`` contribute zero. Subjects whose
    weight is undefined are dropped and a :class:`ZeroWeightWarning` is issued.
    """
    _check_rows(pred, test)
    _warn_clamp(pred, t)
    if G is None:
        G = censoring_survival(test)
    value, dropped = _brier(pred, test, t, G)
    if dropped:
        warnings.warn(f"{dropped} subjects dropped at t={t}: zero censoring weight", ZeroWeightWarning, stacklevel=2)
    return value


@dataclass
class BrierSummary:
    times: np.ndarray
    values: np.ndarray
    mean: float
    rescaled: float


def brier_summary(pred, test, qs=DEFAULT_QUANTILES) -> BrierSummary:
    """Brier scores at event-time quantiles plus the ``1 - 2 * mean`` rescaling."""
    times = event_time_quantiles(test, qs)
    G = censoring_survival(test)
    values = np.array([brier_score_at(pred, test, t, G) for t in times])
    mean = float(values.mean())
    return BrierSummary(times, values, mean, 1.0 - 2.0 * mean)


def cumulative_dynamic_auc_at(pred: SurvivalPredictionMatrix, test: SurvivalDataset, t: float, G=None) -> float:
    """Cumulative/dynamic AUROC at ``t`` with IPCW case weights ``1/G(t_i-)``.

    Cases had an event by ``t``; controls survive past ``t``. The risk is the
    predicted cumulative hazard at ``t``.
    """
    _check_rows(pred, test)
    _warn_clamp(pred, t)
    if G is None:
        G = censoring_survival(test)
    risk = pred.padded_risk()[:, int(pred.columns(t))]
    cases = np.flatnonzero((test.times <= t) & test.events)
    controls = np.flatnonzero(test.times > t)
    w = 1.0 / np.asarray(G.left_limit(test.times[cases]), dtype=float) if cases.size else np.zeros(0)
    keep = np.isfinite(w)
    cases, w = cases[keep], w[keep]
    if cases.size == 0 or controls.size == 0:
        raise NoCasesOrControls(f"no cases or no controls at t={t}")
    rc = risk[cases][:, None]
    rk = risk[controls][None, :]
    per_case = (rc > rk).sum(axis=1) + 0.5 * (rc == rk).sum(axis=1)
    return float(np.dot(w, per_case) / (w.sum() * controls.size))


def auc_summary(pred, test, qs=DEFAULT_QUANTILES):
    times = event_time_quantiles(test, qs)
    G = censoring_survival(test)
    values = []
    for t in times:
        try:
            values.append(cumulative_dynamic_auc_at(pred, test, t, G))
        except NoCasesOrControls:
            values.append(float("nan"))
    values = np.array(values)
    return times, values, float(np.nanmean(values)) if np.any(~np.isnan(values)) else float("nan")


def score_correlation(xs, ys) -> float:
    """Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length sequences of at least two values")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ZeroVariance("correlation undefined for constant input")
    return float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))


@dataclass
class MetricReport:
    harrell_quartile_avg: float
    harrell_per_quartile: list
    antolini: float
    brier_per_quantile: list
    brier_avg: float
    brier_rescaled: float
    auroc_per_quantile: list
    auroc_avg: float
    eval_times: list
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(**data)


def evaluate(pred: SurvivalPredictionMatrix, test: SurvivalDataset, qs=DEFAULT_QUANTILES) -> MetricReport:
    """All metrics for one set of held-out predictions."""
    flags = []
    h_avg, h_q = harrell_c_quartile_avg(pred, test, qs)
    if np.isnan(h_q).any():
        flags.append("harrell_quantile_without_pairs")
    brier = brier_summary(pred, test, qs)
    _, auc_values, auc_avg = auc_summary(pred, test, qs)
    if np.isnan(auc_values).any():
        flags.append("auroc_quantile_without_cases_or_controls")
    return MetricReport(
        harrell_quartile_avg=h_avg,
        harrell_per_quartile=[float(v) for v in h_q],
        antolini=antolini_c(pred, test),
        brier_per_quantile=[float(v) for v in brier.values],
        brier_avg=brier.mean,
        brier_rescaled=brier.rescaled,
        auroc_per_quantile=[float(v) for v in auc_values],
        auroc_avg=auc_avg,
        eval_times=[float(t) for t in brier.times],
        flags=flags,
    )

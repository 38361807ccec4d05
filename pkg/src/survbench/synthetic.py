"""Synthetic survival data: linear PH, non-linear PH and non-PH generators.

All three kinds draw 20 standard-normal features and event times on the
horizon ``(0, 10]``:

* ``linph``: log-hazard ratio is a random linear combination of features 1-8.
* ``nonlinph``: log-hazard ratio ``x1 + x2*x3 + cos(6*x4)``.
* ``nonph``: the horizon is cut into 16 equal intervals; the event interval is
  drawn from ``softmax(16 * x[:16])`` and the event is placed at the interval's
  right boundary, so survival is piecewise constant on the intervals.

PH kinds share a random step baseline cumulative hazard; subjects still alive
at the horizon are administratively censored there. Uniform random censoring
is then added, calibrated to a target censored fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StepFunction, SurvivalDataset, SurvivalPredictionMatrix, TimeGrid
from .exceptions import CalibrationFailed, InsufficientStratum

__all__ = [
    "KINDS",
    "GeneratorSpec",
    "GroundTruth",
    "gen_baseline_cumhaz",
    "risk_linph",
    "risk_nonlinph",
    "interval_probs_nonph",
    "sample_event_time",
    "sample_event_times",
    "apply_censoring",
    "generate",
    "subsample_pool",
    "subsample_indices",
]

KINDS = ("linph", "nonlinph", "nonph")
TIME_HORIZON = 10.0
N_FEATURES = 20
N_INTERVALS = 16
N_BASELINE_BINS = 64
BASELINE_TOTAL = 3.0

# independent random streams per generation step, keyed by (seed, stream)
_FEATURES, _COEFS, _BASELINE, _EVENTS, _CENSORING = range(5)


def _rng(seed, stream):
    return np.random.default_rng([int(seed), stream])


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    seed: int = 0
    censoring_fraction: float = 0.3
    time_horizon: float = TIME_HORIZON
    n_features: int = N_FEATURES
    n_intervals: int = N_INTERVALS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.censoring_fraction < 1.0:
            raise ValueError("censoring_fraction must lie in [0, 1)")
        if (self.time_horizon, self.n_features, self.n_intervals) != (TIME_HORIZON, N_FEATURES, N_INTERVALS):
            raise ValueError("the generators are defined for 20 features, horizon 10 and 16 intervals")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Generating quantities behind a synthetic dataset.

    ``latent_times`` are the event times before random censoring (equal to the
    horizon for administratively censored subjects, flagged ``False`` in
    ``latent_events``).
    """

    kind: str
    risk: np.ndarray | None
    interval_probs: np.ndarray | None
    baseline_cumhaz: StepFunction | None
    linear_coefficients: np.ndarray | None
    latent_times: np.ndarray
    latent_events: np.ndarray

    def survival(self, grid: TimeGrid) -> SurvivalPredictionMatrix:
        """True survival curves of every subject on ``grid``."""
        t = grid.knots
        if self.kind == "nonph":
            edges = np.arange(1, N_INTERVALS + 1) * (TIME_HORIZON / N_INTERVALS)
            passed = (edges[None, :] <= t[:, None]).astype(float)
            cdf = self.interval_probs @ passed.T
            return SurvivalPredictionMatrix.from_survival(grid, np.clip(1.0 - cdf, 0.0, 1.0))
        h0 = self.baseline_cumhaz(t)
        return SurvivalPredictionMatrix.from_cumhaz(grid, np.exp(self.risk)[:, None] * h0[None, :])

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.linear_coefficients is not None:
            out["linear_coefficients"] = self.linear_coefficients.tolist()
        if self.baseline_cumhaz is not None:
            out["baseline_knots"] = self.baseline_cumhaz.knots.tolist()
            out["baseline_cumhaz"] = self.baseline_cumhaz.values.tolist()
        if self.risk is not None:
            out["risk"] = self.risk.tolist()
        if self.interval_probs is not None:
            out["interval_probs"] = self.interval_probs.tolist()
        return out


def gen_baseline_cumhaz(seed) -> StepFunction:
    """Random step cumulative baseline hazard on ``[0, 10]``.

    64 equal bins get i.i.d. ``|N(0, 1)|`` increments, rescaled so that the
    cumulative hazard reaches 3 at the horizon.
    """
    inc = np.abs(_rng(seed, _BASELINE).standard_normal(N_BASELINE_BINS))
    inc *= BASELINE_TOTAL / inc.sum()
    values = np.cumsum(inc)
    values[-1] = BASELINE_TOTAL
    knots = np.arange(1, N_BASELINE_BINS + 1) * (TIME_HORIZON / N_BASELINE_BINS)
    return StepFunction(knots, values, 0.0)


def risk_linph(x, coefs):
    x = np.asarray(x, dtype=float)
    return x[..., :8] @ np.asarray(coefs, dtype=float)


def risk_nonlinph(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0] + x[..., 1] * x[..., 2] + np.cos(6.0 * x[..., 3])


def interval_probs_nonph(x):
    z = 16.0 * np.asarray(x, dtype=float)[..., :N_INTERVALS]
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sample_event_times(kind, truth, baseline, u):
    """Inverse-transform sampling of latent event times.

    ``truth`` is the log-hazard ratio (PH kinds) or the interval
    probabilities (``nonph``) per subject. Returns ``(times, events)``;
    ``events`` is ``False`` for subjects surviving the horizon.
    """
    u = np.asarray(u, dtype=float)
    if kind == "nonph":
        probs = np.atleast_2d(truth)
        cdf = np.cumsum(probs, axis=-1)
        idx = np.minimum((cdf <= u[..., None]).sum(axis=-1), N_INTERVALS - 1)
        return (idx + 1) * (TIME_HORIZON / N_INTERVALS), np.ones(u.shape, dtype=bool)
    # S(t) <= u  <=>  H0(t) >= -log(u) / exp(risk)
    need = -np.log(u) * np.exp(-np.asarray(truth, dtype=float))
    pos = np.searchsorted(baseline.values, need, side="left")
    admin = pos >= baseline.knots.size
    times = np.where(admin, TIME_HORIZON, baseline.knots[np.minimum(pos, baseline.knots.size - 1)])
    return times, ~admin


def sample_event_time(kind, truth, baseline, u) -> float:
    """Single-subject version of :func:`sample_event_times` returning the time."""
    if kind == "nonph":
        times, _ = sample_event_times(kind, np.asarray(truth)[None, :], baseline, np.array([u]))
    else:
        times, _ = sample_event_times(kind, np.array([truth]), baseline, np.array([u]))
    return float(times[0])


def apply_censoring(times, seed, target_fraction, events=None):
    """Add uniform ``(0, c_max]`` censoring with ``c_max`` found by bisection
    so that the censored fraction is within ``max(0.01, 1/n)`` of the target.

    ``events`` marks latent times that are real events (default: all); the
    others count as already censored.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    events = np.ones(n, dtype=bool) if events is None else np.asarray(events, dtype=bool)
    if not 0.0 <= target_fraction < 1.0:
        raise ValueError("target_fraction must lie in [0, 1)")
    tol = max(0.01, 1.0 / n)
    base = 1.0 - events.mean()
    if base > target_fraction + tol:
        raise CalibrationFailed(
            f"{base:.3f} of subjects are censored before random censoring; target {target_fraction}"
        )
    if base >= target_fraction - tol:
        return times.copy(), events.copy()
    u = 1.0 - np.random.default_rng(seed).random(n)

    def frac(c):
        return 1.0 - np.mean(events & (times <= c * u))

    lo, hi = 0.0, float(times.max() / u.min()) * 2.0
    best_c, best_err = None, np.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = frac(mid)
        err = abs(f - target_fraction)
        if err < best_err:
            best_c, best_err = mid, err
        if err <= tol * 0.5:
            break
        if f > target_fraction:
            lo = mid
        else:
            hi = mid
    if best_err > tol:
        raise CalibrationFailed(f"could not reach censored fraction {target_fraction} (best error {best_err:.4f})")
    c = best_c * u
    observed = events & (times <= c)
    return np.where(observed, times, np.minimum(times, c)), observed


def generate(spec: GeneratorSpec):
    """Draw a synthetic dataset and its ground truth; deterministic in ``spec``."""
    x = _rng(spec.seed, _FEATURES).standard_normal((spec.n, N_FEATURES))
    coefs = probs = baseline = risk = None
    if spec.kind == "linph":
        coefs = _rng(spec.seed, _COEFS).standard_normal(8)
        risk = risk_linph(x, coefs)
    elif spec.kind == "nonlinph":
        risk = risk_nonlinph(x)
    else:
        probs = interval_probs_nonph(x)
    if risk is not None:
        baseline = gen_baseline_cumhaz(spec.seed)
    u = 1.0 - _rng(spec.seed, _EVENTS).random(spec.n)
    latent, latent_ev = sample_event_times(spec.kind, risk if risk is not None else probs, baseline, u)
    cens_seed = np.random.SeedSequence([int(spec.seed), _CENSORING]).generate_state(1)[0]
    times, events = apply_censoring(latent, int(cens_seed), spec.censoring_fraction, latent_ev)
    truth = GroundTruth(spec.kind, risk, probs, baseline, coefs, latent, latent_ev)
    return SurvivalDataset(x, times, events), truth


def subsample_indices(events, n: int, seed, censored_fraction: float = 0.30) -> np.ndarray:
    """Indices of a stratified subsample with exactly ``round(n * fraction)``
    censored subjects."""
    events = np.asarray(events, dtype=bool)
    n_cens = int(round(n * censored_fraction))
    n_ev = n - n_cens
    cens_idx = np.flatnonzero(~events)
    ev_idx = np.flatnonzero(events)
    if cens_idx.size < n_cens or ev_idx.size < n_ev:
        raise InsufficientStratum(
            f"need {n_cens} censored and {n_ev} uncensored, pool has {cens_idx.size} and {ev_idx.size}"
        )
    rng = np.random.default_rng(seed)
    chosen = np.concatenate([rng.choice(cens_idx, n_cens, replace=False), rng.choice(ev_idx, n_ev, replace=False)])
    return rng.permutation(chosen)


def subsample_pool(pool: SurvivalDataset, n: int, seed, censored_fraction: float = 0.30) -> SurvivalDataset:
    return pool.subset(subsample_indices(pool.events, n, seed, censored_fraction))

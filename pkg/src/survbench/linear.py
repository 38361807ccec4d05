"""Linear proportional-hazards models.

``fit_cox`` maximises the Breslow partial likelihood by Newton-Raphson with
step halving; ``fit_coxnet`` adds an elastic-net penalty and solves it by
cyclic coordinate descent on successive quadratic approximations. Both work
on internally standardised features and store coefficients on the original
feature scale, centred at the training means.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import StepFunction, SurvivalDataset, SurvivalPredictionMatrix, TimeGrid, validate_dataset
from .exceptions import (
    ConvergenceWarning,
    DimensionMismatch,
    NoEventsObserved,
    OverflowGuard,
    SingularHessian,
)
from .nonparam import breslow_baseline

__all__ = [
    "CoxModel",
    "ElasticNetConfig",
    "cox_partial_loglik",
    "cox_score_gradient",
    "fit_cox",
    "fit_coxnet",
    "coxnet_lambda_max",
    "coxnet_path",
    "cox_predict",
    "ph_predict",
]


def _check_eta(eta):
    if not np.all(np.isfinite(eta)):
        raise OverflowGuard("linear predictor is not finite")


def _risk_sets(times, events, w):
    """Distinct event times, event counts and risk-set sums of ``w``,
    plus the time-sorted order and first sorted position of each event time."""
    order = np.argsort(times, kind="stable")
    ts = times[order]
    uniq = np.unique(times[events])
    dj = np.bincount(np.searchsorted(uniq, times[events]), minlength=uniq.size).astype(float)
    first = np.searchsorted(ts, uniq, side="left")
    suffix = np.cumsum(w[order][::-1])[::-1]
    return uniq, dj, order, first, suffix[first]


def cox_score_gradient(times, events, eta):
    """Gradient of the partial log-likelihood with respect to each subject's
    linear predictor (Breslow ties).

    Returns ``(loglik, grad)``.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    eta = np.asarray(eta, dtype=float)
    _check_eta(eta)
    if not events.any():
        return 0.0, np.zeros_like(eta)
    m = eta.max()
    w = np.exp(eta - m)
    uniq, dj, _, _, s = _risk_sets(times, events, w)
    cum = np.cumsum(dj / s)
    h = np.concatenate(([0.0], cum))[np.searchsorted(uniq, times, side="right")]
    grad = events - w * h
    log_s = np.log(s)
    loglik = float(np.sum(eta[events] - m) - np.dot(dj, log_s))
    return loglik, grad


def cox_partial_loglik(d: SurvivalDataset, beta, hessian: bool = False):
    """Breslow partial log-likelihood and its gradient in ``beta``.

    With ``hessian=True`` the (negative semi-definite) Hessian is returned as
    a third element.
    """
    X = d.features
    beta = np.asarray(beta, dtype=float)
    eta = X @ beta
    ll, g_eta = cox_score_gradient(d.times, d.events, eta)
    grad = X.T @ g_eta
    if not hessian:
        return ll, grad
    p = X.shape[1]
    if not d.events.any():
        return ll, grad, np.zeros((p, p))
    m = eta.max()
    w = np.exp(eta - m)
    uniq, dj, order, first, s = _risk_sets(d.times, d.events, w)
    cum = np.concatenate(([0.0], np.cumsum(dj / s)))
    h = cum[np.searchsorted(uniq, d.times, side="right")]
    first_term = (X * (w * h)[:, None]).T @ X
    wx = np.cumsum((X[order] * w[order][:, None])[::-1], axis=0)[::-1][first]
    b = wx * (np.sqrt(dj) / s)[:, None]
    return ll, grad, -(first_term - b.T @ b)


@dataclass(frozen=True)
class ElasticNetConfig:
    lambda_: float
    l1_ratio: float = 1.0

    def __post_init__(self):
        if not self.lambda_ >= 0:
            raise ValueError("lambda must be non-negative")
        if not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError("l1_ratio must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class CoxModel:
    """Fitted linear PH model.

    ``beta`` is on the original feature scale; risks are
    ``(x - feature_means) @ beta``.
    """

    beta: np.ndarray
    baseline: StepFunction
    feature_means: np.ndarray
    feature_scales: np.ndarray
    converged: bool
    n_iter: int

    @property
    def beta_standardized(self) -> np.ndarray:
        return self.beta * self.feature_scales

    def risk(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.beta.shape[0]:
            raise DimensionMismatch(f"expected {self.beta.shape[0]} features")
        return (X - self.feature_means) @ self.beta


def _standardize(d: SurvivalDataset):
    validate_dataset(d)
    if not d.events.any():
        raise NoEventsObserved("cannot fit a Cox model without events")
    means = d.features.mean(axis=0)
    scales = d.features.std(axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    return d.with_features((d.features - means) / scales), means, scales


def _finish(d, z, beta_std, means, scales, converged, n_iter):
    beta = beta_std / scales
    risk = z.features @ beta_std
    return CoxModel(beta, breslow_baseline(d, risk), means, scales, converged, n_iter)


def fit_cox(d: SurvivalDataset, ridge_eps: float = 0.0, max_iter: int = 100,
            tol: float = 1e-7) -> CoxModel:
    """Newton-Raphson fit of ``loglik(beta) - ridge_eps * |beta|^2 / 2``.

    Raises :class:`SingularHessian` when the Newton system cannot be solved
    (collinear or constant features with ``ridge_eps=0``). If the gradient
    does not fall below ``tol`` within ``max_iter`` steps the model is
    returned with ``converged=False`` and a :class:`ConvergenceWarning`.
    """
    z, means, scales = _standardize(d)
    p = z.p
    beta = np.zeros(p)

    def objective(b):
        return cox_partial_loglik(z, b)[0] - 0.5 * ridge_eps * float(b @ b)

    converged = False
    n_iter = 0
    for n_iter in range(max_iter + 1):
        ll, g, H = cox_partial_loglik(z, beta, hessian=True)
        g = g - ridge_eps * beta
        # factorise first so that an uninformative feature is reported even
        # when the gradient already vanishes
        try:
            chol = np.linalg.cholesky(-H + ridge_eps * np.eye(p))
        except np.linalg.LinAlgError as exc:
            raise SingularHessian("Newton system is singular; raise ridge_eps") from exc
        if np.max(np.abs(g)) < tol:
            converged = True
            break
        if n_iter == max_iter:
            break
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
        current = ll - 0.5 * ridge_eps * float(beta @ beta)
        scale = 1.0
        for _ in range(20):
            try:
                if objective(beta + scale * step) >= current:
                    break
            except OverflowGuard:
                pass
            scale *= 0.5
        beta = beta + scale * step
    if not converged:
        warnings.warn(f"Cox fit did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    return _finish(d, z, beta, means, scales, converged, n_iter)


def coxnet_lambda_max(d: SurvivalDataset, l1_ratio: float) -> float:
    """Smallest penalty for which the elastic-net solution is identically zero."""
    z, _, _ = _standardize(d)
    _, g = cox_partial_loglik(z, np.zeros(z.p))
    if l1_ratio <= 0:
        return float("inf")
    return float(np.max(np.abs(g)) / (z.n * l1_ratio))


def _soft(u, a):
    if u > a:
        return u - a
    if u < -a:
        return u + a
    return 0.0


def _coxnet_solve(z, lam, alpha, beta, max_iter, tol, max_sweeps):
    n, p = z.n, z.p
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    def objective(b):
        return cox_partial_loglik(z, b)[0] / n - l1 * np.abs(b).sum() - 0.5 * l2 * float(b @ b)

    sweeps = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        ll, g, H = cox_partial_loglik(z, beta, hessian=True)
        Q = -H / n
        gn = g / n
        diag = np.diag(Q)
        b = beta.copy()
        while sweeps < max_sweeps:
            sweeps += 1
            delta = b - beta
            biggest = 0.0
            for k in range(p):
                denom = diag[k] + l2
                if denom <= 0:
                    continue
                u = gn[k] - Q[k] @ delta + diag[k] * b[k]
                new = _soft(u, l1) / denom
                change = new - b[k]
                if change != 0.0:
                    b[k] = new
                    delta[k] = new - beta[k]
                    biggest = max(biggest, abs(change))
            if biggest < 0.1 * tol:
                break
        direction = b - beta
        if np.max(np.abs(direction), initial=0.0) < tol:
            converged = True
            beta = b
            break
        current = ll / n - l1 * np.abs(beta).sum() - 0.5 * l2 * float(beta @ beta)
        scale = 1.0
        for _ in range(20):
            if objective(beta + scale * direction) >= current:
                break
            scale *= 0.5
        beta = beta + scale * direction
        if sweeps >= max_sweeps:
            break
    return beta, converged, it


def fit_coxnet(d: SurvivalDataset, cfg: ElasticNetConfig, max_iter: int = 100,
               tol: float = 1e-7, max_sweeps: int = 10_000, warm_start=None) -> CoxModel:
    """Elastic-net Cox regression.

    Maximises ``loglik(beta)/n - lambda * (l1_ratio * |beta|_1 +
    (1 - l1_ratio) * |beta|^2 / 2)`` over standardised coefficients.
    ``warm_start`` takes standardised coefficients from a previous fit.
    """
    z, means, scales = _standardize(d)
    beta = np.zeros(z.p) if warm_start is None else np.array(warm_start, dtype=float)
    beta, converged, it = _coxnet_solve(z, cfg.lambda_, cfg.l1_ratio, beta, max_iter, tol, max_sweeps)
    if not converged:
        warnings.warn("CoxNet fit did not converge", ConvergenceWarning, stacklevel=2)
    return _finish(d, z, beta, means, scales, converged, it)


def coxnet_path(d: SurvivalDataset, l1_ratio: float, lambdas=None, n_lambdas: int = 50,
                eps: float = 1e-3, **kwargs) -> list[tuple[float, CoxModel]]:
    """Warm-started fits along a descending penalty path.

    By default the path is ``n_lambdas`` log-spaced values from
    ``lambda_max`` down to ``eps * lambda_max``.
    """
    if lambdas is None:
        lmax = coxnet_lambda_max(d, max(l1_ratio, 1e-3))
        lambdas = np.geomspace(lmax, eps * lmax, n_lambdas)
    lambdas = sorted((float(x) for x in lambdas), reverse=True)
    path = []
    warm = None
    for lam in lambdas:
        model = fit_coxnet(d, ElasticNetConfig(lam, l1_ratio), warm_start=warm, **kwargs)
        warm = model.beta_standardized
        path.append((lam, model))
    return path


def ph_predict(baseline: StepFunction, risk, grid: TimeGrid) -> SurvivalPredictionMatrix:
    """Proportional-hazards curves ``exp(-H0(t) * exp(risk))`` on ``grid``."""
    h0 = np.asarray(baseline(grid.knots), dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        h = h0[None, :] * np.exp(np.asarray(risk, dtype=float))[:, None]
    h = np.where(h0[None, :] == 0.0, 0.0, h)
    return SurvivalPredictionMatrix.from_cumhaz(grid, h)


def cox_predict(model: CoxModel, X, grid: TimeGrid):
    """Survival curves and risk scores for new subjects."""
    risk = model.risk(X)
    return ph_predict(model.baseline, risk, grid), risk

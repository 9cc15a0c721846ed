"""Linear models for excess delay: scaling, split, OLS / Ridge / Lasso, CV and
permutation importance.

Objectives, with ``Xc``/``yc`` the centered training data:

* Ridge minimizes ``||yc - Xc b||^2 + lam * ||b||^2`` (unnormalized squared error),
* Lasso minimizes ``(1 / 2n) ||yc - Xc b||^2 + lam * ||b||_1``.

Intercepts are never penalized.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateScore, NotConverged, RankDeficient, ZeroVarianceTarget

DEFAULT_GRID = tuple(sorted(set(np.round(np.logspace(-3, 3, 25), 12).tolist()) | {0.77}))


class ModelKind(enum.Enum):
    OLS = "ols"
    RIDGE = "ridge"
    LASSO = "lasso"


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: list
    dummy_mask: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.dummy_mask = np.asarray(self.dummy_mask, dtype=bool)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be n x p with n matching y")
        if self.X.shape[1] != len(self.names) or len(self.dummy_mask) != len(self.names):
            raise ValueError("names / dummy_mask length must equal column count")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains missing or non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def take(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], list(self.names), self.dummy_mask.copy())

    def select(self, cols) -> "Dataset":
        cols = list(cols)
        return Dataset(self.X[:, cols], self.y, [self.names[c] for c in cols], self.dummy_mask[cols])


@dataclass
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    passthrough: np.ndarray     # dummy or zero-variance columns
    zero_variance: list = field(default_factory=list)

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.means) / self.stds


@dataclass
class ModelFit:
    kind: ModelKind
    intercept: float
    coefs: np.ndarray
    lam: float = 0.0
    std_errors: Optional[np.ndarray] = None
    p_values: Optional[np.ndarray] = None
    n_iter: int = 0

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coefs


@dataclass
class CvResult:
    grid: list
    mean_rmse: list
    best_lambda: float
    fold_assignments: np.ndarray


def split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple:
    """Seeded shuffle; the first ceil(n (1 - f)) rows train, the rest test."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(d.n)
    n_train = math.ceil(round(d.n * (1 - test_fraction), 9))
    return d.take(perm[:n_train]), d.take(perm[n_train:])


def fit_scaler(train: Dataset) -> Scaler:
    if train.n == 0:
        raise ValueError("cannot fit a scaler on no rows")
    means = train.X.mean(axis=0)
    stds = train.X.std(axis=0)
    zero = (stds == 0) & ~train.dummy_mask
    passthrough = train.dummy_mask | zero
    means = np.where(passthrough, 0.0, means)
    stds = np.where(passthrough, 1.0, stds)
    return Scaler(means, stds, passthrough, [train.names[i] for i in np.flatnonzero(zero)])


def apply_scaler(s: Scaler, d: Dataset) -> Dataset:
    return Dataset(s.apply(d.X), d.y, list(d.names), d.dummy_mask.copy())


def _center(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = X.mean(axis=0), y.mean()
    return X - xm, y - ym, xm, ym


def fit_ols(X, y) -> ModelFit:
    """Least squares via the normal equations, with classical t-test p-values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    Z = np.column_stack([np.ones(n), X])
    G = Z.T @ Z
    if n < p + 1 or np.linalg.matrix_rank(Z) < p + 1:
        raise RankDeficient(f"design of {n} rows has rank below {p + 1}")
    beta = np.linalg.solve(G, Z.T @ y)
    resid = y - Z @ beta
    dof = n - p - 1
    se = pv = None
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.inv(G)
        se = np.sqrt(np.maximum(np.diag(cov), 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            tval = np.where(se > 0, beta / se, np.inf * np.sign(beta))
        pv = 2 * stats.t.sf(np.abs(tval), dof)
        pv = np.where(np.isnan(pv), 1.0, pv)
        se, pv = se[1:], pv[1:]
    return ModelFit(ModelKind.OLS, float(beta[0]), beta[1:], 0.0, se, pv)


def fit_ridge(X, y, lam: float) -> ModelFit:
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    Xc, yc, xm, ym = _center(X, y)
    p = Xc.shape[1]
    coefs = np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)
    return ModelFit(ModelKind.RIDGE, float(ym - xm @ coefs), coefs, float(lam))


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_lambda_max(X, y) -> float:
    Xc, yc, _, _ = _center(X, y)
    return float(np.max(np.abs(Xc.T @ yc)) / Xc.shape[0]) if Xc.shape[1] else 0.0


def fit_lasso(X, y, lam: float, tol: float = 1e-8, max_iter: int = 10_000) -> ModelFit:
    """Cyclic coordinate descent; stops when the largest coefficient change < tol."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    Xc, yc, xm, ym = _center(X, y)
    Xc = np.asfortranarray(Xc)
    n, p = Xc.shape
    col_sq = (Xc ** 2).sum(axis=0) / n
    b = np.zeros(p)
    r = yc.copy()
    if lam >= lasso_lambda_max(X, y):
        return ModelFit(ModelKind.LASSO, float(ym), b, float(lam))
    for it in range(1, max_iter + 1):
        delta = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            old = b[j]
            rho = float(Xc[:, j] @ r) / n + col_sq[j] * old
            if rho > lam:
                new = (rho - lam) / col_sq[j]
            elif rho < -lam:
                new = (rho + lam) / col_sq[j]
            else:
                new = 0.0
            if new != old:
                r -= Xc[:, j] * (new - old)
                b[j] = new
                delta = max(delta, abs(new - old))
        if delta < tol:
            return ModelFit(ModelKind.LASSO, float(ym - xm @ b), b, float(lam), n_iter=it)
    raise NotConverged(max_iter, ModelFit(ModelKind.LASSO, float(ym - xm @ b), b, float(lam), n_iter=max_iter))


def metrics(yhat, y) -> dict:
    yhat = np.asarray(yhat, dtype=float)
    y = np.asarray(y, dtype=float)
    if yhat.shape != y.shape or y.size == 0:
        raise ValueError("need equal, non-empty vectors")
    err = y - yhat
    sse = float(err @ err)
    sst = float(((y - y.mean()) ** 2).sum())
    out = {"rmse": math.sqrt(sse / y.size), "mae": float(np.abs(err).mean())}
    if sst == 0:
        exc = ZeroVarianceTarget("target has zero variance, R^2 undefined")
        exc.partial = out
        raise exc
    out["r2"] = 1.0 - sse / sst
    return out


def r2_score(yhat, y) -> float:
    return metrics(yhat, y)["r2"]


def fit_model(kind: ModelKind, X, y, lam: float = 0.0, **kw) -> ModelFit:
    if kind is ModelKind.OLS:
        return fit_ols(X, y)
    if kind is ModelKind.RIDGE:
        return fit_ridge(X, y, lam)
    return fit_lasso(X, y, lam, **kw)


def fold_assignments(n: int, k: int, seed: int) -> np.ndarray:
    folds = np.empty(n, dtype=np.int64)
    folds[np.random.default_rng(seed).permutation(n)] = np.arange(n) % k
    return folds


def cross_validate(train: Dataset, grid: Sequence[float] = DEFAULT_GRID, k: int = 5, seed: int = 0,
                   kind: ModelKind = ModelKind.RIDGE) -> CvResult:
    """k-fold CV over ``grid``; the scaler is refit on each fold's training part."""
    if k < 2 or k > train.n:
        raise ValueError("need 2 <= k <= n")
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty lambda grid")
    folds = fold_assignments(train.n, k, seed)
    sq = np.zeros(len(grid))
    for f in range(k):
        tr = train.take(folds != f)
        va = train.take(folds == f)
        s = fit_scaler(tr)
        Xtr, Xva = s.apply(tr.X), s.apply(va.X)
        for i, lam in enumerate(grid):
            try:
                m = fit_model(kind, Xtr, tr.y, lam)
            except NotConverged as exc:
                m = exc.partial
            err = va.y - m.predict(Xva)
            sq[i] += math.sqrt(float(err @ err) / va.n)
    mean_rmse = [float(v / k) for v in sq]
    best = min(range(len(grid)), key=lambda i: (mean_rmse[i], grid[i]))
    return CvResult(grid, mean_rmse, grid[best], folds)


def permutation_importance(model: ModelFit, X, y, repeats: int = 20, seed: int = 0) -> tuple:
    """Relative drop in R^2 when each column is shuffled, averaged over repeats.

    Returns ``(alphas, ranks)``; rank 1 is the most important feature.
    Raises :class:`DegenerateScore` when the baseline R^2 is not positive.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    base = r2_score(model.predict(X), y)
    if base <= 0:
        raise DegenerateScore(base)
    p = X.shape[1]
    alphas = np.zeros(p)
    for i in range(p):
        total = 0.0
        Xp = X.copy()
        for r in range(repeats):
            perm = np.random.default_rng([seed, i, r]).permutation(X.shape[0])
            Xp[:, i] = X[perm, i]
            total += (base - r2_score(model.predict(Xp), y)) / base
        alphas[i] = total / repeats
    order = sorted(range(p), key=lambda i: (-alphas[i], i))
    ranks = np.empty(p, dtype=np.int64)
    ranks[order] = np.arange(1, p + 1)
    return alphas, ranks

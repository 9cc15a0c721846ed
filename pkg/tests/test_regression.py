import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gdpx.errors import DegenerateScore, NotConverged, RankDeficient, ZeroVarianceTarget
from gdpx.regression import (
    DEFAULT_GRID, Dataset, apply_scaler, cross_validate, fit_lasso, fit_ols, fit_ridge, fit_scaler,
    lasso_lambda_max, metrics, permutation_importance, split,
)

X1 = np.array([[-1.0], [1.0]])


def dataset(n, p, seed=0, dummies=()):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    for j in dummies:
        X[:, j] = rng.integers(0, 2, n)
    y = X @ rng.normal(size=p) + rng.normal(size=n)
    mask = np.zeros(p, bool)
    mask[list(dummies)] = True
    return Dataset(X, y, [f"x{j}" for j in range(p)], mask)


def orthonormal(n, p, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, p))
    Q, _ = np.linalg.qr(A - A.mean(axis=0))
    return np.sqrt(n) * Q, rng.normal(size=n) * 3


# split

def test_split_sizes():
    tr, te = split(dataset(10, 2), 0.2, seed=1)
    assert (tr.n, te.n) == (8, 2)
    tr, te = split(dataset(2, 1), 0.5, seed=1)
    assert (tr.n, te.n) == (1, 1)


def test_split_reproducible_partition():
    d = dataset(37, 3)
    a, b = split(d, 0.2, 5), split(d, 0.2, 5)
    assert np.array_equal(a[0].X, b[0].X) and np.array_equal(a[1].y, b[1].y)
    rows = np.vstack([a[0].X, a[1].X])
    assert sorted(map(tuple, rows)) == sorted(map(tuple, d.X))


# scaler

def test_scaler_rules():
    d = Dataset(np.array([[1.0, 0, 5], [3.0, 1, 5]]), np.zeros(2), ["a", "dummy", "const"],
                np.array([False, True, False]))
    s = fit_scaler(d)
    out = apply_scaler(s, d).X
    assert out[:, 0].tolist() == [-1.0, 1.0] and s.means[0] == 2 and s.stds[0] == 1
    assert out[:, 1].tolist() == [0, 1] and out[:, 2].tolist() == [5, 5]
    assert s.zero_variance == ["const"]


# OLS / ridge

def test_ols_examples():
    m = fit_ols(X1, [-1.0, 1.0])
    assert m.coefs[0] == pytest.approx(1) and m.intercept == pytest.approx(0)
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 3))
    y = 2 + X @ [1.0, -2.0, 0.5]
    r = metrics(fit_ols(X, y).predict(X), y)
    assert r["rmse"] < 1e-10 and r["r2"] == pytest.approx(1)


def test_ols_rank_deficient():
    X = np.random.default_rng(0).normal(size=(10, 2))
    with pytest.raises(RankDeficient):
        fit_ols(np.column_stack([X, X[:, 0]]), np.arange(10.0))


def test_ols_matches_lstsq_and_linregress():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 4))
    y = X @ [1, 0, -1, 2] + rng.normal(size=50)
    m = fit_ols(X, y)
    ref, *_ = np.linalg.lstsq(np.column_stack([np.ones(50), X]), y, rcond=None)
    assert np.allclose(np.r_[m.intercept, m.coefs], ref, atol=1e-10)
    lr = stats.linregress(X[:, 0], y)
    single = fit_ols(X[:, :1], y)
    assert single.p_values[0] == pytest.approx(lr.pvalue, rel=1e-8)
    assert single.std_errors[0] == pytest.approx(lr.stderr, rel=1e-8)


def test_ridge_examples():
    assert fit_ridge(X1, [-1.0, 1.0], 2.0).coefs[0] == pytest.approx(0.5)
    d = dataset(40, 3)
    m = fit_ridge(d.X, d.y, 1e9)
    assert np.abs(m.coefs).max() < 1e-6 and m.intercept == pytest.approx(d.y.mean(), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100))
def test_ridge_matches_augmented_lstsq(seed, lam):
    d = dataset(30, 4, seed)
    Xc, yc = d.X - d.X.mean(0), d.y - d.y.mean()
    aug_X = np.vstack([Xc, np.sqrt(lam) * np.eye(4)])
    ref, *_ = np.linalg.lstsq(aug_X, np.r_[yc, np.zeros(4)], rcond=None)
    assert np.allclose(fit_ridge(d.X, d.y, lam).coefs, ref, atol=1e-9)


def test_ridge_norm_non_increasing():
    d = dataset(60, 6, 4)
    norms = [np.linalg.norm(fit_ridge(d.X, d.y, lam).coefs) for lam in np.logspace(-3, 4, 30)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


# lasso

def test_lasso_examples():
    assert fit_lasso(X1, [-2.0, 2.0], 0.5).coefs[0] == pytest.approx(1.5)
    d = dataset(80, 5, 1)
    assert np.allclose(fit_lasso(d.X, d.y, 0.0, tol=1e-12, max_iter=100_000).coefs,
                       fit_ols(d.X, d.y).coefs, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_lasso_orthonormal_soft_threshold(seed, lam):
    X, y = orthonormal(40, 5, seed)
    z = X.T @ (y - y.mean()) / 40
    expected = np.sign(z) * np.maximum(np.abs(z) - lam, 0)
    assert np.allclose(fit_lasso(X, y, lam).coefs, expected, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.001, 0.9))
def test_lasso_subgradient_conditions(seed, frac):
    d = dataset(60, 8, seed)
    lam = frac * lasso_lambda_max(d.X, d.y)
    tol = 1e-7
    m = fit_lasso(d.X, d.y, lam, tol=1e-10, max_iter=100_000)
    Xc = d.X - d.X.mean(0)
    grad = Xc.T @ (d.y - m.predict(d.X)) / d.n
    for g, b in zip(grad, m.coefs):
        if b == 0:
            assert abs(g) <= lam + tol
        else:
            assert g == pytest.approx(lam * np.sign(b), abs=tol)


def test_lasso_full_shrinkage():
    d = dataset(30, 4)
    lmax = lasso_lambda_max(d.X, d.y)
    for lam in (lmax, 2 * lmax):
        m = fit_lasso(d.X, d.y, lam)
        assert np.all(m.coefs == 0) and m.intercept == pytest.approx(d.y.mean())


def test_lasso_not_converged_keeps_partial():
    d = dataset(50, 10, 3)
    with pytest.raises(NotConverged) as exc:
        fit_lasso(d.X, d.y, 1e-4, tol=1e-15, max_iter=2)
    assert exc.value.partial is not None and exc.value.partial.coefs.shape == (10,)


# metrics

def test_metrics_examples():
    y = np.array([1.0, 4.0, 2.0])
    assert metrics(y, y) == {"rmse": 0.0, "mae": 0.0, "r2": 1.0}
    assert metrics(np.full(3, y.mean()), y)["r2"] == pytest.approx(0)
    assert metrics(np.array([1.0, 1.0]), np.array([0.0, 2.0])) == {"rmse": 1.0, "mae": 1.0, "r2": 0.0}
    with pytest.raises(ZeroVarianceTarget):
        metrics(np.array([1.0, 2.0]), np.array([3.0, 3.0]))


cents = st.integers(-100_000, 100_000).map(lambda v: v / 100)


@given(st.lists(st.tuples(cents, cents), min_size=2, max_size=40))
def test_metrics_orderings(pairs):
    yhat, y = map(np.array, zip(*pairs))
    if np.ptp(y) == 0:
        return
    r = metrics(yhat, y)
    assert r["rmse"] >= r["mae"] - 1e-9 >= -1e-9
    assert r["r2"] <= 1 + 1e-12


# CV

def test_cv_singleton_grid_and_determinism():
    d = dataset(50, 4)
    assert cross_validate(d, [0.3], 5, 1).best_lambda == 0.3
    a, b = cross_validate(d, DEFAULT_GRID, 5, 9), cross_validate(d, DEFAULT_GRID, 5, 9)
    assert a.mean_rmse == b.mean_rmse and np.array_equal(a.fold_assignments, b.fold_assignments)
    assert set(a.fold_assignments.tolist()) == set(range(5))


def test_cv_prefers_shrinkage_with_noise_features():
    rng = np.random.default_rng(12)
    n, p = 60, 30
    X = rng.normal(size=(n, p))
    y = 3 * X[:, 0] - 2 * X[:, 1] + rng.normal(scale=3, size=n)
    d = Dataset(X, y, [f"x{j}" for j in range(p)], np.zeros(p, bool))
    assert cross_validate(d, DEFAULT_GRID, 5, 0).best_lambda > 0


def test_cv_ties_pick_smallest_lambda():
    # a constant column yields identical predictions for every positive lambda
    d = Dataset(np.ones((20, 1)), np.arange(20.0) % 3, ["a"], np.zeros(1, bool))
    res = cross_validate(d, [5.0, 1.0, 3.0], 4, 0)
    assert len(set(res.mean_rmse)) == 1 and res.best_lambda == 1.0


def test_default_grid_includes_reference_lambda():
    assert 0.77 in DEFAULT_GRID and min(DEFAULT_GRID) == pytest.approx(1e-3)


# permutation importance

def test_importance_single_feature_perfect_fit():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 2))
    y = X[:, 0].copy()
    m = fit_ols(X, y)
    alphas, ranks = permutation_importance(m, X, y, repeats=20, seed=3)
    assert alphas[0] == pytest.approx(2.0, abs=0.4)   # E[1 - R2_perm] = 2 for a unit-variance column
    assert abs(alphas[1]) < 0.05 and ranks.tolist() == [1, 2]
    again = permutation_importance(m, X, y, repeats=20, seed=3)
    assert np.array_equal(alphas, again[0])


def test_importance_degenerate():
    X = np.random.default_rng(0).normal(size=(30, 1))
    y = np.random.default_rng(1).normal(size=30)
    m = fit_ridge(X[:15], y[:15], 0.0)
    m.intercept += 100
    with pytest.raises(DegenerateScore):
        permutation_importance(m, X[15:], y[15:])

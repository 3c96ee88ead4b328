"""K-fold cross-validation for the regularization parameter.

Folds partition the observations; for each candidate lam the estimator
is fit on each fold's complement and scored on the held-out fold.  The
selected estimator averages the K complement fits at the winning lam,
weighted by fold size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import Dataset
from .solvers import Estimate, SolverConfig, lambda_max, solve_convex

__all__ = [
    "FoldPlan",
    "CvResult",
    "make_folds",
    "lambda_grid",
    "cv_error",
    "cv_select",
    "default_solver",
]


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of each observation to one of k folds."""

    k: int
    assignments: np.ndarray

    def indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def complement(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def make_folds(n: int, k: int, rng: np.random.Generator) -> FoldPlan:
    """Random partition of [0, n) into k folds with sizes differing by at
    most one, so every fold holds at least floor(n/k) >= n/(2k) points."""
    if not 2 <= k <= n:
        raise ValueError("need 2 <= k <= n")
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    for fold, block in enumerate(np.array_split(perm, k)):
        assignments[block] = fold
    return FoldPlan(k=k, assignments=assignments)


def lambda_grid(ds: Dataset, lambda_min: float) -> list[float]:
    """Halving grid from the zero-solution threshold down to lambda_min.

    Starts at lambda_max(ds) and halves until a value at or below
    lambda_min is reached (that value is included).
    """
    if lambda_min <= 0:
        raise ValueError("lambda_min must be positive")
    top = lambda_max(ds)
    if top == 0.0:
        raise ValueError("all responses are zero; the grid is empty")
    grid = [top]
    while grid[-1] > lambda_min:
        grid.append(grid[-1] / 2.0)
    return grid


def default_solver(cfg: SolverConfig = SolverConfig()):
    """Convex-route solver hook for cross-validation: a callable
    (dataset, lam, x0) -> Estimate."""

    def run(ds: Dataset, lam: float, x0=None) -> Estimate:
        return solve_convex(ds, lam, cfg, x0=x0)

    return run


def cv_error(ds: Dataset, plan: FoldPlan, lam: float, solver) -> float:
    """Per-sample out-of-fold prediction error at one lam:
    (1/n) sum_k ||y_k - X_k(B_{-k})||^2.

    The underlying fold sum is stored per sample so it compares directly
    with per-observation noise levels; the argmin over lam is unchanged
    by the normalization.
    """
    if len(plan.assignments) != ds.n:
        raise ValueError("fold plan does not cover the dataset")
    total = 0.0
    for fold in range(plan.k):
        est = solver(ds.subset(plan.complement(fold)), lam, None)
        hold = ds.subset(plan.indices(fold))
        resid = hold.y - hold.measurements.apply(est.b_hat)
        total += float(resid @ resid)
    return total / ds.n


@dataclass(frozen=True)
class CvResult:
    """Grid, per-lam out-of-fold errors, the winning lam, the averaged
    estimator at that lam, and every (fold, lam) fit."""

    lambda_grid: list[float]
    e_hat: np.ndarray
    lambda_cv: float
    b_cv: np.ndarray
    per_fold_estimates: list[list[Estimate]]  # indexed [lam][fold]
    converged: bool


def cv_select(ds: Dataset, plan: FoldPlan, grid, solver) -> CvResult:
    """Compute out-of-fold errors over a decreasing lam grid and return
    the fold-size-weighted average estimator at the best lam.

    Fold fits are warm-started along the grid.  Ties at the minimum go
    to the largest lam (strongest regularization).
    """
    grid = [float(g) for g in grid]
    if len(grid) == 0:
        raise ValueError("lam grid must be non-empty")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lam grid must be strictly decreasing")
    n = ds.n
    sizes = plan.sizes()
    holds = [ds.subset(plan.indices(fold)) for fold in range(plan.k)]
    trains = [ds.subset(plan.complement(fold)) for fold in range(plan.k)]
    warm = [None] * plan.k
    estimates: list[list[Estimate]] = []
    e_hat = np.empty(len(grid))
    for j, lam in enumerate(grid):
        row = []
        total = 0.0
        for fold in range(plan.k):
            est = solver(trains[fold], lam, warm[fold])
            warm[fold] = est.b_hat
            resid = holds[fold].y - holds[fold].measurements.apply(est.b_hat)
            total += float(resid @ resid)
            row.append(est)
        estimates.append(row)
        e_hat[j] = total / n
    best = 0
    for j in range(1, len(grid)):
        if e_hat[j] < e_hat[best]:
            best = j
    b_cv = np.zeros(ds.measurements.shape)
    for fold in range(plan.k):
        b_cv += (sizes[fold] / n) * estimates[best][fold].b_hat
    return CvResult(
        lambda_grid=grid,
        e_hat=e_hat,
        lambda_cv=grid[best],
        b_cv=b_cv,
        per_fold_estimates=estimates,
        converged=all(est.converged for est in estimates[best]),
    )

"""Estimators for the penalized trace-regression loss.

The convex route minimizes (1/n)||y - X(B)||^2 + lam*||B||_* by an
accelerated proximal-gradient method with a monotone restart; the
factored route alternates exact ridge solves over the two factors of
B = U V^T.  A continuation scheme over a decreasing lam ladder handles
the noiseless minimum-nuclear-norm problem.  Every solve returns an
Estimate carrying its certificate data, and ``check_goodness`` verifies
a posteriori that an estimate's loss does not exceed the loss at the
target matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import matrix_norm, operator_norm, soft_threshold, svd
from .sampling import Dataset, EnsembleSpec

__all__ = [
    "SolverConfig",
    "Estimate",
    "GoodnessCheck",
    "objective",
    "lambda_max",
    "lipschitz_estimate",
    "solve_convex",
    "solve_factored",
    "solve_noiseless",
    "check_goodness",
]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls shared by the solvers.

    step=None estimates the gradient Lipschitz constant by power
    iteration and uses its reciprocal; backtracking halves the step
    whenever a restarted proximal step fails to descend.  rank_cap is
    only meaningful for the factored solver.
    """

    max_iters: int = 5000
    rel_obj_tol: float = 1e-8
    step: float | None = None
    backtracking: bool = True
    bt_shrink: float = 0.5
    rank_cap: int | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0.0 < self.rel_obj_tol < 1.0:
            raise ValueError("rel_obj_tol must lie in (0, 1)")
        if not 0.0 < self.bt_shrink < 1.0:
            raise ValueError("bt_shrink must lie in (0, 1)")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")


@dataclass(frozen=True)
class Estimate:
    """Solver output with provenance.

    ``objective`` is always the penalized convex loss at ``b_hat``
    (recomputable from the dataset and ``lam``); ``history`` records the
    per-iteration (or per-sweep) internal objective values; ``residual``
    is the relative data-fit residual reported by the noiseless solver.
    """

    b_hat: np.ndarray
    lam: float
    objective: float
    iters: int
    converged: bool
    method: str
    residual: float | None = None
    history: tuple = field(default=(), repr=False)
    factors: tuple | None = field(default=None, repr=False)


def objective(ds: Dataset, lam: float, b) -> float:
    """Penalized loss (1/n)||y - X(b)||_2^2 + lam * ||b||_*."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    b = np.asarray(b, dtype=float)
    resid = ds.y - ds.measurements.apply(b)
    return float(resid @ resid / ds.n + lam * matrix_norm(b, "nuclear"))


def lambda_max(ds: Dataset) -> float:
    """Smallest penalty level at which the all-zero matrix minimizes the
    penalized loss: the operator norm of the loss gradient at zero,
    (2/n) ||sum_i y_i X_i||_op."""
    return 2.0 / ds.n * operator_norm(ds.measurements.adjoint(ds.y))


def lipschitz_estimate(ds: Dataset, iters: int = 20) -> float:
    """Power-iteration estimate of the Lipschitz constant of the smooth
    part's gradient, i.e. the largest eigenvalue of b -> (2/n) X*(X(b))."""
    ms = ds.measurements
    b = np.ones(ms.shape)
    b /= np.linalg.norm(b)
    lam = 1.0
    for _ in range(iters):
        nxt = ms.adjoint(ms.apply(b)) * (2.0 / ds.n)
        nrm = np.linalg.norm(nxt)
        if nrm == 0.0:
            return 1.0
        lam = nrm
        b = nxt / nrm
    return float(lam)


def _prox_grad_step(ds: Dataset, lam: float, b: np.ndarray, step: float) -> np.ndarray:
    grad = ds.measurements.adjoint(ds.measurements.apply(b) - ds.y) * (2.0 / ds.n)
    return soft_threshold(b - step * grad, lam * step)


def solve_convex(
    ds: Dataset,
    lam: float,
    cfg: SolverConfig = SolverConfig(),
    x0: np.ndarray | None = None,
) -> Estimate:
    """Accelerated proximal-gradient minimization of the penalized loss.

    Objective values are non-increasing across iterations: whenever the
    accelerated step overshoots, momentum is reset and a plain proximal
    step is taken from the current iterate, which is a descent step for
    any step size at most 1/L.  Stops when the relative objective
    decrease falls below cfg.rel_obj_tol; hitting max_iters first yields
    converged=False rather than an exception.
    """
    if lam <= 0:
        raise ValueError("lam must be positive for the convex solver")
    step = cfg.step if cfg.step is not None else 1.0 / lipschitz_estimate(ds)
    x = np.zeros(ds.measurements.shape) if x0 is None else np.asarray(x0, dtype=float).copy()
    y = x.copy()
    t = 1.0
    fx = objective(ds, lam, x)
    history = [fx]
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        z = _prox_grad_step(ds, lam, y, step)
        fz = objective(ds, lam, z)
        if fz > fx:
            # momentum overshot: restart from the best iterate
            t = 1.0
            z = _prox_grad_step(ds, lam, x, step)
            fz = objective(ds, lam, z)
            while cfg.backtracking and fz > fx and step > 1e-18:
                step *= cfg.bt_shrink
                z = _prox_grad_step(ds, lam, x, step)
                fz = objective(ds, lam, z)
            if fz > fx:
                # no descent direction left at working precision
                converged = True
                break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - x)
        rel_dec = (fx - fz) / max(abs(fx), 1e-300)
        x, fx, t = z, fz, t_next
        history.append(fx)
        if 0.0 <= rel_dec < cfg.rel_obj_tol:
            converged = True
            break
    return Estimate(
        b_hat=x,
        lam=float(lam),
        objective=fx,
        iters=iters,
        converged=converged,
        method="convex",
        history=tuple(history),
    )


def _factored_objective(ds: Dataset, lam: float, u: np.ndarray, v: np.ndarray) -> float:
    resid = ds.y - ds.measurements.apply(u @ v.T)
    return float(resid @ resid / ds.n + 0.5 * lam * (np.sum(u * u) + np.sum(v * v)))


def _ridge_block(design: np.ndarray, y: np.ndarray, lam: float, n: int) -> np.ndarray:
    """Solve min (1/n)||y - design @ w||^2 + (lam/2)||w||^2 for w."""
    m = design.shape[1]
    gram = design.T @ design * (2.0 / n) + lam * np.eye(m)
    rhs = design.T @ y * (2.0 / n)
    return np.linalg.solve(gram, rhs)


def solve_factored(
    ds: Dataset,
    lam: float,
    r: int,
    cfg: SolverConfig = SolverConfig(max_iters=200),
) -> Estimate:
    """Alternating exact ridge minimization over the factors of B = U V^T.

    Each half-sweep solves its block least-squares problem exactly (the
    ridge term keeps the normal equations positive definite), so the
    factored objective is non-increasing per sweep.  The returned
    Estimate reports the convex penalized loss at U V^T.
    """
    if lam <= 0:
        raise ValueError("lam must be positive for the factored solver")
    d_r, d_c = ds.measurements.shape
    if not 1 <= r <= min(d_r, d_c):
        raise ValueError("rank out of range")
    if cfg.rank_cap is not None:
        r = min(r, cfg.rank_cap)
    # spectral initialization from the adjoint of the responses
    f = svd(ds.measurements.adjoint(ds.y) / ds.n)
    root = np.sqrt(f.singulars[:r])
    u = f.left[:, :r] * root
    v = f.right[:, :r] * root
    fx = _factored_objective(ds, lam, u, v)
    history = [fx]
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iters + 1):
        design_u = ds.measurements.xi_dot(v).reshape(ds.n, d_r * r)
        u = _ridge_block(design_u, ds.y, lam, ds.n).reshape(d_r, r)
        design_v = ds.measurements.xi_t_dot(u).reshape(ds.n, d_c * r)
        v = _ridge_block(design_v, ds.y, lam, ds.n).reshape(d_c, r)
        f_new = _factored_objective(ds, lam, u, v)
        if not np.isfinite(f_new):
            raise FloatingPointError("factored solve produced non-finite values")
        rel_dec = (fx - f_new) / max(abs(fx), 1e-300)
        fx = f_new
        history.append(fx)
        if 0.0 <= rel_dec < cfg.rel_obj_tol:
            converged = True
            break
    b_hat = u @ v.T
    return Estimate(
        b_hat=b_hat,
        lam=float(lam),
        objective=objective(ds, lam, b_hat),
        iters=sweeps,
        converged=converged,
        method="factored",
        history=tuple(history),
        factors=(u, v),
    )


# Continuation ladder for noiseless solves: lam shrinks by this factor
# for this many steps starting from lambda_max, leaving the final
# penalty about 390000x smaller than the zero-solution threshold.
NOISELESS_LADDER_FACTOR = 5.0
NOISELESS_LADDER_STEPS = 8
NOISELESS_RESIDUAL_TOL = 1e-3


def solve_noiseless(ds: Dataset, cfg: SolverConfig = SolverConfig(max_iters=2000)) -> Estimate:
    """Minimum-nuclear-norm recovery for noiseless data.

    Runs the convex solver over a geometrically decreasing lam ladder
    with warm starts; with exact responses the data-fit term vanishes at
    the constrained optimum, so the final rung approximates the
    minimum-nuclear-norm matrix consistent with the observations.  The
    relative constraint residual is reported, and converged=False when
    it exceeds 1e-3.
    """
    lam0 = lambda_max(ds)
    if lam0 == 0.0:
        # gradient at zero vanishes, so every rung returns the zero matrix
        zero = np.zeros(ds.measurements.shape)
        ynorm = float(np.linalg.norm(ds.y))
        resid = 0.0 if ynorm == 0.0 else 1.0
        return Estimate(zero, 0.0, objective(ds, 0.0, zero), 0, resid <= NOISELESS_RESIDUAL_TOL,
                        "noiseless", residual=resid)
    x = None
    total_iters = 0
    est = None
    for j in range(NOISELESS_LADDER_STEPS + 1):
        lam = lam0 / NOISELESS_LADDER_FACTOR**j
        est = solve_convex(ds, lam, cfg, x0=x)
        x = est.b_hat
        total_iters += est.iters
    resid_num = np.linalg.norm(ds.y - ds.measurements.apply(x))
    resid = float(resid_num / max(np.linalg.norm(ds.y), 1e-300))
    return Estimate(
        b_hat=x,
        lam=est.lam,
        objective=est.objective,
        iters=total_iters,
        converged=resid <= NOISELESS_RESIDUAL_TOL,
        method="noiseless",
        residual=resid,
    )


class GoodnessCheck(NamedTuple):
    loss_ok: bool
    spikiness_ok: bool


def check_goodness(
    est: Estimate,
    b_star,
    ds: Dataset,
    b_star_bound: float,
    spec: EnsembleSpec | None = None,
) -> GoodnessCheck:
    """Certify an estimate after the fact.

    loss_ok: penalized loss at the estimate does not exceed the loss at
    the target (up to a relative 1e-9 slack).  spikiness_ok: the
    estimate's spikiness norm stays within the stated bound for the
    target.
    """
    spec = ds.spec if spec is None else spec
    b_star = np.asarray(b_star, dtype=float)
    obj_star = objective(ds, est.lam, b_star)
    obj_hat = objective(ds, est.lam, est.b_hat)
    loss_ok = obj_hat <= obj_star + 1e-9 * (1.0 + abs(obj_star))
    spikiness_ok = spec.spikiness_norm(est.b_hat) <= b_star_bound * (1.0 + 1e-6)
    return GoodnessCheck(loss_ok=bool(loss_ok), spikiness_ok=bool(spikiness_ok))

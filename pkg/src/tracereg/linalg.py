"""Dense matrix primitives: trace inner product, norms, SVD helpers,
singular-value soft thresholding, and row/column-space projections.

All routines are pure functions on 2-D float arrays and are safe to call
concurrently.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "SvdFactors",
    "trace_inner",
    "matrix_norm",
    "operator_norm",
    "svd",
    "numerical_rank",
    "soft_threshold",
    "project_perp",
    "project_parallel",
]

# Singular values below RANK_RTOL * s_max are treated as zero when a
# numerical rank is needed; this sits at the double-precision SVD noise
# floor.
RANK_RTOL = 1e-10


class SvdFactors(NamedTuple):
    """Thin SVD ``left @ diag(singulars) @ right.T``.

    ``left`` is d_r x k and ``right`` is d_c x k, both with orthonormal
    columns; ``singulars`` is non-increasing and non-negative.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def compose(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.T


def _as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def trace_inner(a, b) -> float:
    """Trace inner product tr(a b^T) = sum_ij a_ij b_ij."""
    a = _as_matrix(a)
    b = _as_matrix(b)
    _check_same_shape(a, b)
    return float(np.sum(a * b))


def matrix_norm(m, kind: str, p: float | None = None, q: float | None = None) -> float:
    """Evaluate a named matrix norm.

    kind is one of:
      - "frobenius": root sum of squared entries
      - "nuclear":   sum of singular values
      - "operator":  largest singular value
      - "linf":      largest absolute entry
      - "l_pq":      (sum_rows (sum_cols |m_rc|^p)^(q/p))^(1/q); the inner
                     index runs over the columns of each row.  q may be
                     inf, giving the maximum row l^p norm.
    """
    m = _as_matrix(m)
    if kind == "frobenius":
        return float(np.linalg.norm(m, "fro"))
    if kind == "nuclear":
        return float(np.sum(np.linalg.svd(m, compute_uv=False)))
    if kind == "operator":
        if min(m.shape) == 0:
            return 0.0
        return float(np.linalg.svd(m, compute_uv=False)[0])
    if kind == "linf":
        return float(np.max(np.abs(m))) if m.size else 0.0
    if kind == "l_pq":
        if p is None or q is None or p < 1 or q < 1:
            raise ValueError("l_pq norm needs p, q >= 1")
        row = np.sum(np.abs(m) ** p, axis=1) ** (1.0 / p)
        if np.isinf(q):
            return float(np.max(row))
        return float(np.sum(row**q) ** (1.0 / q))
    raise ValueError(f"unknown norm kind {kind!r}")


def operator_norm(m) -> float:
    return matrix_norm(m, "operator")


def svd(m) -> SvdFactors:
    """Thin SVD of ``m`` with singular values sorted non-increasing."""
    m = _as_matrix(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SvdFactors(left=u, singulars=s, right=vh.T)


def numerical_rank(m, rtol: float = RANK_RTOL) -> int:
    """Count singular values above rtol times the largest one."""
    s = np.linalg.svd(_as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def soft_threshold(m, tau: float) -> np.ndarray:
    """Shrink the singular values of ``m`` by ``tau`` (floored at zero).

    This is the proximal map of tau * nuclear norm: it minimizes
    0.5 * ||X - m||_F^2 + tau * ||X||_* over X.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    u, s, vh = np.linalg.svd(_as_matrix(m), full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vh


def _span_projectors(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projectors onto the row space and column space of b."""
    u, s, vh = np.linalg.svd(b, full_matrices=False)
    if s.size and s[0] > 0.0:
        k = int(np.sum(s > RANK_RTOL * s[0]))
    else:
        k = 0
    uk = u[:, :k]
    vk = vh[:k, :].T
    return uk @ uk.T, vk @ vk.T


def project_perp(b, a) -> np.ndarray:
    """Component of ``a`` whose row and column spaces are both orthogonal
    to the singular subspaces of ``b``."""
    b = _as_matrix(b)
    a = _as_matrix(a)
    _check_same_shape(a, b)
    pu, pv = _span_projectors(b)
    iu = np.eye(b.shape[0]) - pu
    iv = np.eye(b.shape[1]) - pv
    return iu @ a @ iv


def project_parallel(b, a) -> np.ndarray:
    """Complement of :func:`project_perp`; its rank is at most twice the
    numerical rank of ``b``."""
    b = _as_matrix(b)
    a = _as_matrix(a)
    _check_same_shape(a, b)
    return a - project_perp(b, a)

"""Matrix primitives: norms, SVD, singular-value shrinkage, and the
row/column-space projections used as estimation diagnostics."""

import numpy as np

from tracereg import (
    matrix_norm,
    numerical_rank,
    project_parallel,
    project_perp,
    soft_threshold,
    stream,
    svd,
    trace_inner,
)

rng = stream(7)
m = rng.standard_normal((6, 5))

print("== norms of a random 6x5 matrix ==")
for kind in ("frobenius", "nuclear", "operator", "linf"):
    print(f"  {kind:10s} {matrix_norm(m, kind):.4f}")
print(f"  max row l2 {matrix_norm(m, 'l_pq', p=2, q=np.inf):.4f}")

f = svd(m)
print("\n== thin SVD ==")
print("  singular values:", np.round(f.singulars, 4))
print("  reconstruction error:", np.linalg.norm(f.compose() - m))

print("\n== duality between operator and nuclear norm ==")
top_pair = np.outer(f.left[:, 0], f.right[:, 0])
print("  <M, u1 v1^T> =", round(trace_inner(m, top_pair), 6), " operator norm =", round(matrix_norm(m, "operator"), 6))

print("\n== singular value soft thresholding ==")
shrunk = soft_threshold(m, 1.0)
print("  singulars before:", np.round(f.singulars, 3))
print("  singulars after :", np.round(svd(shrunk).singulars, 3))

print("\n== projections relative to a rank-2 matrix ==")
b = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
a = rng.standard_normal((6, 5))
par, perp = project_parallel(b, a), project_perp(b, a)
print("  rank of parallel part:", numerical_rank(par), "(bounded by 2 x rank(b) = 4)")
print("  parts recompose a:", np.linalg.norm(par + perp - a) < 1e-10)
print(
    "  nuclear additivity |b + perp|_* - |b|_* - |perp|_* =",
    matrix_norm(b + perp, "nuclear") - matrix_norm(b, "nuclear") - matrix_norm(perp, "nuclear"),
)

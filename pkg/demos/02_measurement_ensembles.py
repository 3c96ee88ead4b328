"""The four measurement ensembles: sampling, the structured operator,
closed-form norms, and the per-distribution constants."""

import numpy as np

from tracereg import (
    FactoredMeasurement,
    GaussianEnsemble,
    MatrixCompletion,
    MultiTask,
    generate_dataset,
    generate_ground_truth,
    sample_inner_products,
    stream,
)

d = 10
specs = [
    MatrixCompletion(d, d),
    MultiTask(d, d),
    GaussianEnsemble(d, d),
    FactoredMeasurement(d, d),
]

b = stream(1).standard_normal((d, d))
print("== isotropy: Monte Carlo E<X,B>^2 vs closed-form ||B||_L2(Pi)^2 ==")
for spec in specs:
    z = sample_inner_products(spec, b, 200_000, stream(2))
    print(f"  {spec.kind:22s} mc={np.mean(z**2):8.3f}  closed={spec.l2pi_norm(b)**2:8.3f}")

print("\n== spikiness norms and ensemble constants ==")
for spec in specs:
    c = spec.constants()
    print(
        f"  {spec.kind:22s} spikiness(B)={spec.spikiness_norm(b):9.3f}  "
        f"frak_c={c.frak_c:4.0f}  nu0={c.nu0:.4g}"
    )

print("\n== a dataset under the linear trace model ==")
b_star = generate_ground_truth(d, d, 2, stream(3))
ds = generate_dataset(MatrixCompletion(d, d, plain_entries=True), b_star, 400, 0.5, seed=4)
resid = ds.y - ds.measurements.apply(b_star)
print(f"  n={ds.n}, responses observe entries plus noise; residual std = {resid.std(ddof=1):.3f} (sigma = 0.5)")
print("  adjoint identity <X*(w), B> = w . X(B):", end=" ")
w = stream(5).standard_normal(ds.n)
lhs = float(np.sum(ds.measurements.adjoint(w) * b_star))
rhs = float(w @ ds.measurements.apply(b_star))
print(abs(lhs - rhs) < 1e-10)

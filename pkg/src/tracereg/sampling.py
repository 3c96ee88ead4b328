"""Measurement ensembles for trace regression.

Four sampling distributions over measurement matrices are supported,
each stored in a structure-exploiting encoding so that applying the
sampling operator never materializes the dense matrices:

  - MatrixCompletion:    X = xi * e_row e_col^T   (one scaled entry)
  - MultiTask:           X = e_row * vec^T        (one nonzero row)
  - GaussianEnsemble:    X dense with iid standard normal entries
  - FactoredMeasurement: X = u v^T                (random rank-one pair)

A dataset bundles n measurements with responses y_i = <B*, X_i> + eps_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .linalg import matrix_norm
from .rng import stream

__all__ = [
    "Entry",
    "RowVector",
    "Dense",
    "RankOne",
    "Measurement",
    "MeasurementSet",
    "EntrySet",
    "RowVectorSet",
    "DenseSet",
    "RankOneSet",
    "EnsembleConstants",
    "MatrixCompletion",
    "MultiTask",
    "GaussianEnsemble",
    "FactoredMeasurement",
    "EnsembleSpec",
    "Dataset",
    "apply_operator",
    "adjoint_apply",
    "generate_ground_truth",
    "generate_dataset",
    "sample_inner_products",
    "save_dataset",
    "load_dataset",
]


# ---------------------------------------------------------------------------
# Single measurements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Entry:
    """Scaled single-entry matrix: scale * e_row e_col^T."""

    row: int
    col: int
    scale: float

    def densify(self, d_r: int, d_c: int) -> np.ndarray:
        out = np.zeros((d_r, d_c))
        out[self.row, self.col] = self.scale
        return out

    def apply(self, b: np.ndarray) -> float:
        return float(self.scale * b[self.row, self.col])


@dataclass(frozen=True)
class RowVector:
    """Single nonzero row: e_row * vec^T."""

    row: int
    vec: np.ndarray

    def densify(self, d_r: int, d_c: int) -> np.ndarray:
        out = np.zeros((d_r, d_c))
        out[self.row, :] = self.vec
        return out

    def apply(self, b: np.ndarray) -> float:
        return float(b[self.row, :] @ self.vec)


@dataclass(frozen=True)
class Dense:
    """Fully dense measurement matrix."""

    mat: np.ndarray

    def densify(self, d_r: int, d_c: int) -> np.ndarray:
        if self.mat.shape != (d_r, d_c):
            raise ValueError("dense measurement has wrong shape")
        return np.array(self.mat)

    def apply(self, b: np.ndarray) -> float:
        return float(np.sum(self.mat * b))


@dataclass(frozen=True)
class RankOne:
    """Rank-one pair: u v^T."""

    u: np.ndarray
    v: np.ndarray

    def densify(self, d_r: int, d_c: int) -> np.ndarray:
        if self.u.shape != (d_r,) or self.v.shape != (d_c,):
            raise ValueError("rank-one factors have wrong length")
        return np.outer(self.u, self.v)

    def apply(self, b: np.ndarray) -> float:
        return float(self.u @ b @ self.v)


Measurement = Union[Entry, RowVector, Dense, RankOne]


# ---------------------------------------------------------------------------
# Homogeneous measurement batches (structure-of-arrays)
# ---------------------------------------------------------------------------


class MeasurementSet:
    """Batch of measurements of one kind with vectorized operator action.

    Subclasses implement ``apply`` (the sampling operator), ``adjoint``
    (weighted sum of measurement matrices), factor-design products used
    by the alternating solver, densification, subsetting, and item
    access returning single Measurement objects.
    """

    d_r: int
    d_c: int

    def __len__(self) -> int:
        raise NotImplementedError

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d_r, self.d_c)

    def apply(self, b: np.ndarray) -> np.ndarray:
        """Vector of trace inner products <b, X_i>."""
        raise NotImplementedError

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        """sum_i w_i X_i as a dense d_r x d_c matrix."""
        raise NotImplementedError

    def xi_dot(self, v: np.ndarray) -> np.ndarray:
        """Stack of X_i @ v, shape (n, d_r, k) for v of shape (d_c, k)."""
        raise NotImplementedError

    def xi_t_dot(self, u: np.ndarray) -> np.ndarray:
        """Stack of X_i^T @ u, shape (n, d_c, k) for u of shape (d_r, k)."""
        raise NotImplementedError

    def densify(self) -> np.ndarray:
        return np.stack([self[i].densify(self.d_r, self.d_c) for i in range(len(self))])

    def subset(self, idx: np.ndarray) -> "MeasurementSet":
        raise NotImplementedError

    def __getitem__(self, i: int) -> Measurement:
        raise NotImplementedError

    def _check_b(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape != (self.d_r, self.d_c):
            raise ValueError(f"matrix shape {b.shape} does not match {(self.d_r, self.d_c)}")
        return b

    def _check_w(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (len(self),):
            raise ValueError(f"weight length {w.shape} does not match n={len(self)}")
        return w


class EntrySet(MeasurementSet):
    def __init__(self, rows, cols, scales, d_r: int, d_c: int):
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.scales = np.asarray(scales, dtype=float)
        self.d_r, self.d_c = int(d_r), int(d_c)
        if not (len(self.rows) == len(self.cols) == len(self.scales)):
            raise ValueError("rows, cols, scales must have equal length")

    def __len__(self):
        return len(self.rows)

    def apply(self, b):
        b = self._check_b(b)
        return self.scales * b[self.rows, self.cols]

    def adjoint(self, w):
        w = self._check_w(w)
        flat = self.rows * self.d_c + self.cols
        acc = np.bincount(flat, weights=w * self.scales, minlength=self.d_r * self.d_c)
        return acc.reshape(self.d_r, self.d_c)

    def xi_dot(self, v):
        n = len(self)
        out = np.zeros((n, self.d_r, v.shape[1]))
        out[np.arange(n), self.rows, :] = self.scales[:, None] * v[self.cols, :]
        return out

    def xi_t_dot(self, u):
        n = len(self)
        out = np.zeros((n, self.d_c, u.shape[1]))
        out[np.arange(n), self.cols, :] = self.scales[:, None] * u[self.rows, :]
        return out

    def subset(self, idx):
        return EntrySet(self.rows[idx], self.cols[idx], self.scales[idx], self.d_r, self.d_c)

    def __getitem__(self, i):
        return Entry(int(self.rows[i]), int(self.cols[i]), float(self.scales[i]))


class RowVectorSet(MeasurementSet):
    def __init__(self, rows, vecs, d_r: int, d_c: int):
        self.rows = np.asarray(rows, dtype=np.int64)
        self.vecs = np.asarray(vecs, dtype=float)
        self.d_r, self.d_c = int(d_r), int(d_c)
        if self.vecs.shape != (len(self.rows), self.d_c):
            raise ValueError("vecs must have shape (n, d_c)")

    def __len__(self):
        return len(self.rows)

    def apply(self, b):
        b = self._check_b(b)
        return np.einsum("ij,ij->i", b[self.rows, :], self.vecs)

    def adjoint(self, w):
        w = self._check_w(w)
        out = np.zeros((self.d_r, self.d_c))
        np.add.at(out, self.rows, w[:, None] * self.vecs)
        return out

    def xi_dot(self, v):
        n = len(self)
        out = np.zeros((n, self.d_r, v.shape[1]))
        out[np.arange(n), self.rows, :] = self.vecs @ v
        return out

    def xi_t_dot(self, u):
        return self.vecs[:, :, None] * u[self.rows, None, :]

    def subset(self, idx):
        return RowVectorSet(self.rows[idx], self.vecs[idx], self.d_r, self.d_c)

    def __getitem__(self, i):
        return RowVector(int(self.rows[i]), self.vecs[i].copy())


class DenseSet(MeasurementSet):
    def __init__(self, mats):
        self.mats = np.asarray(mats, dtype=float)
        if self.mats.ndim != 3:
            raise ValueError("mats must have shape (n, d_r, d_c)")
        self.d_r, self.d_c = self.mats.shape[1], self.mats.shape[2]

    def __len__(self):
        return self.mats.shape[0]

    def apply(self, b):
        b = self._check_b(b)
        return self.mats.reshape(len(self), -1) @ b.ravel()

    def adjoint(self, w):
        w = self._check_w(w)
        return np.tensordot(w, self.mats, axes=1)

    def xi_dot(self, v):
        return self.mats @ v

    def xi_t_dot(self, u):
        return np.einsum("nij,ik->njk", self.mats, u)

    def subset(self, idx):
        return DenseSet(self.mats[idx])

    def __getitem__(self, i):
        return Dense(self.mats[i].copy())


class RankOneSet(MeasurementSet):
    def __init__(self, us, vs):
        self.us = np.asarray(us, dtype=float)
        self.vs = np.asarray(vs, dtype=float)
        if self.us.ndim != 2 or self.vs.ndim != 2 or len(self.us) != len(self.vs):
            raise ValueError("us, vs must be (n, d_r) and (n, d_c)")
        self.d_r, self.d_c = self.us.shape[1], self.vs.shape[1]

    def __len__(self):
        return self.us.shape[0]

    def apply(self, b):
        b = self._check_b(b)
        return np.einsum("ij,ij->i", self.us @ b, self.vs)

    def adjoint(self, w):
        w = self._check_w(w)
        return self.us.T @ (w[:, None] * self.vs)

    def xi_dot(self, v):
        return self.us[:, :, None] * (self.vs @ v)[:, None, :]

    def xi_t_dot(self, u):
        return self.vs[:, :, None] * (self.us @ u)[:, None, :]

    def subset(self, idx):
        return RankOneSet(self.us[idx], self.vs[idx])

    def __getitem__(self, i):
        return RankOne(self.us[i].copy(), self.vs[i].copy())


# ---------------------------------------------------------------------------
# Ensemble specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnsembleConstants:
    """Distribution-level constants used by the bound calculators.

    gamma_min/gamma_max bracket E<X,B>^2 / ||B||_F^2 over all B; frak_c
    is a truncation level at which at least half the second moment of
    <X,B> is retained for every B with unit spikiness norm; nu0 is the
    infimum of ||B||_F^2 / spikiness(B)^2.
    """

    gamma_min: float
    gamma_max: float
    frak_c: float
    nu0: float


@dataclass(frozen=True)
class _EnsembleBase:
    d_r: int
    d_c: int

    def __post_init__(self):
        if self.d_r < 1 or self.d_c < 1:
            raise ValueError("dimensions must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d_r, self.d_c)

    # subclasses: kind tag used by the dataset cache format
    kind: str = field(default="", init=False, repr=False)

    def sample_measurement(self, rng: np.random.Generator) -> Measurement:
        return self.sample_batch(1, rng)[0]

    def sample_batch(self, n: int, rng: np.random.Generator) -> MeasurementSet:
        raise NotImplementedError

    def l2pi_norm(self, b) -> float:
        """Root mean square of <X, b> under the ensemble, in closed form."""
        raise NotImplementedError

    def spikiness_norm(self, b) -> float:
        """Distribution-adapted norm bounding the tail scale of <X, b>."""
        raise NotImplementedError

    def constants(self) -> EnsembleConstants:
        raise NotImplementedError


@dataclass(frozen=True)
class MatrixCompletion(_EnsembleBase):
    """Uniformly random scaled entry observations.

    xi_mode selects the entry scale: "gaussian_var_d2" draws
    xi ~ N(0, d^2) (d = d_r here), "deterministic_d" fixes xi = d.  With
    plain_entries=True the scale is fixed at 1, so responses observe raw
    entries of the target matrix; all derived constants rescale by 1/d
    accordingly.
    """

    xi_mode: str = "gaussian_var_d2"
    plain_entries: bool = False

    kind = "matrix_completion"

    def __post_init__(self):
        super().__post_init__()
        if self.xi_mode not in ("gaussian_var_d2", "deterministic_d"):
            raise ValueError(f"unknown xi_mode {self.xi_mode!r}")

    def sample_batch(self, n, rng):
        rows = rng.integers(0, self.d_r, size=n)
        cols = rng.integers(0, self.d_c, size=n)
        if self.plain_entries:
            scales = np.ones(n)
        elif self.xi_mode == "deterministic_d":
            scales = np.full(n, float(self.d_r))
        else:
            scales = rng.normal(0.0, float(self.d_r), size=n)
        return EntrySet(rows, cols, scales, self.d_r, self.d_c)

    def l2pi_norm(self, b):
        # E xi^2 = d^2 in both analyzed modes cancels the 1/(d_r d_c)
        # sampling weight only when d_r = d_c =: d; keep the general form.
        scale2 = 1.0 if self.plain_entries else float(self.d_r) ** 2
        return float(np.sqrt(scale2 / (self.d_r * self.d_c)) * matrix_norm(b, "frobenius"))

    def spikiness_norm(self, b):
        scale = 1.0 if self.plain_entries else float(self.d_r)
        return 2.0 * scale * matrix_norm(b, "linf")

    def constants(self):
        scale2 = 1.0 if self.plain_entries else float(self.d_r) ** 2
        gamma = scale2 / (self.d_r * self.d_c)
        # Infimum of ||B||_F^2 / (2 scale ||B||_inf)^2 is attained by a
        # single-entry matrix.
        scale = 1.0 if self.plain_entries else float(self.d_r)
        return EnsembleConstants(gamma_min=gamma, gamma_max=gamma, frak_c=9.0, nu0=1.0 / (4.0 * scale**2))


@dataclass(frozen=True)
class MultiTask(_EnsembleBase):
    """Uniformly random row index with a N(0, d_c * I) feature row."""

    kind = "multi_task"

    def sample_batch(self, n, rng):
        rows = rng.integers(0, self.d_r, size=n)
        vecs = rng.normal(0.0, np.sqrt(float(self.d_r)), size=(n, self.d_c))
        return RowVectorSet(rows, vecs, self.d_r, self.d_c)

    def l2pi_norm(self, b):
        return float(matrix_norm(b, "frobenius"))

    def spikiness_norm(self, b):
        return 2.0 * np.sqrt(float(self.d_r)) * matrix_norm(b, "l_pq", p=2, q=np.inf)

    def constants(self):
        # Infimum of ||B||_F^2 / (4 d ||B||_{2,inf}^2): one nonzero row.
        return EnsembleConstants(gamma_min=1.0, gamma_max=1.0, frak_c=9.0, nu0=1.0 / (4.0 * self.d_r))


@dataclass(frozen=True)
class GaussianEnsemble(_EnsembleBase):
    """Dense iid standard normal measurement matrices."""

    kind = "gaussian_ensemble"

    def sample_batch(self, n, rng):
        return DenseSet(rng.standard_normal((n, self.d_r, self.d_c)))

    def l2pi_norm(self, b):
        return float(matrix_norm(b, "frobenius"))

    def spikiness_norm(self, b):
        return 2.0 * matrix_norm(b, "frobenius")

    def constants(self):
        # nu0 = 0.1 is a conservative stated lower bound; the ratio
        # ||B||_F^2 / (2||B||_F)^2 is identically 1/4.
        return EnsembleConstants(gamma_min=1.0, gamma_max=1.0, frak_c=9.0, nu0=0.1)


@dataclass(frozen=True)
class FactoredMeasurement(_EnsembleBase):
    """Rank-one measurements u v^T with independent standard normal
    factor vectors."""

    kind = "factored_measurement"

    def sample_batch(self, n, rng):
        us = rng.standard_normal((n, self.d_r))
        vs = rng.standard_normal((n, self.d_c))
        return RankOneSet(us, vs)

    def l2pi_norm(self, b):
        return float(matrix_norm(b, "frobenius"))

    def spikiness_norm(self, b):
        # Implementable upper bound on the exponential-tail (psi_1) norm
        # of <X, b>; the exact norm is only known within a constant-factor
        # sandwich of the Frobenius norm.
        return 8.0 / np.sqrt(np.log(2.0)) * matrix_norm(b, "frobenius")

    def constants(self):
        return EnsembleConstants(gamma_min=1.0, gamma_max=1.0, frak_c=53.0, nu0=0.1)


EnsembleSpec = Union[MatrixCompletion, MultiTask, GaussianEnsemble, FactoredMeasurement]

_KIND_TO_CLS = {
    "matrix_completion": MatrixCompletion,
    "multi_task": MultiTask,
    "gaussian_ensemble": GaussianEnsemble,
    "factored_measurement": FactoredMeasurement,
}


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """n measurements with responses under the linear trace model."""

    spec: EnsembleSpec
    measurements: MeasurementSet
    y: np.ndarray
    noise_sigma: float
    seed: int

    @property
    def n(self) -> int:
        return len(self.measurements)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.spec, self.measurements.subset(idx), self.y[idx], self.noise_sigma, self.seed)


def apply_operator(ms, b) -> np.ndarray:
    """Apply the sampling operator: component i is <b, X_i>.

    Accepts a MeasurementSet (vectorized) or any sequence of single
    Measurement objects, possibly of mixed kinds.
    """
    b = np.asarray(b, dtype=float)
    if isinstance(ms, MeasurementSet):
        return ms.apply(b)
    return np.array([m.apply(b) for m in ms])


def adjoint_apply(ms, w, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Weighted sum of measurement matrices, sum_i w_i X_i.

    ``shape`` is required when ``ms`` is a plain sequence whose items do
    not determine the ambient dimensions.
    """
    if isinstance(ms, MeasurementSet):
        return ms.adjoint(np.asarray(w, dtype=float))
    w = np.asarray(w, dtype=float)
    if len(w) != len(ms):
        raise ValueError("weight length does not match number of measurements")
    if shape is None:
        raise ValueError("shape is required for a plain measurement sequence")
    out = np.zeros(shape)
    for wi, m in zip(w, ms):
        out += wi * m.densify(*shape)
    return out


def generate_ground_truth(d_r: int, d_c: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Rank-r target: product of two factors with iid standard normal
    entries (d_r x r times r x d_c)."""
    if not 1 <= r <= min(d_r, d_c):
        raise ValueError("rank out of range")
    left = rng.standard_normal((d_r, r))
    right = rng.standard_normal((d_c, r))
    return left @ right.T


def generate_dataset(spec: EnsembleSpec, b_star, n: int, sigma: float, seed: int) -> Dataset:
    """Draw n iid measurements and responses y_i = <B*, X_i> + eps_i with
    eps_i ~ N(0, sigma^2); sigma=0 gives exact noiseless responses."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    b_star = np.asarray(b_star, dtype=float)
    if b_star.shape != spec.shape:
        raise ValueError(f"b_star shape {b_star.shape} does not match spec {spec.shape}")
    rng = stream(seed)
    ms = spec.sample_batch(n, rng)
    y = ms.apply(b_star)
    if sigma > 0:
        y = y + rng.normal(0.0, sigma, size=n)
    return Dataset(spec=spec, measurements=ms, y=y, noise_sigma=float(sigma), seed=int(seed))


def sample_inner_products(
    spec: EnsembleSpec, b, m: int, rng: np.random.Generator, chunk: int = 100_000
) -> np.ndarray:
    """Monte Carlo draws of <X, b> under the ensemble, computed in chunks
    so dense ensembles never materialize all m measurement matrices."""
    b = np.asarray(b, dtype=float)
    out = np.empty(m)
    done = 0
    while done < m:
        take = min(chunk, m - done)
        ms = spec.sample_batch(take, rng)
        out[done : done + take] = ms.apply(b)
        done += take
    return out


# ---------------------------------------------------------------------------
# Dataset cache format
# ---------------------------------------------------------------------------
#
# Datasets serialize to a single .npz archive with a documented flat
# schema: "kind" (ensemble tag), "dims" = [d_r, d_c], "n", "seed",
# "sigma", "y", ensemble options ("xi_mode", "plain_entries" for matrix
# completion), and the measurement arrays for the stored kind
# ("rows"/"cols"/"scales", "rows"/"vecs", "mats", or "us"/"vs").


def save_dataset(ds: Dataset, path) -> None:
    spec = ds.spec
    payload: dict = {
        "kind": np.array(spec.kind),
        "dims": np.array([spec.d_r, spec.d_c], dtype=np.int64),
        "n": np.array(ds.n, dtype=np.int64),
        "seed": np.array(ds.seed, dtype=np.uint64),
        "sigma": np.array(ds.noise_sigma),
        "y": ds.y,
    }
    if isinstance(spec, MatrixCompletion):
        payload["xi_mode"] = np.array(spec.xi_mode)
        payload["plain_entries"] = np.array(spec.plain_entries)
    ms = ds.measurements
    if isinstance(ms, EntrySet):
        payload.update(rows=ms.rows, cols=ms.cols, scales=ms.scales)
    elif isinstance(ms, RowVectorSet):
        payload.update(rows=ms.rows, vecs=ms.vecs)
    elif isinstance(ms, DenseSet):
        payload.update(mats=ms.mats)
    elif isinstance(ms, RankOneSet):
        payload.update(us=ms.us, vs=ms.vs)
    else:
        raise TypeError(f"cannot serialize measurement set {type(ms).__name__}")
    np.savez(path, **payload)


def load_dataset(path) -> Dataset:
    with np.load(path) as z:
        kind = str(z["kind"])
        d_r, d_c = (int(v) for v in z["dims"])
        cls = _KIND_TO_CLS[kind]
        if cls is MatrixCompletion:
            spec: EnsembleSpec = MatrixCompletion(
                d_r, d_c, xi_mode=str(z["xi_mode"]), plain_entries=bool(z["plain_entries"])
            )
        else:
            spec = cls(d_r, d_c)
        if "scales" in z:
            ms: MeasurementSet = EntrySet(z["rows"], z["cols"], z["scales"], d_r, d_c)
        elif "vecs" in z:
            ms = RowVectorSet(z["rows"], z["vecs"], d_r, d_c)
        elif "mats" in z:
            ms = DenseSet(z["mats"])
        else:
            ms = RankOneSet(z["us"], z["vs"])
        return Dataset(
            spec=spec,
            measurements=ms,
            y=np.array(z["y"]),
            noise_sigma=float(z["sigma"]),
            seed=int(z["seed"]),
        )

"""Acceptance suite: one test per criterion, each printing a PASS line
with the measured quantities at the stated tolerances."""

import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import tracereg as tr
from tracereg.experiments import ExperimentConfig, emit_outputs, relative_error, run_figure1, summarize


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def report(criterion: str, detail: str) -> None:
    print(f"PASS {criterion}: {detail}")


def test_criterion_01_goodness_certificate():
    d, r, n, sigma = 30, 2, 1500, 0.5
    spec = tr.MatrixCompletion(d, d, plain_entries=True)
    lam0 = tr.calibrate_lambda0(spec, n, sigma, 3.0, 1000, 0.9, tr.stream(101)).lambda0
    converged = loss_ok = 0
    for trial in range(50):
        b_star = tr.generate_ground_truth(d, d, r, tr.stream(1000 + trial))
        ds = tr.generate_dataset(spec, b_star, n, sigma, seed=2000 + trial)
        est = tr.solve_convex(ds, lam0)
        if est.converged:
            converged += 1
            if tr.check_goodness(est, b_star, ds, spec.spikiness_norm(b_star)).loss_ok:
                loss_ok += 1
    assert converged == 50
    assert loss_ok == 50
    report("criterion 1 (goodness certificate)", f"loss_ok on {loss_ok}/50 converged solves at lam0={lam0:.4g}")


def test_criterion_02_isotropy_all_ensembles():
    d = 10
    specs = [
        tr.MatrixCompletion(d, d),
        tr.MultiTask(d, d),
        tr.GaussianEnsemble(d, d),
        tr.FactoredMeasurement(d, d),
    ]
    worst = (1.0, "")
    for spec in specs:
        rng_b = tr.stream(210)
        for rep in range(5):
            b = rng_b.standard_normal((d, d))
            z = tr.sample_inner_products(spec, b, 1_000_000, tr.stream(220 + rep))
            ratio = float(np.mean(z**2) / np.sum(b**2))
            assert 0.95 <= ratio <= 1.05, f"{spec.kind}: ratio {ratio}"
            if abs(ratio - 1.0) > abs(worst[0] - 1.0):
                worst = (ratio, spec.kind)
    report("criterion 2 (isotropy)", f"worst E<X,B>^2/||B||_F^2 = {worst[0]:.4f} ({worst[1]})")


def test_criterion_03_orlicz_sandwich():
    d = 8
    factored = tr.FactoredMeasurement(d, d)
    rng_b = tr.stream(300)
    ratios = []
    for rep in range(10):
        b = rng_b.standard_normal((d, d))
        fro = tr.matrix_norm(b, "frobenius")
        est = tr.estimate_orlicz(factored, b, 1, 100_000, tr.stream(310 + rep))
        assert fro / math.sqrt(2 * math.log(2)) <= est <= 8.0 * fro / math.sqrt(math.log(2))
        ratios.append(est / fro)
    gaussian = tr.GaussianEnsemble(d, d)
    target = math.sqrt(8.0 / 3.0)
    for rep in range(5):
        b = rng_b.standard_normal((d, d))
        est = tr.estimate_orlicz(gaussian, b, 2, 200_000, tr.stream(330 + rep))
        assert abs(est / tr.matrix_norm(b, "frobenius") - target) <= 0.1 * target
    report(
        "criterion 3 (Orlicz sandwich)",
        f"factored psi1/||B||_F in [{min(ratios):.3f}, {max(ratios):.3f}], gaussian psi2 within 10% of {target:.3f}",
    )


def test_criterion_04_error_scaling(workdir):
    cfg = ExperimentConfig(
        experiment="figure1",
        d=50,
        r=2,
        sigma=1.0,
        n_grid=(1250, 2500, 5000),
        replicates=20,
        seed=20250808,
        estimators=("oracle",),
        calib_reps=1000,
        out_dir=str(workdir / "scaling"),
    )
    rows = summarize(run_figure1(cfg))
    means = {row.n: row.mean for row in rows}
    ns = sorted(means)
    slope = float(np.polyfit([math.log(n) for n in ns], [math.log(means[n]) for n in ns], 1)[0])
    assert -1.3 <= slope <= -0.7
    report("criterion 4 (error scaling)", f"oracle log-log slope {slope:.3f}, means {[f'{means[n]:.4f}' for n in ns]}")


@pytest.fixture(scope="module")
def cv_quality_rows(workdir):
    cfg = ExperimentConfig(
        experiment="figure1",
        d=50,
        r=2,
        sigma=1.0,
        n_grid=(2500,),
        replicates=50,
        seed=20250808,
        estimators=("theory1", "theory2", "theory3", "oracle", "cv"),
        calib_reps=1000,
        out_dir=str(workdir / "cvquality"),
    )
    return {row.estimator: row.mean for row in summarize(run_figure1(cfg))}


def test_criterion_05_cv_close_to_oracle(cv_quality_rows):
    means = cv_quality_rows
    assert means["cv"] <= 1.5 * means["oracle"]
    assert means["cv"] <= means["theory3"]
    report(
        "criterion 5 (cv quality)",
        f"cv {means['cv']:.4f} <= 1.5*oracle {1.5 * means['oracle']:.4f} and <= theory3 {means['theory3']:.4f}",
    )


def test_criterion_05b_estimator_ordering(cv_quality_rows):
    # protocol-level ordering at adequate n: oracle <= cv <= theory3, and
    # the strongest calibrated penalty is never better than the weakest
    means = cv_quality_rows
    assert means["oracle"] <= means["cv"] <= means["theory3"]
    assert means["theory3"] >= means["theory1"]
    report(
        "criterion 5b (ordering)",
        f"oracle {means['oracle']:.4f} <= cv {means['cv']:.4f} <= theory3 {means['theory3']:.4f}",
    )


def test_criterion_06_exact_recovery_phase():
    d, r = 30, 2
    succ_dense = fail_tiny = succ_factored = 0
    n_factored = 10 * r * d * math.ceil(math.log(d))
    for trial in range(20):
        b_star = tr.generate_ground_truth(d, d, r, tr.stream(3000 + trial))
        ds = tr.generate_dataset(tr.GaussianEnsemble(d, d), b_star, 10 * r * d, 0.0, seed=4000 + trial)
        if relative_error(tr.solve_noiseless(ds).b_hat, b_star) < 1e-3:
            succ_dense += 1
        ds = tr.generate_dataset(tr.GaussianEnsemble(d, d), b_star, 58, 0.0, seed=5000 + trial)
        if relative_error(tr.solve_noiseless(ds).b_hat, b_star) > 0.1:
            fail_tiny += 1
        ds = tr.generate_dataset(tr.FactoredMeasurement(d, d), b_star, n_factored, 0.0, seed=6000 + trial)
        if relative_error(tr.solve_noiseless(ds).b_hat, b_star) < 1e-3:
            succ_factored += 1
    assert succ_dense >= 18
    assert fail_tiny >= 18
    assert succ_factored >= 18
    report(
        "criterion 6 (exact recovery phase)",
        f"dense n=600: {succ_dense}/20 recovered; n=58: {fail_tiny}/20 failed; factored n={n_factored}: {succ_factored}/20",
    )


def test_criterion_07_rsc_probe_no_violations():
    d, r = 30, 2
    spec = tr.MatrixCompletion(d, d)
    n = int(20 * d * math.log(d))
    consts = spec.constants()
    lam0 = tr.calibrate_lambda0(spec, n, 1.0, 3.0, 300, 0.9, tr.stream(104)).lambda0
    b_star = tr.generate_ground_truth(d, d, r, tr.stream(105))
    nu = lam0**2 * r / (consts.gamma_min**2 * spec.spikiness_norm(b_star) ** 2)
    ds = tr.generate_dataset(spec, b_star, n, 1.0, seed=106)
    probe = tr.rsc_probe(ds, nu, 72.0 * r, 1000, tr.stream(107))
    assert probe.violation_count == 0
    report(
        "criterion 7 (RSC probe)",
        f"0 violations over 1000 draws (nu={nu:.3g}, min margin {probe.min_margin:.3g})",
    )


def test_criterion_08_lambda0_coverage():
    d, n, sigma = 50, 2000, 1.0
    spec = tr.MatrixCompletion(d, d, plain_entries=True)
    rep = tr.calibrate_lambda0(spec, n, sigma, 3.0, 1000, 0.9, tr.stream(102))
    rng = tr.stream(103)
    hits = 0
    draws = 500
    for _ in range(draws):
        ms = spec.sample_batch(n, rng)
        eps = rng.normal(0.0, sigma, size=n)
        if rep.lambda0 >= 3.0 * tr.operator_norm(ms.adjoint(eps) / n):
            hits += 1
    coverage = hits / draws
    assert 0.85 <= coverage <= 0.95
    report("criterion 8 (lambda0 coverage)", f"coverage {coverage:.3f} over {draws} fresh draws")


def test_criterion_09_oracle_identities():
    rng = tr.stream(900)
    # adjoint identity on every ensemble
    for spec in (tr.MatrixCompletion(9, 9), tr.MultiTask(9, 9), tr.GaussianEnsemble(9, 9), tr.FactoredMeasurement(9, 9)):
        ms = spec.sample_batch(50, tr.stream(901))
        w = rng.standard_normal(50)
        b = rng.standard_normal((9, 9))
        assert abs(tr.trace_inner(ms.adjoint(w), b) - float(w @ ms.apply(b))) < 1e-10 * (1 + abs(float(w @ ms.apply(b))))
    # prox optimality
    m = rng.standard_normal((6, 6))
    x = tr.soft_threshold(m, 0.4)
    base = 0.5 * np.sum((x - m) ** 2) + 0.4 * tr.matrix_norm(x, "nuclear")
    for _ in range(100):
        delta = rng.standard_normal((6, 6))
        delta *= 1e-3 / np.linalg.norm(delta)
        trial = x + delta
        assert 0.5 * np.sum((trial - m) ** 2) + 0.4 * tr.matrix_norm(trial, "nuclear") >= base - 1e-12
    # projection additivity and decomposition
    b = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 8))
    a = rng.standard_normal((8, 8))
    perp = tr.project_perp(b, a)
    par = tr.project_parallel(b, a)
    assert np.linalg.norm(par + perp - a) < 1e-10
    assert tr.matrix_norm(b + perp, "nuclear") == pytest.approx(
        tr.matrix_norm(b, "nuclear") + tr.matrix_norm(perp, "nuclear"), abs=1e-9
    )
    # compatibility inequality on an instance with lam >= 3 ||noise matrix||
    spec = tr.MatrixCompletion(15, 15, plain_entries=True)
    b_star = tr.generate_ground_truth(15, 15, 2, tr.stream(902))
    ds = tr.generate_dataset(spec, b_star, 700, 0.3, seed=903)
    eps = ds.y - ds.measurements.apply(b_star)
    lam = 3.5 * tr.operator_norm(ds.measurements.adjoint(eps) / ds.n)
    est = tr.solve_convex(ds, lam)
    assert est.converged
    delta = est.b_hat - b_star
    assert tr.matrix_norm(tr.project_perp(b_star, delta), "nuclear") <= 5.0 * tr.matrix_norm(
        tr.project_parallel(b_star, delta), "nuclear"
    ) + 1e-6
    report("criterion 9 (oracle identities)", "adjoint, prox, projection, compatibility all within tolerance")


def test_criterion_10_byte_determinism(workdir):
    blobs = []
    for run in ("first", "second"):
        cfg = ExperimentConfig(
            experiment="figure1",
            d=20,
            r=2,
            sigma=1.0,
            n_grid=(300, 600),
            replicates=2,
            seed=99,
            calib_reps=100,
            out_dir=str(workdir / f"det_{run}"),
        )
        records = run_figure1(cfg)
        paths = emit_outputs(records, summarize(records), cfg)
        with open(paths["records"], "rb") as fh:
            rec_bytes = fh.read()
        with open(paths["figure"], "rb") as fh:
            fig_bytes = fh.read()
        ET.fromstring(fig_bytes.decode("utf-8"))  # stays well-formed XML
        blobs.append((rec_bytes, fig_bytes))
    assert blobs[0][0] == blobs[1][0]
    assert blobs[0][1] == blobs[1][1]
    report("criterion 10 (determinism)", f"records.csv ({len(blobs[0][0])} bytes) and figure1.svg byte-identical")

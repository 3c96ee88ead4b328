import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tracereg.cli import load_config_file, main
from tracereg.experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentRecord,
    child_seed,
    emit_outputs,
    read_records_csv,
    relative_error,
    run_exact_recovery,
    run_figure1,
    run_rsc_probe,
    summarize,
)


def small_fig1_cfg(out_dir, **overrides):
    base = dict(
        experiment="figure1",
        d=12,
        r=2,
        sigma=1.0,
        n_grid=(150,),
        replicates=1,
        k_folds=4,
        seed=11,
        calib_reps=60,
        out_dir=str(out_dir),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_validation_errors(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="nope").validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(n_grid=(100, 100)).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(replicates=0).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(estimators=("bogus",)).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(experiment="exact_recovery", sigma=1.0).validate()

    def test_paper_scale_restores_protocol(self):
        cfg = ExperimentConfig(paper_scale=True).validate()
        assert cfg.replicates == 100
        assert cfg.calib_reps == 1000

    def test_child_seed_stable_and_distinct(self):
        assert child_seed(7, "data", 100, 0) == child_seed(7, "data", 100, 0)
        assert child_seed(7, "data", 100, 0) != child_seed(7, "data", 100, 1)
        assert child_seed(7, "data", 100, 0) != child_seed(8, "data", 100, 0)


class TestRunFigure1:
    def test_record_count_one_replicate(self, tmp_path):
        records = run_figure1(small_fig1_cfg(tmp_path))
        assert len(records) == 5
        assert sorted(rec.estimator for rec in records) == ["cv", "oracle", "theory1", "theory2", "theory3"]
        assert all(rec.relative_error >= 0 for rec in records)

    def test_byte_identical_outputs_across_runs(self, tmp_path):
        outs = []
        for run in ("a", "b"):
            out_dir = tmp_path / run
            cfg = small_fig1_cfg(out_dir, replicates=2)
            records = run_figure1(cfg)
            paths = emit_outputs(records, summarize(records), cfg)
            outs.append(paths)
        for key in ("records", "figure", "summary"):
            with open(outs[0][key], "rb") as fa, open(outs[1][key], "rb") as fb:
                assert fa.read() == fb.read()

    def test_calibration_cache_reused(self, tmp_path):
        cfg = small_fig1_cfg(tmp_path)
        first = run_figure1(cfg)
        cache_files = [p for p in os.listdir(tmp_path) if p.startswith("calib_")]
        assert len(cache_files) == 1
        second = run_figure1(cfg)
        assert [rec.relative_error for rec in first] == [rec.relative_error for rec in second]

    def test_mean_error_decreases_with_n(self, tmp_path):
        cfg = small_fig1_cfg(
            tmp_path, n_grid=(150, 300, 600), replicates=4, estimators=("oracle", "cv"), seed=3
        )
        rows = summarize(run_figure1(cfg))
        for name in ("oracle", "cv"):
            means = [row.mean for row in rows if row.estimator == name]
            assert means[0] > means[1] > means[2]


class TestRunExactRecovery:
    def test_success_on_determined_system(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="exact_recovery",
            ensemble="gaussian_ensemble",
            d=8,
            r=2,
            sigma=0.0,
            n_grid=(64,),
            replicates=2,
            seed=5,
            out_dir=str(tmp_path),
        )
        records = run_exact_recovery(cfg)
        assert len(records) == 2
        assert all(rec.success for rec in records)

    def test_noise_rejected(self, tmp_path):
        cfg = ExperimentConfig(experiment="exact_recovery", sigma=0.5, out_dir=str(tmp_path))
        with pytest.raises(ConfigError):
            run_exact_recovery(cfg)


class TestSummarize:
    def test_single_record(self):
        rec = ExperimentRecord("cv", 100, 0, 0.25, 1.0, True, 7)
        rows = summarize([rec])
        assert rows[0].mean == 0.25 and rows[0].two_se == 0.0 and rows[0].count == 1

    def test_two_record_oracle(self):
        recs = [
            ExperimentRecord("cv", 100, 0, 1.0, 1.0, True, 7),
            ExperimentRecord("cv", 100, 1, 3.0, 1.0, True, 7),
        ]
        row = summarize(recs)[0]
        # sample std sqrt(2), so 2 * sqrt(2)/sqrt(2) = 2
        assert row.mean == pytest.approx(2.0)
        assert row.two_se == pytest.approx(2.0)

    def test_groups_partition_records(self):
        recs = [
            ExperimentRecord(est, n, rep, 0.1, 1.0, True, 7)
            for est in ("cv", "oracle")
            for n in (100, 200)
            for rep in range(3)
        ]
        rows = summarize(recs)
        assert sum(row.count for row in rows) == len(recs)
        assert len(rows) == 4

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestEmitOutputs:
    @pytest.fixture()
    def outputs(self, tmp_path):
        cfg = small_fig1_cfg(tmp_path, replicates=2, n_grid=(150, 300))
        records = run_figure1(cfg)
        summary = summarize(records)
        paths = emit_outputs(records, summary, cfg)
        return records, summary, paths, cfg

    def test_csv_round_trip(self, outputs):
        records, _, paths, _ = outputs
        assert read_records_csv(paths["records"]) == records

    def test_summary_row_count(self, outputs):
        _, summary, paths, cfg = outputs
        assert len(summary) == len(cfg.estimators) * len(cfg.n_grid)
        with open(paths["summary"], encoding="utf-8") as fh:
            assert len(fh.read().splitlines()) == len(summary) + 1

    def test_svg_is_valid_xml_with_one_polyline_per_estimator(self, outputs):
        _, _, paths, cfg = outputs
        root = ET.parse(paths["figure"]).getroot()
        polylines = root.findall(".//{http://www.w3.org/2000/svg}polyline")
        assert len(polylines) == len(cfg.estimators)

    def test_config_echo_contains_resolved_values(self, outputs):
        _, _, paths, cfg = outputs
        with open(paths["config"], encoding="utf-8") as fh:
            echo = dict(line.split("=", 1) for line in fh.read().splitlines())
        assert echo["d"] == str(cfg.d)
        assert echo["n_grid"] == "150,300"
        assert echo["seed"] == str(cfg.seed)


class TestRscProbeExperiment:
    def test_report_fields(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="rsc_probe",
            d=10,
            r=2,
            sigma=0.5,
            n_grid=(400,),
            trials=20,
            calib_reps=40,
            seed=2,
            out_dir=str(tmp_path),
        )
        report = run_rsc_probe(cfg)
        assert report["eta"] == 144.0
        assert report["violation_count"] >= 0
        assert report["beta_emp"] >= 0.0
        assert report["nu"] > 0.0


class TestCli:
    def test_figure1_end_to_end(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "figure1",
                "--d", "10", "--r", "1", "--n", "120",
                "--replicates", "1", "--k-folds", "3",
                "--seed", "4", "--calib-reps", "40",
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        assert (out / "records.csv").exists()
        assert (out / "figure1.svg").exists()

    def test_config_file_with_cli_override(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("d=10\nr=1\nn_grid=120\nreplicates=1\nk_folds=3\nseed=9\ncalib_reps=40\n# comment\n")
        parsed = load_config_file(str(cfg_file))
        assert parsed["d"] == 10 and parsed["n_grid"] == (120,)
        out = tmp_path / "out"
        code = main(["figure1", "--config", str(cfg_file), "--estimators", "theory1", "--out-dir", str(out)])
        assert code == 0
        with open(out / "config.echo", encoding="utf-8") as fh:
            echo = dict(line.split("=", 1) for line in fh.read().splitlines())
        assert echo["estimators"] == "theory1"  # CLI beats file default
        assert echo["seed"] == "9"  # file beats built-in default

    def test_config_error_exit_code(self, tmp_path):
        code = main(["exact-recovery", "--sigma", "1.0", "--d", "8", "--n", "64", "--out-dir", str(tmp_path)])
        assert code == 2

    def test_bad_config_file_exit_code(self, tmp_path):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("nonsense_key=1\n")
        assert main(["figure1", "--config", str(cfg_file)]) == 2

    def test_io_error_exit_code(self):
        code = main(
            [
                "calibration",
                "--d", "6", "--n", "50", "--sigma", "0.5",
                "--calib-reps", "20", "--out-dir", "/dev/null/cannot",
            ]
        )
        assert code == 3

    def test_calibration_json_output(self, tmp_path):
        out = tmp_path / "cal"
        code = main(
            [
                "calibration",
                "--d", "6", "--n", "50", "--sigma", "0.5",
                "--calib-reps", "20", "--out-dir", str(out),
            ]
        )
        assert code == 0
        import json

        with open(out / "calibration.json", encoding="utf-8") as fh:
            payload = json.load(fh)
        assert payload["lambda0"] > 0
        assert len(payload["samples"]) == 20


def test_relative_error_definition():
    b_star = np.array([[2.0, 0.0], [0.0, 0.0]])
    b_hat = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert relative_error(b_hat, b_star) == pytest.approx(0.25)

"""End-to-end tests for the experiment runners and the command-line interface.

All runs here use heavily reduced settings (short signals, few grid cells,
small step budgets) so the whole file stays fast while still exercising the
real drivers, CSV/manifest output, and the CLI wiring.
"""

import json
import math
import os
from dataclasses import replace

import numpy as np
import pytest

from sinugrad.errors import SampleFileError
from sinugrad.experiments.cli import main
from sinugrad.experiments.config import (
    DESK,
    FIT,
    LANDSCAPE,
    MULTI,
    SINGLE,
    OptimizerSettings,
    config_hash,
    default_config,
    validate_config,
)
from sinugrad.experiments.io import read_csv
from sinugrad.experiments.runner import (
    run_experiment,
    run_fit,
    run_landscape,
    run_multi,
    run_single,
)

TIME_MSE = "time-mse"
DFT_MAG_MSE = "dft-mag-mse"


def tiny_landscape(out, lengths=(16, 32), grid_points=1000):
    cfg = default_config(LANDSCAPE, DESK)
    settings = replace(cfg.settings, lengths=lengths, grid_points=grid_points)
    return validate_config(replace(cfg, settings=settings, out=str(out)))


def tiny_single(out, *, freq_steps=2, seeds=2, steps=400, length=64,
                snr=20.0, jobs=1, seed=0):
    cfg = default_config(SINGLE, DESK)
    settings = replace(
        cfg.settings, length=length, freq_steps=freq_steps,
        freq_min=0.2 * math.pi, freq_max=0.7 * math.pi,
        snr_steps=1, snr_min=snr, snr_max=snr,
        seeds=seeds, include_noiseless=True,
    )
    optimizer = OptimizerSettings(steps=steps, learning_rate=0.02)
    return validate_config(replace(
        cfg, settings=settings, optimizer=optimizer, out=str(out),
        jobs=jobs, seed=seed,
    ))


def tiny_multi(out, *, draws=3, control_draws=5, steps=300, jobs=1):
    cfg = default_config(MULTI, DESK)
    settings = replace(
        cfg.settings, length=64, component_counts=(2,),
        draws=draws, control_draws=control_draws, losses=(TIME_MSE,),
    )
    optimizer = OptimizerSettings(steps=steps, learning_rate=0.02)
    return validate_config(replace(
        cfg, settings=settings, optimizer=optimizer, out=str(out), jobs=jobs,
    ))


def tiny_fit(out, *, components=2, steps=300, target_file=None, model="surrogate"):
    cfg = default_config(FIT, DESK)
    settings = replace(
        cfg.settings, length=64, components=components, model=model,
        target_file=target_file,
    )
    optimizer = OptimizerSettings(steps=steps, learning_rate=0.02)
    return validate_config(replace(
        cfg, settings=settings, optimizer=optimizer, out=str(out), trace_every=50,
    ))


class TestRunLandscape:
    def test_row_count_and_files(self, tmp_path):
        cfg = tiny_landscape(tmp_path / "land")
        res = run_landscape(cfg)
        assert len(res.rows) == 2 * 3 * 1000
        assert os.path.exists(res.summary_path)
        assert os.path.exists(res.manifest_path)
        assert res.aggregates_path is None
        assert res.trace_files == []

    def test_three_curves_per_length(self, tmp_path):
        res = run_landscape(tiny_landscape(tmp_path / "land"))
        for n in (16, 32):
            curves = {r["loss"] for r in res.rows if r["n"] == n}
            assert curves == {TIME_MSE, "time-mae", DFT_MAG_MSE}

    def test_global_minimum_sits_at_target(self, tmp_path):
        res = run_landscape(tiny_landscape(tmp_path / "land"))
        spacing = math.pi / 999
        target = 0.3 * math.pi
        for n in (16, 32):
            for curve in (TIME_MSE, "time-mae", DFT_MAG_MSE):
                rows = [r for r in res.rows if r["n"] == n and r["loss"] == curve]
                best = min(rows, key=lambda r: r["value"])
                assert abs(best["omega_hat"] - target) <= spacing, (n, curve)

    def test_values_finite_and_nonnegative(self, tmp_path):
        res = run_landscape(tiny_landscape(tmp_path / "land", lengths=(16,)))
        values = np.array([r["value"] for r in res.rows])
        assert np.all(np.isfinite(values))
        assert np.all(values >= 0.0)

    def test_wrong_experiment_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run_landscape(tiny_single(tmp_path / "x"))


class TestRunSingle:
    def test_rows_aggregates_and_traces(self, tmp_path):
        cfg = tiny_single(tmp_path / "single")
        res = run_single(cfg)
        # 2 losses x 2 freqs x (1 SNR + noiseless) x 2 seeds.
        assert len(res.rows) == 16
        assert all(r["status"] == "ok" for r in res.rows)
        assert len(res.aggregates) == 4
        assert len(res.trace_files) == 16
        keys = [(r["loss"], r["snr_index"], r["freq_index"], r["seed_index"])
                for r in res.rows]
        assert keys == sorted(keys)
        for name in res.trace_files:
            assert os.path.exists(os.path.join(res.out_dir, name))

    def test_trace_contents(self, tmp_path):
        cfg = tiny_single(tmp_path / "single", freq_steps=1, seeds=1)
        res = run_single(cfg)
        header, rows = read_csv(os.path.join(res.out_dir, res.trace_files[0]))
        assert header == ["step", "loss", "metric_db"]
        assert [int(r[0]) for r in rows] == [0, 100, 200, 300, 400]

    def test_aggregates_match_recomputation(self, tmp_path):
        res = run_single(tiny_single(tmp_path / "single"))
        for agg in res.aggregates:
            group = [r for r in res.rows
                     if r["loss"] == agg["loss"] and r["snr_index"] == agg["snr_index"]]
            ok = [r for r in group if r["status"] == "ok"]
            assert agg["runs"] == len(group)
            assert agg["failures"] == len(group) - len(ok)
            errors = np.array([r["freq_sq_error"] for r in ok])
            assert agg["mean_db"] == pytest.approx(10 * np.log10(errors.mean()), abs=1e-12)
            assert agg["median_db"] == pytest.approx(10 * np.log10(np.median(errors)), abs=1e-12)

    def test_noiseless_cells_have_no_crlb(self, tmp_path):
        res = run_single(tiny_single(tmp_path / "single", freq_steps=1, seeds=1))
        noiseless = [r for r in res.rows if math.isinf(r["snr_db"])]
        noisy = [r for r in res.rows if not math.isinf(r["snr_db"])]
        assert noiseless and noisy
        assert all(r["crlb_var"] is None for r in noiseless)
        assert all(r["crlb_var"] > 0 for r in noisy)

    def test_noiseless_fit_converges(self, tmp_path):
        cfg = tiny_single(tmp_path / "single", freq_steps=1, seeds=1,
                          steps=3000, length=128, snr=100.0)
        res = run_single(cfg)
        row = next(r for r in res.rows
                   if r["loss"] == TIME_MSE and math.isinf(r["snr_db"]))
        assert row["freq_sq_error"] < 1e-6, row["freq_sq_error"]

    def test_shared_init_across_cells(self, tmp_path):
        res = run_single(tiny_single(tmp_path / "single"))
        by_seed = {}
        for r in res.rows:
            by_seed.setdefault(r["seed_index"], set()).add((r["init_z_re"], r["init_z_im"]))
        for inits in by_seed.values():
            assert len(inits) == 1
        assert len({next(iter(v)) for v in by_seed.values()}) == len(by_seed)


class TestRunMulti:
    def test_rows_and_aggregates(self, tmp_path):
        res = run_multi(tiny_multi(tmp_path / "multi"))
        # 3 draws x 2 models x 1 loss fits, plus 5 controls.
        assert len(res.rows) == 11
        fits = [r for r in res.rows if r["model"] != "random"]
        controls = [r for r in res.rows if r["model"] == "random"]
        assert len(fits) == 6
        assert len(controls) == 5
        assert all(r["status"] == "ok" for r in res.rows)
        assert all(r["loss"] is None for r in controls)
        agg_index = {(a["model"], a["loss"]): a for a in res.aggregates}
        assert set(agg_index) == {
            ("surrogate", TIME_MSE), ("baseline", TIME_MSE), ("random", None),
        }
        assert agg_index[("surrogate", TIME_MSE)]["runs"] == 3
        assert agg_index[("random", None)]["runs"] == 5

    def test_aggregates_match_recomputation(self, tmp_path):
        res = run_multi(tiny_multi(tmp_path / "multi"))
        for agg in res.aggregates:
            scores = np.array([
                r["final_metric_db"] for r in res.rows
                if r["model"] == agg["model"] and r.get("loss") == agg["loss"]
                and r["status"] == "ok"
            ])
            assert agg["mean_metric_db"] == pytest.approx(scores.mean(), abs=1e-12)
            assert agg["median_metric_db"] == pytest.approx(np.median(scores), abs=1e-12)

    def test_surrogate_rows_carry_estimates(self, tmp_path):
        res = run_multi(tiny_multi(tmp_path / "multi"))
        for r in res.rows:
            if r["model"] != "surrogate":
                continue
            assert len(r["final_freqs"]) == 2
            assert len(r["final_decays"]) == 2
            if r["recovered_products"] is not None:
                assert len(r["recovered_products"]) == 2

    def test_fit_improves_on_init(self, tmp_path):
        res = run_multi(tiny_multi(tmp_path / "multi"))
        surrogate = [r for r in res.rows if r["model"] == "surrogate"]
        assert np.median([r["final_metric_db"] for r in surrogate]) < \
            np.median([r["init_metric_db"] for r in surrogate])

    def test_control_rows_in_csv_have_empty_loss(self, tmp_path):
        res = run_multi(tiny_multi(tmp_path / "multi"))
        header, rows = read_csv(res.summary_path)
        col = {name: i for i, name in enumerate(header)}
        controls = [r for r in rows if r[col["model"]] == "random"]
        assert controls
        assert all(r[col["loss"]] == "" for r in controls)
        assert all(r[col["trace_id"]] == "" for r in controls)


class TestRunFit:
    def test_synthetic_target(self, tmp_path):
        res = run_fit(tiny_fit(tmp_path / "fit"))
        assert len(res.rows) == 1
        row = res.rows[0]
        assert row["status"] == "ok"
        assert row["source"] == "synthetic"
        assert len(row["target_freqs"]) == 2
        assert len(row["final_freqs"]) == 2
        assert isinstance(row["plateau_drops"], int)
        assert len(res.trace_files) == 1
        header, trace_rows = read_csv(os.path.join(res.out_dir, res.trace_files[0]))
        assert [int(r[0]) for r in trace_rows] == [0, 50, 100, 150, 200, 250, 300]
        manifest = json.load(open(res.manifest_path))
        assert manifest["plateau_drops"] == row["plateau_drops"]

    def test_binary_target_file(self, tmp_path):
        n = np.arange(96, dtype=np.float64)
        samples = 0.8 * np.cos(0.25 * math.pi * n)
        path = tmp_path / "target.f64"
        samples.astype("<f8").tofile(path)
        res = run_fit(tiny_fit(tmp_path / "fit", target_file=str(path)))
        row = res.rows[0]
        assert row["status"] == "ok"
        assert row["source"] == str(path)
        assert row["n"] == 96
        assert row["target_freqs"] is None
        header, rows = read_csv(res.summary_path)
        col = {name: i for i, name in enumerate(header)}
        assert rows[0][col["target_freqs"]] == ""
        assert rows[0][col["n"]] == "96"

    def test_text_target_file(self, tmp_path):
        path = tmp_path / "target.txt"
        n = np.arange(64)
        path.write_text("".join(f"{float(v)!r}\n" for v in np.cos(0.3 * n)))
        res = run_fit(tiny_fit(tmp_path / "fit", components=1, target_file=str(path)))
        assert res.rows[0]["status"] == "ok"
        assert res.rows[0]["n"] == 64

    def test_baseline_model(self, tmp_path):
        res = run_fit(tiny_fit(tmp_path / "fit", model="baseline"))
        row = res.rows[0]
        assert row["status"] == "ok"
        assert row["model"] == "baseline"
        assert len(row["final_freqs"]) == 2
        assert row.get("final_decays") is None
        assert row.get("recovered_alphas") is None

    def test_missing_target_file(self, tmp_path):
        cfg = tiny_fit(tmp_path / "fit", target_file=str(tmp_path / "absent.f64"))
        with pytest.raises(SampleFileError):
            run_fit(cfg)

    def test_dispatcher_routes_by_experiment(self, tmp_path):
        res = run_experiment(tiny_fit(tmp_path / "fit"))
        assert res.rows[0]["experiment"] == "fit"


class TestManifest:
    def test_contents(self, tmp_path):
        cfg = tiny_single(tmp_path / "single", freq_steps=1, seeds=1, steps=50)
        res = run_single(cfg)
        manifest = json.load(open(res.manifest_path))
        assert manifest["experiment"] == "single"
        assert manifest["scale"] == "desk"
        assert manifest["config_hash"] == config_hash(cfg)
        assert manifest["rows"] == len(res.rows)
        assert manifest["trace_files"] == len(res.trace_files)
        assert manifest["numpy_version"] == np.__version__
        assert manifest["wall_time_seconds"] >= 0.0
        assert manifest["config"]["optimizer"]["steps"] == 50


class TestReproducibility:
    def test_single_reruns_are_byte_identical(self, tmp_path):
        first = run_single(tiny_single(tmp_path / "a", freq_steps=1, seeds=1))
        second = run_single(tiny_single(tmp_path / "b", freq_steps=1, seeds=1))
        assert open(first.summary_path, "rb").read() == open(second.summary_path, "rb").read()
        assert open(first.aggregates_path, "rb").read() == open(second.aggregates_path, "rb").read()
        for name in first.trace_files:
            a = open(os.path.join(first.out_dir, name), "rb").read()
            b = open(os.path.join(second.out_dir, name), "rb").read()
            assert a == b, name

    def test_worker_count_does_not_change_output(self, tmp_path):
        serial = run_single(tiny_single(tmp_path / "s1", jobs=1))
        threaded = run_single(tiny_single(tmp_path / "s2", jobs=2))
        assert open(serial.summary_path, "rb").read() == open(threaded.summary_path, "rb").read()

    def test_multi_reruns_are_byte_identical(self, tmp_path):
        first = run_multi(tiny_multi(tmp_path / "a"))
        second = run_multi(tiny_multi(tmp_path / "b", jobs=2))
        assert open(first.summary_path, "rb").read() == open(second.summary_path, "rb").read()
        assert open(first.aggregates_path, "rb").read() == open(second.aggregates_path, "rb").read()

    def test_seed_changes_every_data_row(self, tmp_path):
        base = run_single(tiny_single(tmp_path / "a", freq_steps=1, seeds=1))
        moved = run_single(tiny_single(tmp_path / "b", freq_steps=1, seeds=1, seed=7))
        assert open(base.summary_path, "rb").read() != open(moved.summary_path, "rb").read()


def write_yaml(path, text):
    path.write_text(text)
    return str(path)


class TestCli:
    def test_landscape_run(self, tmp_path, capsys):
        yaml_path = write_yaml(tmp_path / "cfg.yaml",
                               "lengths: [16]\ngrid_points: 1000\n")
        out = tmp_path / "out"
        code = main(["landscape", "--config", yaml_path, "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        assert "3000 rows" in captured.out
        assert os.path.exists(out / "summary.csv")
        assert os.path.exists(out / "manifest.json")

    def test_single_with_loss_restriction(self, tmp_path, capsys):
        yaml_path = write_yaml(tmp_path / "cfg.yaml", "\n".join([
            "length: 64", "freq_steps: 1", "snr_steps: 1",
            "snr_min: 30", "snr_max: 30", "seeds: 1",
            "include_noiseless: false",
            "optimizer: {steps: 100, learning_rate: 0.02}", "",
        ]))
        out = tmp_path / "out"
        code = main(["single", "--config", yaml_path, "--out", str(out),
                     "--loss", "time-mse"])
        assert code == 0
        header, rows = read_csv(str(out / "summary.csv"))
        col = {name: i for i, name in enumerate(header)}
        assert len(rows) == 1
        assert rows[0][col["loss"]] == "time-mse"

    def test_fit_with_target_file(self, tmp_path, capsys):
        samples = np.cos(0.4 * np.arange(80))
        target = tmp_path / "target.f64"
        samples.astype("<f8").tofile(target)
        yaml_path = write_yaml(tmp_path / "cfg.yaml", "\n".join([
            "components: 1",
            "optimizer: {steps: 200, learning_rate: 0.02}", "",
        ]))
        out = tmp_path / "out"
        code = main(["fit", "--config", yaml_path, "--out", str(out), str(target)])
        assert code == 0
        header, rows = read_csv(str(out / "summary.csv"))
        col = {name: i for i, name in enumerate(header)}
        assert rows[0][col["source"]] == str(target)
        assert rows[0][col["n"]] == "80"

    def test_missing_target_file_is_reported(self, tmp_path, capsys):
        code = main(["fit", "--out", str(tmp_path / "out"),
                     str(tmp_path / "absent.f64")])
        captured = capsys.readouterr()
        assert code == 2
        assert captured.err.startswith("error:")

    def test_bad_config_is_reported(self, tmp_path, capsys):
        yaml_path = write_yaml(tmp_path / "cfg.yaml", "not_a_key: 1\n")
        code = main(["single", "--config", yaml_path, "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 2
        assert captured.err.startswith("error:")
        assert "not_a_key" in captured.err

    def test_summarize_single_matches_runner_aggregates(self, tmp_path, capsys):
        cfg = tiny_single(tmp_path / "run")
        res = run_single(cfg)
        code = main(["summarize", res.out_dir])
        captured = capsys.readouterr()
        assert code == 0
        recomputed_path = captured.out.strip()
        assert recomputed_path.endswith("aggregates_recomputed.csv")
        header, rows = read_csv(recomputed_path)
        col = {name: i for i, name in enumerate(header)}
        table = {
            (r[col["loss"]], int(r[col["snr_index"]])):
                (r[col["mean_db"]], r[col["median_db"]])
            for r in rows
        }
        for agg in res.aggregates:
            mean_cell, median_cell = table[(agg["loss"], agg["snr_index"])]
            assert float(mean_cell) == agg["mean_db"]
            assert float(median_cell) == agg["median_db"]

    def test_summarize_multi(self, tmp_path, capsys):
        res = run_multi(tiny_multi(tmp_path / "run"))
        code = main(["summarize", res.out_dir])
        captured = capsys.readouterr()
        assert code == 0
        header, rows = read_csv(captured.out.strip())
        col = {name: i for i, name in enumerate(header)}
        table = {
            (int(r[col["k"]]), r[col["model"]], r[col["loss"]]):
                float(r[col["median_metric_db"]])
            for r in rows
        }
        for agg in res.aggregates:
            key = (agg["k"], agg["model"], agg["loss"] or "")
            assert table[key] == agg["median_metric_db"]

    def test_summarize_missing_directory(self, tmp_path, capsys):
        code = main(["summarize", str(tmp_path / "nowhere")])
        captured = capsys.readouterr()
        assert code == 2
        assert captured.err.startswith("error:")

    def test_summarize_rejects_landscape_runs(self, tmp_path, capsys):
        res = run_landscape(tiny_landscape(tmp_path / "land", lengths=(16,)))
        code = main(["summarize", res.out_dir])
        captured = capsys.readouterr()
        assert code == 2
        assert "landscape" in captured.err

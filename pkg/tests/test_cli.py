import csv
import hashlib
import json

import numpy as np
import pytest

from impit.cli import EXIT_OK, EXIT_VALIDATION, main
from impit.timeline import write_signal

from conftest import monthly_signal
from fixtures import planted_dataset


@pytest.fixture
def soi_csv(tmp_path, soi_like):
    path = tmp_path / "soi.csv"
    write_signal(soi_like, path)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestEpisodesCommand:
    def test_sustained_high_runs(self, tmp_path, soi_csv, capsys):
        out = tmp_path / "out"
        rc = main([
            "episodes", "--signal", str(soi_csv), "--threshold", "8",
            "--direction", "up", "--min-duration", "5",
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        rows = read_rows(out / "episodes.csv")
        assert all(int(r["n"]) >= 5 for r in rows)
        assert len(rows) >= 3  # the injected sustained runs

    def test_down_direction(self, tmp_path, soi_csv):
        out = tmp_path / "out"
        rc = main([
            "episodes", "--signal", str(soi_csv), "--threshold", "-8",
            "--direction", "down", "--min-duration", "5",
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK

    def test_missing_signal_file(self, tmp_path):
        rc = main([
            "episodes", "--signal", str(tmp_path / "nope.csv"),
            "--threshold", "8", "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION

    def test_min_duration_zero_rejected(self, tmp_path, soi_csv):
        rc = main([
            "episodes", "--signal", str(soi_csv), "--threshold", "8",
            "--min-duration", "0", "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION

    def test_manifest_and_config_echo(self, tmp_path, soi_csv):
        out = tmp_path / "out"
        main([
            "episodes", "--signal", str(soi_csv), "--threshold", "8",
            "--out-dir", str(out),
        ])
        manifest = json.loads((out / "manifest.json").read_text())
        (entry,) = manifest["artifacts"]
        assert entry["name"] == "episodes.csv"
        digest = hashlib.sha256((out / "episodes.csv").read_bytes()).hexdigest()
        assert entry["sha256"] == digest
        echo = json.loads((out / "config_echo.json").read_text())
        assert echo["threshold"] == 8.0
        assert echo["direction"] == "up"

    def test_config_file_flag_precedence(self, tmp_path, soi_csv):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({
            "signal": str(soi_csv), "threshold": 8.0, "min_duration": 5,
        }))
        out = tmp_path / "out"
        rc = main([
            "episodes", "--config", str(conf), "--min-duration", "7",
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        rows = read_rows(out / "episodes.csv")
        assert all(int(r["n"]) >= 7 for r in rows)  # flag beat the config

    def test_unknown_config_key(self, tmp_path, soi_csv):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"signal": str(soi_csv), "thresold": 8.0}))
        rc = main(["episodes", "--config", str(conf), "--out-dir", str(tmp_path / "o")])
        assert rc == EXIT_VALIDATION


class TestIndexCommand:
    def test_trailing_mean_configuration(self, tmp_path, rng):
        # one singleton episode per observation with intensity value/12,
        # neutral dampening and m=12 reproduces the trailing 12-step mean
        values = rng.normal(0, 5, size=60)
        sig = monthly_signal(values)
        eps_path = tmp_path / "eps.csv"
        with open(eps_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["start", "end", "intensity_mean"])
            for t, v in zip(sig.timestamps, values):
                w.writerow([t.strftime("%Y-%m"), t.strftime("%Y-%m"),
                            repr(float(v) / 12)])
        anchors = ",".join(t.strftime("%Y-%m") for t in sig.timestamps[11:])
        out = tmp_path / "out"
        rc = main([
            "index", "--episodes", str(eps_path), "--resolution", "monthly",
            "--m", "12", "--a", "0", "--b", "0",
            "--intensity", "precomputed", "--anchors", anchors,
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        rows = read_rows(out / "index.csv")
        for i, row in enumerate(rows):
            assert float(row["value"]) == pytest.approx(
                values[i : i + 12].mean(), rel=1e-12
            )

    def test_missing_m(self, tmp_path, soi_csv):
        rc = main([
            "index", "--signal", str(soi_csv), "--threshold", "8",
            "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION

    def test_explain_writes_diagnostics(self, tmp_path, soi_csv):
        out = tmp_path / "out"
        rc = main([
            "index", "--signal", str(soi_csv), "--threshold", "8",
            "--m", "24", "--a", "1", "--b", "2", "--c", "0.4",
            "--anchors", "yearly:1995:2015", "--explain",
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        assert (out / "diagnostics.csv").exists()
        # per-anchor contribution terms sum to the index value
        diag = read_rows(out / "diagnostics.csv")
        idx_rows = read_rows(out / "index.csv")
        totals = {}
        for row in diag:
            totals[row["anchor"]] = totals.get(row["anchor"], 0.0) + float(row["term"])
        for row in idx_rows:
            if int(row["K"]):
                assert totals[row["anchor"]] == pytest.approx(
                    float(row["value"]), rel=1e-9
                )

    def test_zero_index_warning(self, tmp_path, capsys):
        sig = monthly_signal([9.0, 9.0, 0, 0, 0, 0] + [0.0] * 18)
        path = tmp_path / "sig.csv"
        write_signal(sig, path)
        out = tmp_path / "out"
        rc = main([
            "index", "--signal", str(path), "--threshold", "8", "--m", "12",
            "--timing-season", "08-01:08-31", "--d", "1",
            "--anchors", "1991-12", "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        assert "identically zero" in capsys.readouterr().err

    def test_anchor_before_signal_rejected(self, tmp_path, soi_csv):
        rc = main([
            "index", "--signal", str(soi_csv), "--threshold", "8", "--m", "12",
            "--anchors", "1950-12", "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION


class TestCalibrateCommand:
    @pytest.fixture
    def planted_files(self, tmp_path):
        signal, episodes, schedule, response = planted_dataset(0)
        sig_path = tmp_path / "signal.csv"
        write_signal(signal, sig_path)
        resp_path = tmp_path / "response.csv"
        with open(resp_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "value"])
            for t, v in zip(response.timestamps, response.values):
                w.writerow([t.strftime("%Y-%m"), repr(float(v))])
        anchors = ",".join(t.strftime("%Y-%m") for t in schedule.anchors)
        return sig_path, resp_path, anchors

    def test_stage3_requires_season(self, tmp_path, planted_files):
        sig, resp, anchors = planted_files
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--stage", "3", "--m-list", "30", "--response", str(resp),
            "--anchors", anchors, "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION

    def test_missing_response(self, tmp_path, planted_files):
        sig, _, anchors = planted_files
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--stage", "1", "--m-list", "12", "--anchors", anchors,
            "--out-dir", str(tmp_path / "o"),
        ])
        assert rc == EXIT_VALIDATION

    def test_stage3_recovers_planted_cell(self, tmp_path, planted_files):
        sig, resp, anchors = planted_files
        out = tmp_path / "out"
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--season", "04-01:05-31",
            "--stage", "3", "--m-list", "30", "--a", "0",
            "--calibration-season", "04-01:05-31",
            "--response", str(resp), "--anchors", anchors,
            "--select", "max_abs_r", "--rationale", "grid sweep on planted data",
            "--jobs", "2", "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        sel = json.loads((out / "selection.json").read_text())
        assert sel["configuration"] == {"m": 30, "a": 0.0, "b": 3.0, "c": 0.4, "d": 1.0}
        assert sel["stable"] is True
        assert sel["rationale"] == "grid sweep on planted data"

    def test_jobs_byte_identical_maps(self, tmp_path, planted_files):
        sig, resp, anchors = planted_files
        outs = []
        for jobs in ("1", "4"):
            out = tmp_path / f"out{jobs}"
            rc = main([
                "calibrate", "--signal", str(sig), "--threshold", "8",
                "--stage", "2", "--m-list", "24,30", "--a", "0",
                "--response", str(resp), "--anchors", anchors,
                "--jobs", jobs, "--out-dir", str(out),
            ])
            assert rc == EXIT_OK
            outs.append((out / "map.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_jobs_env_cap(self, tmp_path, planted_files, monkeypatch):
        monkeypatch.setenv("IMPIT_MAX_JOBS", "1")
        sig, resp, anchors = planted_files
        out = tmp_path / "out"
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--stage", "1", "--m-list", "12", "--a-grid", "0,1",
            "--response", str(resp), "--anchors", anchors,
            "--jobs", "8", "--out-dir", str(out),
        ])
        assert rc == EXIT_OK

    def test_manual_selection(self, tmp_path, planted_files):
        sig, resp, anchors = planted_files
        out = tmp_path / "out"
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--season", "04-01:05-31",
            "--stage", "3", "--m-list", "30", "--a", "0",
            "--calibration-season", "04-01:05-31",
            "--response", str(resp), "--anchors", anchors,
            "--select", "manual",
            "--manual-config", '{"m":30,"a":0,"b":3,"c":0.4,"d":1}',
            "--rationale", "chosen for agreement with prior work",
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        sel = json.loads((out / "selection.json").read_text())
        assert sel["rule"] == "manual"
        assert sel["configuration"]["b"] == 3

    def test_map_csv_grid_size(self, tmp_path, planted_files):
        sig, resp, anchors = planted_files
        out = tmp_path / "out"
        rc = main([
            "calibrate", "--signal", str(sig), "--threshold", "8",
            "--stage", "1", "--m-list", "12,24,36",
            "--response", str(resp), "--anchors", anchors,
            "--out-dir", str(out),
        ])
        assert rc == EXIT_OK
        rows = read_rows(out / "map.csv")
        assert len(rows) == 3 * 21


class TestStatsCommand:
    def test_association_report(self, tmp_path, planted_dataset_files=None):
        signal, episodes, schedule, response = planted_dataset(0)
        sig_path = tmp_path / "signal.csv"
        write_signal(signal, sig_path)
        resp_path = tmp_path / "response.csv"
        with open(resp_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "value"])
            for t, v in zip(response.timestamps, response.values):
                w.writerow([t.strftime("%Y-%m"), repr(float(v))])
        anchors = ",".join(t.strftime("%Y-%m") for t in schedule.anchors)
        out1 = tmp_path / "idx"
        rc = main([
            "index", "--signal", str(sig_path), "--threshold", "8",
            "--season", "04-01:05-31",
            "--m", "30", "--a", "0", "--b", "3", "--c", "0.4", "--d", "1",
            "--timing-season", "04-01:05-31",
            "--anchors", anchors, "--out-dir", str(out1),
        ])
        assert rc == EXIT_OK
        out2 = tmp_path / "stats"
        rc = main([
            "stats", "--index", str(out1 / "index.csv"),
            "--response", str(resp_path), "--smooth", "5",
            "--out-dir", str(out2),
        ])
        assert rc == EXIT_OK
        report = json.loads((out2 / "association.json").read_text())
        assert report["r"] > 0.99  # response was built from this very index
        assert report["p"] < 1e-6
        assert report["n"] == len(schedule.anchors)
        assert (out2 / "smoothed.csv").exists()

    def test_missing_index_arg(self, tmp_path):
        rc = main(["stats", "--response", "r.csv", "--out-dir", str(tmp_path)])
        assert rc == EXIT_VALIDATION

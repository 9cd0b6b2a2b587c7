import json
import os

import numpy as np
import pytest

from narxlm import cli
from narxlm.synth import frame_to_csv, synthetic_ohlcv_frame

FAST_FLAGS = ["--epochs", "40", "--restarts", "2", "--xi", "1.0",
              "--goal", "1e-9", "--min-grad", "1e-10"]


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    frame, _ = synthetic_ohlcv_frame(220, seed=99, noise_std=0.02)
    frame_to_csv(frame, path)
    return str(path)


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, data_csv):
    out = str(tmp_path_factory.mktemp("trained"))
    rc = cli.main(["train", "--csv", data_csv, "--out", out,
                   "--neurons", "5", "--seed", "7", *FAST_FLAGS])
    assert rc == 0
    return out


class TestTrain:
    def test_outputs_written(self, trained_dir):
        for name in (cli.MODEL_FILE, cli.TRAIN_REPORT_FILE, cli.EPOCHS_FILE,
                     cli.DIAGNOSTICS_FILE, cli.MANIFEST_FILE):
            assert os.path.exists(os.path.join(trained_dir, name))

    def test_manifest_contents(self, trained_dir, data_csv):
        with open(os.path.join(trained_dir, cli.MANIFEST_FILE)) as fh:
            manifest = json.load(fh)
        assert manifest["command"] == "train"
        assert manifest["input_file"] == data_csv
        assert len(manifest["input_sha256"]) == 64
        assert cli.MODEL_FILE in manifest["outputs"]
        assert manifest["parameters"]["seed"] == 7

    def test_stop_reason_recorded(self, trained_dir):
        with open(os.path.join(trained_dir, cli.TRAIN_REPORT_FILE)) as fh:
            report = json.load(fh)
        assert report["stop_reason"] in {"goal-met", "min-grad", "max-fail",
                                         "epochs-exhausted", "mu-max"}
        assert report["best_epoch"] <= report["n_epochs"] - 1

    def test_epochs_csv_shape(self, trained_dir):
        lines = open(os.path.join(trained_dir, cli.EPOCHS_FILE)).read().splitlines()
        assert lines[0].startswith("epoch,train_objective")
        assert len(lines) >= 2

    def test_malformed_csv_no_partial_model(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("Date,Open,High,Low,Close,Volume\n1,zzz,2,0.5,1.5,100\n")
        out = tmp_path / "out"
        rc = cli.main(["train", "--csv", str(bad), "--out", str(out),
                       *FAST_FLAGS])
        assert rc == cli.EXIT_VALIDATION
        assert not (out / cli.MODEL_FILE).exists()

    def test_missing_file_io_code(self, tmp_path):
        rc = cli.main(["train", "--csv", str(tmp_path / "nope.csv"),
                       "--out", str(tmp_path / "o")])
        assert rc == cli.EXIT_IO

    def test_determinism_byte_identical(self, data_csv, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            rc = cli.main(["train", "--csv", data_csv, "--out", out,
                           "--neurons", "3", "--seed", "3",
                           "--epochs", "15", "--restarts", "1", "--xi", "1.0"])
            assert rc == 0
            outs.append(out)
        for name in (cli.MODEL_FILE, cli.TRAIN_REPORT_FILE, cli.EPOCHS_FILE,
                     cli.DIAGNOSTICS_FILE):
            a = open(os.path.join(outs[0], name), "rb").read()
            b = open(os.path.join(outs[1], name), "rb").read()
            assert a == b, name


class TestSimulate:
    def test_horizon_rows(self, trained_dir, data_csv, tmp_path):
        out = str(tmp_path / "sim")
        rc = cli.main(["simulate", "--csv", data_csv,
                       "--model", os.path.join(trained_dir, cli.MODEL_FILE),
                       "--horizon", "100", "--out", out])
        assert rc == 0
        lines = open(os.path.join(out, cli.PREDICTIONS_FILE)).read().splitlines()
        assert lines[0] == "timestep,target,prediction,error"
        assert len(lines) == 101
        with open(os.path.join(out, cli.DIAGNOSTICS_FILE)) as fh:
            diag = json.load(fh)
        assert "mse" in diag and "r_value" in diag

    def test_empty_horizon(self, trained_dir, data_csv, tmp_path):
        out = str(tmp_path / "sim0")
        rc = cli.main(["simulate", "--csv", data_csv,
                       "--model", os.path.join(trained_dir, cli.MODEL_FILE),
                       "--horizon", "0", "--out", out])
        assert rc == 0
        lines = open(os.path.join(out, cli.PREDICTIONS_FILE)).read().splitlines()
        assert len(lines) == 1  # header only

    def test_channel_mismatch(self, trained_dir, data_csv, tmp_path):
        with open(os.path.join(trained_dir, cli.MODEL_FILE)) as fh:
            doc = json.load(fh)
        doc["exo_channels"] = doc["exo_channels"][:3]  # 4-channel net, 3 listed
        broken = tmp_path / "broken_model.json"
        broken.write_text(json.dumps(doc))
        rc = cli.main(["simulate", "--csv", data_csv, "--model", str(broken),
                       "--horizon", "5", "--out", str(tmp_path / "simx")])
        assert rc == cli.EXIT_MISMATCH


class TestEval:
    def test_accepted_model_exit_zero(self, trained_dir, data_csv, tmp_path):
        out = str(tmp_path / "eval")
        rc = cli.main(["eval", "--csv", data_csv,
                       "--model", os.path.join(trained_dir, cli.MODEL_FILE),
                       "--out", out])
        with open(os.path.join(out, cli.DIAGNOSTICS_FILE)) as fh:
            diag = json.load(fh)
        assert rc == (0 if diag["accepted"] else cli.EXIT_REJECTED)

    def test_reject_code_with_strict_threshold(self, trained_dir, data_csv,
                                               tmp_path):
        out = str(tmp_path / "eval_strict")
        rc = cli.main(["eval", "--csv", data_csv,
                       "--model", os.path.join(trained_dir, cli.MODEL_FILE),
                       "--r-min", "1.0", "--mse-max", "0",
                       "--out", out])
        assert rc == cli.EXIT_REJECTED
        with open(os.path.join(out, cli.DIAGNOSTICS_FILE)) as fh:
            diag = json.load(fh)
        assert diag["reasons"]


class TestSweep:
    def test_singleton_grid(self, data_csv, tmp_path):
        out = str(tmp_path / "sweep1")
        rc = cli.main(["sweep", "--csv", data_csv, "--out", out,
                       "--input-delays", "0:1", "--feedback-delays", "1",
                       "--neurons", "3", "--seed", "2",
                       "--epochs", "20", "--restarts", "1", "--xi", "1.0"])
        assert rc == 0
        lines = open(os.path.join(out, cli.SWEEP_CSV_FILE)).read().splitlines()
        assert len(lines) == 2
        with open(os.path.join(out, cli.CHOSEN_CONFIG_FILE)) as fh:
            chosen = json.load(fh)
        assert chosen["input_delays"] == [0, 1]
        assert chosen["neurons"] == 3

    def test_grid_syntax(self, data_csv, tmp_path):
        out = str(tmp_path / "sweep2")
        rc = cli.main(["sweep", "--csv", data_csv, "--out", out,
                       "--input-delays", "0:1,2:3", "--feedback-delays", "1",
                       "--neurons", "2", "--seed", "2",
                       "--epochs", "10", "--restarts", "1", "--xi", "1.0"])
        assert rc == 0
        with open(os.path.join(out, cli.SWEEP_JSON_FILE)) as fh:
            rows = json.load(fh)
        assert [r["d_u"] for r in rows] == [[0, 1], [2, 3]]

    def test_empty_axis_usage_error(self, data_csv, tmp_path):
        rc = cli.main(["sweep", "--csv", data_csv,
                       "--out", str(tmp_path / "sweep3"),
                       "--neurons", ""])
        assert rc != 0


class TestUsage:
    def test_no_command(self):
        assert cli.main([]) == cli.EXIT_USAGE

    def test_unknown_flag(self, data_csv, tmp_path):
        assert cli.main(["train", "--csv", data_csv, "--out", str(tmp_path),
                         "--bogus"]) == cli.EXIT_USAGE

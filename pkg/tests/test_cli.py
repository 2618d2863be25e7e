import numpy as np

from lrquant.cli import main
from lrquant.harness import read_records_csv

SPEC_TOML = """\
model = "multitask"
mode = "heavy_response_only"
n_grid = [60, 120]
eta_grid = [0.0, 0.4]
replications = 2
seed = 11
lambda_const = 0.5
max_iters = 600
tol = 1e-8

[target]
kind = "v7_projector"
d1 = 8

[covspec]
kind = "gaussian_iid"

[noisespec]
kind = "scaled_t_iid"
nu = 2.1
scale = 0.2
"""


def write_spec(tmp_path, text=SPEC_TOML):
    p = tmp_path / "spec.toml"
    p.write_text(text)
    return p


class TestRun:
    def test_run_writes_all_outputs(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--spec", str(spec), "--out", str(out)]) == 0
        assert (out / "records.csv").exists()
        assert (out / "summary.csv").exists()
        assert (out / "slopes.csv").exists() or True  # < 3 n points: optional
        assert (out / "plotdata").is_dir()
        records = read_records_csv(out / "records.csv")
        assert len(records) == 16

    def test_run_flag_overrides(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--spec", str(spec), "--out", str(out),
                     "--reps", "1", "--seed", "5", "--threads", "2"]) == 0
        records = read_records_csv(out / "records.csv")
        assert len(records) == 8
        assert {r.replication for r in records} == {0}

    def test_missing_spec_file_is_io_error(self, tmp_path):
        assert main(["run", "--spec", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path / "o")]) == 3

    def test_malformed_toml_is_spec_error(self, tmp_path):
        spec = tmp_path / "bad.toml"
        spec.write_text("model = [unclosed")
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_field_is_spec_error(self, tmp_path):
        spec = write_spec(tmp_path, SPEC_TOML.replace('"multitask"', '"ridge"'))
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_key_is_spec_error(self, tmp_path):
        spec = write_spec(tmp_path, SPEC_TOML + "\nbananas = 3\n")
        assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2


class TestSummarizeAndSlope:
    def test_pipeline(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        main(["run", "--spec", str(spec), "--out", str(out)])
        summary = tmp_path / "summary2.csv"
        assert main(["summarize", "--in", str(out / "records.csv"),
                     "--out", str(summary)]) == 0
        header = summary.read_text().splitlines()[0]
        assert "mean_err_fro" in header

    def test_slope_needs_three_points(self, tmp_path, capsys):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        main(["run", "--spec", str(spec), "--out", str(out)])
        # only two n values in the grid: slope fit must report a spec error
        assert main(["slope", "--in", str(out / "records.csv"),
                     "--series", "method=robust,eta1=0.0"]) == 2

    def test_slope_on_three_point_grid(self, tmp_path, capsys):
        text = SPEC_TOML.replace("[60, 120]", "[60, 120, 240]")
        spec = write_spec(tmp_path, text)
        out = tmp_path / "out"
        main(["run", "--spec", str(spec), "--out", str(out)])
        assert main(["slope", "--in", str(out / "records.csv"),
                     "--series", "method=robust,eta1=0.0"]) == 0
        assert "slope=" in capsys.readouterr().out

    def test_bad_series_key(self, tmp_path):
        spec = write_spec(tmp_path)
        out = tmp_path / "out"
        main(["run", "--spec", str(spec), "--out", str(out)])
        assert main(["slope", "--in", str(out / "records.csv"),
                     "--series", "color=red"]) == 2


class TestImages:
    def test_images_small_run(self, tmp_path, capsys):
        out = tmp_path / "img_out"
        code = main(["images", "--n", "60", "--reps", "1", "--seed", "2",
                     "--out", str(out)])
        assert code == 0
        assert (out / "records.csv").exists()
        records = read_records_csv(out / "records.csv")
        assert {r.method for r in records} == {"robust", "standard"}
        for r in records:
            assert r.d1 == 43 and r.d2 == 53
            assert r.block_err_fro is not None and len(r.block_err_fro) == 4
        assert "robust" in capsys.readouterr().out

    def test_images_bad_fixture_path(self, tmp_path):
        assert main(["images", "--n", "40", "--reps", "1",
                     "--fixtures", str(tmp_path / "none.txt"),
                     "--out", str(tmp_path / "o")]) == 3

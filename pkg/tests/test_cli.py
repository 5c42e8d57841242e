import json

import numpy
import pandas
import pytest

from ecve.cli import run
from ecve.estimator import EcveFit
from ecve.estimator import reduce
from ecve.simulation import generate
from ecve.stiefel import subspace_error

FAST_FLAGS = ["--attempts", "2", "--max-iter", "20"]


@pytest.fixture
def m1_csv(tmp_path):
    X, Y, B_true = generate("M1", "I", 200, seed=12)
    frame = pandas.DataFrame(X, columns=[f"x{index + 1}" for index in range(X.shape[1])])
    frame["y"] = Y
    path = tmp_path / "m1.csv"
    frame.to_csv(path, index=False)
    return path, B_true


def test_fit_writes_json_and_table(m1_csv, tmp_path, capsys):
    csv_path, B_true = m1_csv
    out_path = tmp_path / "fit.json"
    status = run(
        ["fit", str(csv_path), "--response", "y", "--k", "1", "--out", str(out_path)]
        + FAST_FLAGS
    )
    assert status == 0
    fitted = EcveFit.from_json(out_path.read_text())
    assert fitted.feature_names == tuple(f"x{index + 1}" for index in range(10))
    assert fitted.response_name == "y"
    assert subspace_error(B_true, fitted.B_hat) < 0.3
    output = capsys.readouterr().out
    assert "x10" in output and "b1" in output


def test_fit_is_byte_identical(m1_csv, tmp_path):
    csv_path, _ = m1_csv
    outputs = []
    for name in ("first.json", "second.json"):
        out_path = tmp_path / name
        arguments = ["fit", str(csv_path), "--k", "1", "--seed", "7", "--out", str(out_path)]
        assert run(arguments + FAST_FLAGS) == 0
        outputs.append(out_path.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["seed"] == 7


def test_fit_k_too_large(m1_csv, tmp_path):
    csv_path, _ = m1_csv
    status = run(["fit", str(csv_path), "--k", "10", "--out", str(tmp_path / "fit.json")])
    assert status == 2
    assert not (tmp_path / "fit.json").exists()


def test_fit_non_numeric_cell(tmp_path, caplog):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("a,b,y\n1,2,3\n4,five,6\n7,8,9\n")
    status = run(["fit", str(csv_path), "--k", "1", "--out", str(tmp_path / "fit.json")])
    assert status == 2
    assert "row 2, column 'b'" in caplog.text


def test_fit_drop_and_config(m1_csv, tmp_path):
    csv_path, _ = m1_csv
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps({"common": {"seed": 2}, "fit": {"attempts": 1, "max_iter": 5, "k": 1}})
    )
    out_path = tmp_path / "fit.json"
    status = run(
        ["fit", str(csv_path), "--drop", "x10", "--config", str(config_path)]
        + ["--method", "indicator+weighted", "--out", str(out_path)]
    )
    assert status == 0
    data = json.loads(out_path.read_text())
    assert data["p"] == 9
    assert data["seed"] == 2
    assert data["config"]["optimizer"]["attempts"] == 1
    assert data["config"]["method"] == "indicator:auto+weighted"


@pytest.mark.parametrize(
    "flags, expected",
    [([], "uniform"), (["--weighted-direction", "exact"], "exact")],
)
def test_fit_weighted_direction(m1_csv, tmp_path, flags, expected):
    csv_path, _ = m1_csv
    out_path = tmp_path / "fit.json"
    arguments = ["fit", str(csv_path), "--k", "1", "--method", "fourier+weighted"]
    arguments += ["--out", str(out_path), "--attempts", "1", "--max-iter", "3"]
    status = run(arguments + flags)
    assert status == 0
    fitted = EcveFit.from_json(out_path.read_text())
    assert fitted.config["optimizer"]["weighted_direction"] == expected


def test_reduce_matches_library(m1_csv, tmp_path):
    csv_path, _ = m1_csv
    fit_path = tmp_path / "fit.json"
    out_path = tmp_path / "reduced.csv"
    assert run(["fit", str(csv_path), "--k", "1", "--out", str(fit_path)] + FAST_FLAGS) == 0
    assert run(["reduce", str(fit_path), str(csv_path), "--out", str(out_path)]) == 0

    reduced = pandas.read_csv(out_path)
    assert list(reduced.columns) == ["b1", "y"]
    source = pandas.read_csv(csv_path)
    expected = reduce(
        EcveFit.from_json(fit_path.read_text()), source.drop(columns=["y"]).to_numpy()
    )
    numpy.testing.assert_allclose(reduced["b1"].to_numpy(), expected[:, 0], atol=1e-12)
    numpy.testing.assert_allclose(reduced["y"].to_numpy(), source["y"].to_numpy())


def test_reduce_column_mismatch(m1_csv, tmp_path):
    csv_path, _ = m1_csv
    fit_path = tmp_path / "fit.json"
    assert run(["fit", str(csv_path), "--k", "1", "--out", str(fit_path)] + FAST_FLAGS) == 0
    narrow_path = tmp_path / "narrow.csv"
    pandas.read_csv(csv_path).drop(columns=["x3"]).to_csv(narrow_path, index=False)
    status = run(["reduce", str(fit_path), str(narrow_path), "--out", str(tmp_path / "r.csv")])
    assert status == 2


def test_bench_single_replicate(tmp_path, capsys):
    out_path = tmp_path / "bench.csv"
    status = run(
        ["bench", "--model", "M1", "--dist", "I", "--n", "40", "--reps", "1"]
        + ["--out", str(out_path), "--attempts", "1", "--max-iter", "5"]
    )
    assert status == 0
    lines = out_path.read_text().splitlines()
    assert lines[0] == "model,dist,n,method,replicates,mean_err,sd_err"
    assert lines[1].startswith("M1,I,40,fourier:auto,1,")
    assert lines[1].endswith(",0.0")
    assert "sd undefined" in capsys.readouterr().out


def test_bench_unknown_model(caplog):
    assert run(["bench", "--model", "M9", "--reps", "1"]) == 2
    assert "M1, M2, M3, M4, M5, M6, M7" in caplog.text


def test_simulate_grid_is_thread_independent(tmp_path):
    arguments = ["simulate", "--model", "M1", "M7", "--dist", "I", "--n", "30"]
    arguments += ["--method", "fourier", "indicator", "--reps", "2"]
    arguments += ["--attempts", "1", "--max-iter", "5"]
    serial_path = tmp_path / "serial.csv"
    parallel_path = tmp_path / "parallel.csv"
    long_path = tmp_path / "long.csv"
    assert run(arguments + ["--out", str(serial_path), "--long-out", str(long_path)]) == 0
    assert run(arguments + ["--out", str(parallel_path), "--threads", "3"]) == 0
    assert serial_path.read_bytes() == parallel_path.read_bytes()
    assert len(serial_path.read_text().splitlines()) == 1 + 4
    long_lines = long_path.read_text().splitlines()
    assert long_lines[0] == "model,dist,n,method,rep,err"
    assert len(long_lines) == 1 + 4 * 2


def test_simulate_ensemble_size_sweep(tmp_path):
    out_path = tmp_path / "sweep.csv"
    status = run(
        ["simulate", "--model", "M3", "--n", "30", "--method", "indicator+weighted"]
        + ["--m-list", "2", "4", "--reps", "1", "--attempts", "1", "--max-iter", "3"]
        + ["--out", str(out_path)]
    )
    assert status == 0
    methods = pandas.read_csv(out_path)["method"].tolist()
    assert methods == ["indicator:2+weighted", "indicator:4+weighted"]


def test_gradcheck_default(capsys):
    assert run(["gradcheck"]) == 0
    assert "gradient check passed" in capsys.readouterr().out


def test_gradcheck_weighted():
    assert run(["gradcheck", "--weighting", "weighted", "--seed", "3"]) == 0


def test_gradcheck_constant_response(capsys):
    assert run(["gradcheck", "--constant-response"]) == 0
    output = capsys.readouterr().out
    norm = float(output.split("gradient norm:")[1].split()[0])
    assert norm < 1e-10


def test_gradcheck_reports_second_order_ratio(capsys):
    from ecve.tools.gradient_check import GradcheckRunConfig
    from ecve.tools.gradient_check import check_gradient

    report = check_gradient(GradcheckRunConfig())
    assert 3.0 < report.order_ratio < 5.0


def test_unknown_command():
    assert run(["frobnicate"]) == 2
    assert run([]) == 2

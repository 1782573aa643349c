import numpy as np
import pytest

from pls_attn import layer_norm, load_csv, load_model, write_csv
from pls_attn.cli import main
from pls_attn.descent import LossConfig, loss_eval

from datagen import model_consistent_pair, planted_model, random_centered_pair


def write_pair(tmp_path, X, Y):
    x_path = tmp_path / "x.csv"
    y_path = tmp_path / "y.csv"
    write_csv(X, x_path)
    write_csv(Y, y_path)
    return str(x_path), str(y_path)


def printed_value(capsys, label):
    for line in capsys.readouterr().out.splitlines():
        if line.startswith(label):
            return float(line.split(":")[1])
    raise AssertionError(f"no line starting with {label!r}")


class TestFit:
    def test_svd_on_planted_data_reports_tiny_rmse(self, tmp_path, capsys):
        X, Y, _, _, _ = planted_model(0)
        x_path, y_path = write_pair(tmp_path, X, Y)
        model_path = str(tmp_path / "model.json")
        code = main(["fit", "--x", x_path, "--y", y_path,
                     "--model", model_path, "--solver", "svd",
                     "--components", "2"])
        assert code == 0
        assert printed_value(capsys, "training RMSE") <= 1e-8

    def test_descent_matches_svd_objective(self, tmp_path, capsys):
        X, Y = model_consistent_pair(1)
        x_path, y_path = write_pair(tmp_path, X, Y)
        svd_path = str(tmp_path / "svd.json")
        descent_path = str(tmp_path / "descent.json")
        assert main(["fit", "--x", x_path, "--y", y_path, "--model", svd_path,
                     "--solver", "svd", "--components", "1"]) == 0
        capsys.readouterr()
        code = main(["fit", "--x", x_path, "--y", y_path,
                     "--model", descent_path, "--solver", "descent",
                     "--components", "1", "--alpha", "0", "--beta", "0"])
        assert code == 0
        final_loss = printed_value(capsys, "final loss")
        svd_model = load_model(svd_path)
        objective = loss_eval(X - svd_model.x_mean_, Y - svd_model.y_mean_,
                              svd_model.P_, svd_model.Q_, svd_model.D_,
                              LossConfig(0.0, 0.0))
        assert final_loss <= 1.001 * objective

    def test_missing_response_file_exits_one(self, tmp_path, capsys):
        X, Y, _, _, _ = planted_model(2)
        x_path, _ = write_pair(tmp_path, X, Y)
        missing = str(tmp_path / "nope.csv")
        code = main(["fit", "--x", x_path, "--y", missing,
                     "--model", str(tmp_path / "m.json")])
        assert code == 1
        assert "nope.csv" in capsys.readouterr().err

    def test_trace_file_written_for_descent(self, tmp_path):
        X, Y = random_centered_pair(3)
        x_path, y_path = write_pair(tmp_path, X, Y)
        trace_path = tmp_path / "trace.csv"
        code = main(["fit", "--x", x_path, "--y", y_path,
                     "--model", str(tmp_path / "m.json"),
                     "--solver", "descent", "--components", "1",
                     "--max-iters", "30", "--trace", str(trace_path)])
        assert code == 0
        header = trace_path.read_text().splitlines()[0]
        assert header == "iteration,loss,grad_norm,drift_p,drift_q"

    def test_shape_mismatch_exits_one(self, tmp_path):
        X, Y, _, _, _ = planted_model(4)
        x_path, y_path = write_pair(tmp_path, X[:-1], Y)
        code = main(["fit", "--x", x_path, "--y", y_path,
                     "--model", str(tmp_path / "m.json")])
        assert code == 1

    def test_unknown_flag_exits_one(self, tmp_path, capsys):
        assert main(["fit", "--bogus", "3"]) == 1

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_numerical_failure_exits_two(self, tmp_path, capsys):
        rng = np.random.default_rng(30)
        X = rng.standard_normal((6, 3)) * 1e200
        Y = rng.standard_normal((6, 2)) * 1e200
        x_path, y_path = write_pair(tmp_path, X, Y)
        code = main(["fit", "--x", x_path, "--y", y_path,
                     "--model", str(tmp_path / "m.json"),
                     "--solver", "descent", "--components", "1"])
        assert code == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_header_rows_skipped(self, tmp_path, capsys):
        X, Y, _, _, _ = planted_model(31)
        x_path = tmp_path / "x.csv"
        y_path = tmp_path / "y.csv"
        write_csv(X, x_path)
        write_csv(Y, y_path)
        x_path.write_text("c1,c2,c3,c4,c5,c6\n" + x_path.read_text())
        y_path.write_text("r1,r2,r3,r4\n" + y_path.read_text())
        code = main(["fit", "--x", str(x_path), "--y", str(y_path),
                     "--model", str(tmp_path / "m.json"),
                     "--components", "2", "--header"])
        assert code == 0
        assert printed_value(capsys, "training RMSE") <= 1e-8


class TestPredict:
    def test_recovers_planted_responses(self, tmp_path):
        X, Y, _, _, _ = planted_model(5)
        x_path, y_path = write_pair(tmp_path, X, Y)
        model_path = str(tmp_path / "m.json")
        assert main(["fit", "--x", x_path, "--y", y_path, "--model",
                     model_path, "--components", "2"]) == 0
        out_path = str(tmp_path / "yhat.csv")
        assert main(["predict", "--x", x_path, "--model", model_path,
                     "--out", out_path]) == 0
        predictions = load_csv(out_path)
        assert np.abs(predictions - Y).max() <= 1e-6

    def test_wrong_width_exits_one(self, tmp_path):
        X, Y, _, _, _ = planted_model(6)
        x_path, y_path = write_pair(tmp_path, X, Y)
        model_path = str(tmp_path / "m.json")
        assert main(["fit", "--x", x_path, "--y", y_path, "--model",
                     model_path, "--components", "2"]) == 0
        narrow = tmp_path / "narrow.csv"
        write_csv(X[:, :-1], narrow)
        assert main(["predict", "--x", str(narrow), "--model", model_path,
                     "--out", str(tmp_path / "out.csv")]) == 1

    def test_round_tripped_model_predicts_identically(self, tmp_path):
        X, Y, _, _, _ = planted_model(7)
        x_path, y_path = write_pair(tmp_path, X, Y)
        model_path = str(tmp_path / "m.json")
        assert main(["fit", "--x", x_path, "--y", y_path, "--model",
                     model_path, "--components", "2", "--hex-floats"]) == 0
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert main(["predict", "--x", x_path, "--model", model_path,
                     "--out", str(first)]) == 0
        assert main(["predict", "--x", x_path, "--model", model_path,
                     "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()


class TestGradcheck:
    def test_default_seed_passes(self, capsys):
        assert main(["gradcheck"]) == 0
        assert printed_value(capsys, "max relative gradient error") <= 1e-4

    def test_corrupted_gradients_exit_two(self, capsys):
        assert main(["gradcheck", "--corrupt", "0.001"]) == 2

    def test_huge_penalty_weights_still_pass(self, capsys):
        # Conditioning probe: the scaled error stays in tolerance even
        # when the reconstruction penalties dominate by six decades.
        assert main(["gradcheck", "--alpha", "1e6", "--beta", "1e6"]) == 0
        assert printed_value(capsys, "max relative gradient error") <= 1e-4


class TestCompare:
    def test_report_metrics(self, tmp_path, capsys):
        X, Y = model_consistent_pair(8)
        x_path, y_path = write_pair(tmp_path, X, Y)
        report_path = tmp_path / "report.csv"
        code = main(["compare", "--x", x_path, "--y", y_path,
                     "--components", "1", "--out", str(report_path)])
        assert code == 0
        rows = dict(
            line.split(",") for line in
            report_path.read_text().strip().splitlines()[1:]
        )
        assert float(rows["objective_descent"]) <= \
            1.001 * float(rows["objective_svd"])
        assert float(rows["angle_p_1"]) <= 1e-3
        assert float(rows["bridge_residual_svd"]) <= 1e-10
        assert float(rows["bridge_residual_descent"]) <= 1e-10


class TestAttnDemo:
    def test_zero_weights_reduce_to_documented_forms(self, tmp_path):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((6, 4))
        Y = rng.standard_normal((6, 3))
        x_path, y_path = write_pair(tmp_path, X, Y)
        out_dir = tmp_path / "demo"
        code = main(["attn-demo", "--x", x_path, "--y", y_path,
                     "--components", "4", "--out", str(out_dir),
                     "--zero-weights"])
        assert code == 0
        encoder = load_csv(out_dir / "encoder.csv")
        assert np.abs(encoder - layer_norm(X)).max() <= 1e-15
        cross = load_csv(out_dir / "cross_attention.csv")
        assert np.abs(cross).max() == 0.0
        ffn_out = load_csv(out_dir / "ffn.csv")
        assert np.abs(ffn_out).max() == 0.0

    def test_seeded_runs_are_bit_identical(self, tmp_path):
        rng = np.random.default_rng(10)
        X = rng.standard_normal((5, 3))
        Y = rng.standard_normal((5, 2))
        x_path, y_path = write_pair(tmp_path, X, Y)
        dirs = [tmp_path / "run1", tmp_path / "run2"]
        for out_dir in dirs:
            assert main(["attn-demo", "--x", x_path, "--y", y_path,
                         "--components", "3", "--seed", "11",
                         "--out", str(out_dir)]) == 0
        for name in ("encoder.csv", "cross_attention.csv", "ffn.csv"):
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_permuted_input_permutes_outputs(self, tmp_path):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((6, 3))
        Y = rng.standard_normal((6, 2))
        perm = rng.permutation(6)
        paths = write_pair(tmp_path, X, Y)
        base_dir = tmp_path / "base"
        assert main(["attn-demo", "--x", paths[0], "--y", paths[1],
                     "--components", "3", "--seed", "13",
                     "--out", str(base_dir)]) == 0
        perm_tmp = tmp_path / "perm"
        perm_tmp.mkdir()
        perm_paths = write_pair(perm_tmp, X[perm], Y[perm])
        perm_dir = tmp_path / "permuted"
        assert main(["attn-demo", "--x", perm_paths[0], "--y", perm_paths[1],
                     "--components", "3", "--seed", "13",
                     "--out", str(perm_dir)]) == 0
        base_encoder = load_csv(base_dir / "encoder.csv")
        perm_encoder = load_csv(perm_dir / "encoder.csv")
        assert np.abs(perm_encoder - base_encoder[perm]).max() <= 1e-10

    def test_latent_width_mismatch_exits_one(self, tmp_path, capsys):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((5, 4))
        Y = rng.standard_normal((5, 2))
        x_path, y_path = write_pair(tmp_path, X, Y)
        code = main(["attn-demo", "--x", x_path, "--y", y_path,
                     "--components", "2", "--out", str(tmp_path / "d")])
        assert code == 1
        assert "residual" in capsys.readouterr().err


class TestLogging:
    def test_trace_level_emits_descent_iterations(self, tmp_path, caplog,
                                                  monkeypatch):
        import logging

        X, Y = random_centered_pair(32)
        x_path, y_path = write_pair(tmp_path, X, Y)
        monkeypatch.setenv("PLS_ATTN_LOG", "trace")
        with caplog.at_level(logging.DEBUG, logger="pls_attn"):
            assert main(["fit", "--x", x_path, "--y", y_path,
                         "--model", str(tmp_path / "m.json"),
                         "--solver", "descent", "--components", "1",
                         "--max-iters", "10"]) == 0
        assert any("iter" in rec.message for rec in caplog.records)

    def test_quiet_level_suppresses_debug(self, tmp_path, caplog, monkeypatch):
        import logging

        X, Y = random_centered_pair(33)
        x_path, y_path = write_pair(tmp_path, X, Y)
        monkeypatch.setenv("PLS_ATTN_LOG", "quiet")
        with caplog.at_level(logging.DEBUG, logger="pls_attn.cli"):
            assert main(["fit", "--x", x_path, "--y", y_path,
                         "--model", str(tmp_path / "m.json"),
                         "--solver", "descent", "--components", "1",
                         "--max-iters", "10"]) == 0
        assert not any(rec.levelno == logging.DEBUG for rec in caplog.records)


class TestDeterminism:
    def test_fit_is_bit_reproducible(self, tmp_path, capsys):
        X, Y = random_centered_pair(15)
        x_path, y_path = write_pair(tmp_path, X, Y)
        models = [tmp_path / "m1.json", tmp_path / "m2.json"]
        outputs = []
        for path in models:
            assert main(["fit", "--x", x_path, "--y", y_path,
                         "--model", str(path), "--solver", "descent",
                         "--components", "2", "--seed", "42",
                         "--max-iters", "60", "--hex-floats"]) == 0
            outputs.append(capsys.readouterr().out)
        assert models[0].read_bytes() == models[1].read_bytes()
        assert outputs[0] == outputs[1]

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pls_attn import (
    Dataset,
    DimensionError,
    ParseError,
    PLSCrossCovariance,
    PLSGradientDescent,
    UnsupportedVersionError,
    center,
    load_csv,
    load_model,
    save_model,
    write_csv,
)

from datagen import planted_model, random_centered_pair


class TestLoadCsv:
    def test_basic_rectangle(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,4\n")
        assert_allclose(load_csv(path), [[1.0, 2.0], [3.0, 4.0]], atol=0)

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("a,b\n1,2\n")
        assert_allclose(load_csv(path, has_header=True), [[1.0, 2.0]], atol=0)

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ParseError, match="line 2"):
            load_csv(path)

    def test_non_numeric_cell_reports_position(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(ParseError, match="line 2, column 2"):
            load_csv(path)

    def test_non_finite_cell_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,nan\n")
        with pytest.raises(ParseError, match="line 2"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("")
        with pytest.raises(ParseError, match="no data"):
            load_csv(path)

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "absent.csv")

    def test_hex_float_cells_parse(self, tmp_path):
        path = tmp_path / "m.csv"
        value = 0.1
        path.write_text(f"{value.hex()},1.5\n")
        out = load_csv(path)
        assert out[0, 0] == value


class TestWriteCsvRoundTrip:
    @pytest.mark.parametrize("hex_floats", [False, True])
    def test_round_trip_is_exact(self, tmp_path, hex_floats):
        rng = np.random.default_rng(0)
        matrix = rng.standard_normal((7, 4)) * rng.uniform(1e-8, 1e8)
        path = tmp_path / "m.csv"
        write_csv(matrix, path, hex_floats=hex_floats)
        assert np.array_equal(load_csv(path), matrix)


class TestCenter:
    def test_simple_column(self):
        ds = Dataset(X=np.array([[1.0], [3.0]]), Y=np.array([[5.0], [9.0]]))
        out = center(ds)
        assert_allclose(out.X, [[-1.0], [1.0]], atol=0)
        assert_allclose(out.x_mean, [2.0], atol=0)
        assert_allclose(out.y_mean, [7.0], atol=0)
        assert out.centered

    def test_idempotent(self):
        ds = center(Dataset(X=np.array([[1.0], [3.0]]),
                            Y=np.array([[2.0], [4.0]])))
        again = center(ds)
        assert again is ds

    def test_random_columns_have_negligible_means(self):
        rng = np.random.default_rng(1)
        ds = center(Dataset(X=rng.standard_normal((10, 4)) + 3,
                            Y=rng.standard_normal((10, 2)) - 8))
        assert np.abs(ds.X.mean(axis=0)).max() <= 1e-12
        assert np.abs(ds.Y.mean(axis=0)).max() <= 1e-12

    def test_decentering_restores_original(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((9, 3)) * 5 + 11
        Y = rng.standard_normal((9, 2)) - 4
        ds = center(Dataset(X=X, Y=Y))
        assert np.abs(ds.X + ds.x_mean - X).max() <= 1e-12
        assert np.abs(ds.Y + ds.y_mean - Y).max() <= 1e-12

    def test_unit_variance_scaling_flag(self):
        rng = np.random.default_rng(3)
        ds = center(Dataset(X=rng.standard_normal((20, 3)) * [1, 10, 100],
                            Y=rng.standard_normal((20, 2))), scale=True)
        assert_allclose(ds.X.std(axis=0, ddof=1), np.ones(3), atol=1e-12)
        assert ds.x_scale is not None

    def test_row_count_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            Dataset(X=np.ones((3, 2)), Y=np.ones((4, 2)))

    def test_centered_flag_requires_centered_data(self):
        from pls_attn import CenteringError
        with pytest.raises(CenteringError):
            Dataset(X=np.ones((3, 2)), Y=np.zeros((3, 2)), centered=True)


class TestModelPersistence:
    @pytest.mark.parametrize("hex_floats", [False, True])
    def test_round_trip_bit_identical(self, tmp_path, hex_floats):
        X, Y, _, _, _ = planted_model(4)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path, hex_floats=hex_floats)
        loaded = load_model(path)
        assert isinstance(loaded, PLSCrossCovariance)
        for attr in ("P_", "Q_", "D_", "x_mean_", "y_mean_"):
            assert np.array_equal(getattr(loaded, attr), getattr(model, attr))
        assert np.array_equal(loaded.predict(X), model.predict(X))

    def test_descent_general_mode_round_trip(self, tmp_path):
        X, Y = random_centered_pair(5)
        model = PLSGradientDescent(n_components=2, d_mode="general",
                                   max_iters=50, seed=6).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path, hex_floats=True)
        loaded = load_model(path)
        assert isinstance(loaded, PLSGradientDescent)
        assert loaded.d_mode_ == "general"
        assert np.array_equal(loaded.D_, model.D_)

    def test_missing_field_named(self, tmp_path):
        X, Y, _, _, _ = planted_model(7)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        del doc["Q"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match="'Q'"):
            load_model(path)

    def test_unsupported_version_rejected(self, tmp_path):
        X, Y, _, _, _ = planted_model(8)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["format_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(UnsupportedVersionError):
            load_model(path)

    def test_malformed_json_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_model(path)

    def test_unknown_solver_rejected(self, tmp_path):
        X, Y, _, _, _ = planted_model(9)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["solver"] = "quantum"
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match="solver"):
            load_model(path)

    def test_shape_mismatch_rejected(self, tmp_path):
        X, Y, _, _, _ = planted_model(10)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["l"] = 3
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError):
            load_model(path)

    def test_non_orthonormal_loadings_rejected(self, tmp_path):
        from pls_attn import ValidationError

        X, Y, _, _, _ = planted_model(11)
        model = PLSCrossCovariance(n_components=2).fit(X, Y)
        path = tmp_path / "model.json"
        save_model(model, path)
        doc = json.loads(path.read_text())
        doc["P"] = [[2.0 * v for v in row] for row in doc["P"]]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="orthonormal"):
            load_model(path)

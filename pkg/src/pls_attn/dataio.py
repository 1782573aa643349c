"""CSV ingestion, column centering, and model persistence.

CSV files are comma-separated UTF-8 with an optional single header row;
cells may be decimal or hexadecimal float text.  Models are stored as a
single JSON document (format_version 1) whose floats round-trip exactly:
decimal shortest-repr by default, hexadecimal float text on request.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ParseError, UnsupportedVersionError
from .validation import check_centered, check_matrix, check_same_rows

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Dataset:
    """A paired predictor/response block with its centering state.

    ``x_mean``/``y_mean`` hold the subtracted column means once
    ``centered`` is set; ``x_scale``/``y_scale`` are populated only when
    unit-variance scaling was requested.
    """

    X: np.ndarray
    Y: np.ndarray
    x_mean: np.ndarray | None = None
    y_mean: np.ndarray | None = None
    x_scale: np.ndarray | None = None
    y_scale: np.ndarray | None = None
    centered: bool = False

    def __post_init__(self):
        object.__setattr__(self, "X", check_matrix(self.X, "X"))
        object.__setattr__(self, "Y", check_matrix(self.Y, "Y"))
        check_same_rows(self.X, self.Y)
        if self.centered:
            check_centered(self.X, "X")
            check_centered(self.Y, "Y")


def center(ds: Dataset, scale: bool = False) -> Dataset:
    """Subtract column means from both blocks, remembering them.

    Idempotent: a centered dataset is returned unchanged.  With
    ``scale=True`` each column is also divided by its sample standard
    deviation (constant columns are left unscaled).
    """
    if ds.centered:
        return ds
    x_mean = ds.X.mean(axis=0)
    y_mean = ds.Y.mean(axis=0)
    X = ds.X - x_mean
    Y = ds.Y - y_mean
    x_scale = y_scale = None
    if scale:
        x_scale = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.ones(X.shape[1])
        y_scale = Y.std(axis=0, ddof=1) if Y.shape[0] > 1 else np.ones(Y.shape[1])
        x_scale = np.where(x_scale == 0.0, 1.0, x_scale)
        y_scale = np.where(y_scale == 0.0, 1.0, y_scale)
        X = X / x_scale
        Y = Y / y_scale
    return Dataset(X=X, Y=Y, x_mean=x_mean, y_mean=y_mean,
                   x_scale=x_scale, y_scale=y_scale, centered=True)


def _parse_cell(cell: str, lineno: int, col: int) -> float:
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        try:
            value = float.fromhex(text)
        except ValueError:
            raise ParseError(
                f"non-numeric cell at line {lineno}, column {col + 1}: {text!r}"
            ) from None
    if not np.isfinite(value):
        raise ParseError(
            f"non-finite cell at line {lineno}, column {col + 1}: {text!r}"
        )
    return value


def load_csv(path, has_header: bool = False) -> np.ndarray:
    """Read a rectangular numeric CSV file into a matrix.

    Raises :class:`ParseError` with the offending line number for ragged
    rows and with row/column coordinates for non-numeric cells.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not record:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise ParseError(
                    f"ragged row at line {lineno}: expected {width} fields, "
                    f"got {len(record)}"
                )
            rows.append([_parse_cell(cell, lineno, col)
                         for col, cell in enumerate(record)])
    if not rows:
        raise ParseError(f"no data rows in {path}")
    return np.array(rows, dtype=float)


def write_csv(matrix, path, hex_floats: bool = False) -> None:
    """Write a matrix as CSV with exactly round-tripping float text."""
    arr = check_matrix(matrix, "matrix")
    fmt = (lambda v: float(v).hex()) if hex_floats else (lambda v: repr(float(v)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in arr:
            writer.writerow([fmt(v) for v in row])


def _encode_float(value: float, hex_floats: bool):
    return float(value).hex() if hex_floats else float(value)


def _encode_array(arr: np.ndarray, hex_floats: bool):
    if arr.ndim == 1:
        return [_encode_float(v, hex_floats) for v in arr]
    return [[_encode_float(v, hex_floats) for v in row] for row in arr]


def save_model(model, path, hex_floats: bool = False) -> None:
    """Serialize a fitted PLS model (either solver) as JSON."""
    model._check_fitted()
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "solver": model._solver,
        "d_mode": model.d_mode_,
        "l": int(model.P_.shape[1]),
        "m": int(model.P_.shape[0]),
        "p": int(model.Q_.shape[0]),
        "P": _encode_array(model.P_, hex_floats),
        "Q": _encode_array(model.Q_, hex_floats),
        "D": _encode_array(model.D_, hex_floats),
        "x_mean": _encode_array(model.x_mean_, hex_floats),
        "y_mean": _encode_array(model.y_mean_, hex_floats),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _decode_float(value) -> float:
    if isinstance(value, str):
        try:
            return float.fromhex(value)
        except ValueError as exc:
            raise ParseError(f"bad float text {value!r}") from exc
    if isinstance(value, (int, float)):
        return float(value)
    raise ParseError(f"expected a number, got {type(value).__name__}")


def _decode_matrix(value, name: str, shape: tuple[int, int]) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise ParseError(f"field {name!r} must be an array of row arrays")
    arr = np.array([[_decode_float(v) for v in row] for row in value], dtype=float)
    if arr.ndim != 2 or arr.shape != shape:
        raise ParseError(
            f"field {name!r} has shape {arr.shape}, expected {shape}"
        )
    return arr


def _require(doc: dict, name: str):
    if name not in doc:
        raise ParseError(f"model file is missing field {name!r}")
    return doc[name]


def load_model(path):
    """Load a model saved by :func:`save_model`.

    Returns a fitted estimator of the class matching the stored solver.
    """
    from .descent import PLSGradientDescent
    from .pls import PLSCrossCovariance

    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("model file must hold a JSON object")
    version = _require(doc, "format_version")
    if version != MODEL_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported model format_version {version!r}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    solver = _require(doc, "solver")
    classes = {"svd": PLSCrossCovariance, "descent": PLSGradientDescent}
    if solver not in classes:
        raise ParseError(f"unknown solver {solver!r} in model file")
    d_mode = _require(doc, "d_mode")
    if d_mode not in ("diagonal", "general"):
        raise ParseError(f"unknown d_mode {d_mode!r} in model file")
    l = _require(doc, "l")
    m = _require(doc, "m")
    p = _require(doc, "p")
    for name, value in (("l", l), ("m", m), ("p", p)):
        if not isinstance(value, int) or value < 1:
            raise ParseError(f"field {name!r} must be a positive integer")
    P = _decode_matrix(_require(doc, "P"), "P", (m, l))
    Q = _decode_matrix(_require(doc, "Q"), "Q", (p, l))
    raw_d = _require(doc, "D")
    if d_mode == "diagonal":
        if not isinstance(raw_d, list) or any(isinstance(v, list) for v in raw_d):
            raise ParseError("diagonal-mode field 'D' must be a flat array")
        D = np.array([_decode_float(v) for v in raw_d], dtype=float)
        if D.shape != (l,):
            raise ParseError(f"field 'D' has length {D.shape[0]}, expected {l}")
    else:
        D = _decode_matrix(raw_d, "D", (l, l))
    x_mean = np.array([_decode_float(v) for v in _require(doc, "x_mean")],
                      dtype=float)
    y_mean = np.array([_decode_float(v) for v in _require(doc, "y_mean")],
                      dtype=float)
    if x_mean.shape != (m,):
        raise ParseError(f"field 'x_mean' has length {x_mean.shape[0]}, expected {m}")
    if y_mean.shape != (p,):
        raise ParseError(f"field 'y_mean' has length {y_mean.shape[0]}, expected {p}")
    cls = classes[solver]
    return cls.from_parameters(P, Q, D, x_mean=x_mean, y_mean=y_mean)

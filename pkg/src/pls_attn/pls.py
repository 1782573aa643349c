"""Partial least squares fitted through the cross-covariance matrix.

The predictor and response loadings are the leading singular vectors of
``X.T @ Y`` computed on column-centered data; a per-component diagonal
inner relation maps predictor scores to response scores, and prediction
composes the two projections with the stored column means acting as the
intercept.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegeneracyError, DimensionError, ValidationError
from .linalg import top_singular_triplets
from .validation import (
    center_columns,
    check_centered,
    check_matrix,
    check_same_rows,
)

#: Largest orthonormality defect accepted for model loadings.
LOADING_ORTHONORMALITY_TOL = 1e-8


def fit_diagonal(t_scores: np.ndarray, u_scores: np.ndarray) -> np.ndarray:
    """Per-component least-squares slope mapping ``t_scores`` columns to
    ``u_scores`` columns.

    Component k gets ``(t_k . u_k) / (t_k . t_k)``, the minimizer of
    ``|u_k - d t_k|^2``.

    Raises
    ------
    DegeneracyError
        If some score column of ``t_scores`` has zero norm, naming the
        offending component.
    """
    t = check_matrix(t_scores, "T scores")
    u = check_matrix(u_scores, "U scores")
    if t.shape != u.shape:
        raise DimensionError(
            f"score shapes differ: {t.shape} vs {u.shape}"
        )
    tt = np.sum(t * t, axis=0)
    dead = tt <= np.finfo(float).tiny
    if np.any(dead):
        k = int(np.argmax(dead))
        raise DegeneracyError(f"score component {k} has zero variance")
    return np.sum(t * u, axis=0) / tt


def fit_cross_covariance(X, Y, n_components: int):
    """Fit loadings and the diagonal inner relation on centered data.

    Parameters
    ----------
    X : array of shape (n, m)
        Column-centered predictors.
    Y : array of shape (n, p)
        Column-centered responses.
    n_components : int
        Number of latent components, at most ``min(m, p)``.

    Returns
    -------
    P : array of shape (m, n_components)
        Predictor loadings (orthonormal columns).
    Q : array of shape (p, n_components)
        Response loadings (orthonormal columns).
    D : array of shape (n_components,)
        Diagonal inner relation fitted on the scores.

    Notes
    -----
    ``P`` and ``Q`` are the top left/right singular vectors of
    ``X.T @ Y``, which maximize the summed score cross-covariance
    ``trace((X @ P).T @ (Y @ Q))`` over orthonormal loadings.  Fitting a
    collection of observation pairs is equivalent to fitting their row
    concatenation, so a single stacked pair is the only input form.
    """
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    check_same_rows(X, Y)
    check_centered(X, "X")
    check_centered(Y, "Y")
    m, p = X.shape[1], Y.shape[1]
    if not 1 <= n_components <= min(m, p):
        raise DimensionError(
            f"n_components={n_components} must be in [1, {min(m, p)}] "
            f"for X with {m} and Y with {p} columns"
        )
    cross = X.T @ Y
    triplets = top_singular_triplets(cross, n_components)
    loadings_x = triplets.U
    loadings_y = triplets.V
    d = fit_diagonal(X @ loadings_x, Y @ loadings_y)
    return loadings_x, loadings_y, d


class _BasePLS(TransformerMixin, RegressorMixin, BaseEstimator):
    """Shared fitted surface: scores, prediction, parameter round-trips.

    Fitted attributes
    -----------------
    P_ : (m, l) predictor loadings with orthonormal columns
    Q_ : (p, l) response loadings with orthonormal columns
    D_ : (l,) diagonal inner relation, or (l, l) matrix in general mode
    x_mean_, y_mean_ : stored column means realizing the intercept
    """

    _solver = "base"

    def _check_fitted(self):
        check_is_fitted(self, ["P_", "Q_", "D_"])

    @property
    def d_mode_(self) -> str:
        self._check_fitted()
        return "diagonal" if self.D_.ndim == 1 else "general"

    @property
    def coef_(self) -> np.ndarray:
        """The (m, p) linear map from centered predictors to centered
        predictions: ``P @ diag(D) @ Q.T``."""
        self._check_fitted()
        if self.D_.ndim == 1:
            return (self.P_ * self.D_) @ self.Q_.T
        return self.P_ @ self.D_ @ self.Q_.T

    def _apply_inner(self, t: np.ndarray) -> np.ndarray:
        if self.D_.ndim == 1:
            return t * self.D_
        return t @ self.D_

    def predict(self, X) -> np.ndarray:
        """Predict responses: center, project, apply the inner relation,
        map back through the response loadings, and restore the mean."""
        self._check_fitted()
        X = check_matrix(X, "X")
        if X.shape[1] != self.P_.shape[0]:
            raise DimensionError(
                f"X has {X.shape[1]} columns, model expects {self.P_.shape[0]}"
            )
        t = (X - self.x_mean_) @ self.P_
        return self._apply_inner(t) @ self.Q_.T + self.y_mean_

    def transform(self, X, Y=None):
        """Latent scores ``T = (X - x_mean) @ P`` and, when ``Y`` is
        given, ``U = (Y - y_mean) @ Q``."""
        self._check_fitted()
        X = check_matrix(X, "X")
        if X.shape[1] != self.P_.shape[0]:
            raise DimensionError(
                f"X has {X.shape[1]} columns, model expects {self.P_.shape[0]}"
            )
        t = (X - self.x_mean_) @ self.P_
        if Y is None:
            return t
        Y = check_matrix(Y, "Y")
        if Y.shape[1] != self.Q_.shape[0]:
            raise DimensionError(
                f"Y has {Y.shape[1]} columns, model expects {self.Q_.shape[0]}"
            )
        return t, (Y - self.y_mean_) @ self.Q_

    def _set_fit_state(self, P, Q, D, x_mean, y_mean):
        self.P_ = np.asarray(P, dtype=float)
        self.Q_ = np.asarray(Q, dtype=float)
        self.D_ = np.asarray(D, dtype=float)
        self.x_mean_ = np.asarray(x_mean, dtype=float)
        self.y_mean_ = np.asarray(y_mean, dtype=float)
        self.n_features_in_ = self.P_.shape[0]
        return self

    @classmethod
    def from_parameters(cls, P, Q, D, x_mean=None, y_mean=None):
        """Build a fitted model directly from its parameter matrices.

        Means default to zero vectors of the matching widths.  Loadings
        must have orthonormal columns (within 1e-8 in Frobenius norm).
        """
        P = check_matrix(P, "P")
        Q = check_matrix(Q, "Q")
        D = np.asarray(D, dtype=float)
        l = P.shape[1]
        if Q.shape[1] != l:
            raise DimensionError(
                f"P has {l} components but Q has {Q.shape[1]}"
            )
        for name, mat in (("P", P), ("Q", Q)):
            defect = float(np.linalg.norm(mat.T @ mat - np.eye(l)))
            if defect > LOADING_ORTHONORMALITY_TOL:
                raise ValidationError(
                    f"{name} columns are not orthonormal "
                    f"(defect {defect:.3e})"
                )
        expected = (l,) if D.ndim == 1 else (l, l)
        if D.shape != expected:
            raise DimensionError(
                f"D has shape {D.shape}, expected {expected}"
            )
        if x_mean is None:
            x_mean = np.zeros(P.shape[0])
        if y_mean is None:
            y_mean = np.zeros(Q.shape[0])
        model = cls()
        return model._set_fit_state(P, Q, D, x_mean, y_mean)


class PLSCrossCovariance(_BasePLS):
    """PLS estimator solving the score cross-covariance maximization.

    Centers both blocks at fit time, takes the leading singular triplets
    of the pooled cross-covariance matrix as loadings, and fits the
    diagonal inner relation on the resulting scores.

    Parameters
    ----------
    n_components : int, default=2
        Number of latent components to extract.
    """

    _solver = "svd"

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, Y):
        X = check_matrix(X, "X")
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        Y = check_matrix(Y, "Y")
        check_same_rows(X, Y)
        n, m = X.shape
        p = Y.shape[1]
        if not 1 <= self.n_components <= min(n, m, p):
            raise DimensionError(
                f"n_components={self.n_components} must be in "
                f"[1, {min(n, m, p)}] for n={n}, m={m}, p={p}"
            )
        x_centered, x_mean = center_columns(X)
        y_centered, y_mean = center_columns(Y)
        P, Q, D = fit_cross_covariance(x_centered, y_centered,
                                       self.n_components)
        return self._set_fit_state(P, Q, D, x_mean, y_mean)

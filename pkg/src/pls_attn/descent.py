"""PLS as an orthogonality-constrained regression minimized by descent.

Instead of maximizing score cross-covariance, fit loadings P, Q and an
inner relation D by minimizing

    0.5 * (|X P D - Y Q|^2  +  alpha |X P P' - X|^2  +  beta |Y Q Q' - Y|^2)

over orthonormal-column P and Q, by gradient descent with the gradients
projected onto the Stiefel tangent space and the iterates retracted back
onto the manifold by QR orthonormalization.  D may be constrained to a
diagonal (stored as a vector) or left as a general square matrix.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConfigError,
    DegeneracyError,
    DimensionError,
    NumericalError,
)
from .linalg import qr_orthonormalize
from .pls import _BasePLS, fit_cross_covariance
from .validation import (
    center_columns,
    check_centered,
    check_matrix,
    check_same_rows,
)

logger = logging.getLogger(__name__)

D_MODES = ("diagonal", "general")
INIT_MODES = ("random", "warm")


@dataclass(frozen=True)
class LossConfig:
    """Weights of the two reconstruction penalties."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not np.isfinite(value) or value < 0:
                raise ConfigError(
                    f"{name} must be finite and non-negative, got {value}"
                )


@dataclass(frozen=True)
class OptimizerConfig:
    """Descent hyper-parameters.

    ``step_size`` is the base step retried from scratch every iteration;
    backtracking multiplies it by ``backtracking_factor`` up to
    ``max_halvings`` times until the loss does not increase.
    """

    step_size: float = 1e-2
    max_iters: int = 5000
    grad_tol: float = 1e-8
    backtracking_factor: float = 0.5
    max_halvings: int = 60
    d_mode: str = "diagonal"
    seed: int = 42

    def __post_init__(self):
        if not np.isfinite(self.step_size) or self.step_size <= 0:
            raise ConfigError(f"step_size must be positive, got {self.step_size}")
        if self.max_iters < 0:
            raise ConfigError(f"max_iters must be >= 0, got {self.max_iters}")
        if not np.isfinite(self.grad_tol) or self.grad_tol <= 0:
            raise ConfigError(f"grad_tol must be positive, got {self.grad_tol}")
        if not 0 < self.backtracking_factor < 1:
            raise ConfigError(
                "backtracking_factor must lie in (0, 1), got "
                f"{self.backtracking_factor}"
            )
        if self.max_halvings < 0:
            raise ConfigError(
                f"max_halvings must be >= 0, got {self.max_halvings}"
            )
        if self.d_mode not in D_MODES:
            raise ConfigError(
                f"d_mode must be one of {D_MODES}, got {self.d_mode!r}"
            )


@dataclass
class DescentTrace:
    """Per-iteration history of a descent run.

    All arrays have one entry per visited iterate (initial point
    included), so ``losses[k]`` belongs to the same iterate as
    ``grad_norms[k]`` and the two orthogonality drifts.
    """

    losses: np.ndarray
    grad_norms: np.ndarray
    drift_p: np.ndarray
    drift_q: np.ndarray
    iterations: int
    converged: bool
    stalled: bool

    @property
    def final_grad_norm(self) -> float:
        return float(self.grad_norms[-1])

    def write_csv(self, path) -> None:
        """Dump the trace as CSV with columns iteration, loss, grad_norm,
        drift_p, drift_q (full precision)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss", "grad_norm",
                             "drift_p", "drift_q"])
            for i in range(len(self.losses)):
                writer.writerow([
                    i,
                    repr(float(self.losses[i])),
                    repr(float(self.grad_norms[i])),
                    repr(float(self.drift_p[i])),
                    repr(float(self.drift_q[i])),
                ])


def _check_point(X, Y, P, Q, D):
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    P = check_matrix(P, "P")
    Q = check_matrix(Q, "Q")
    D = np.asarray(D, dtype=float)
    check_same_rows(X, Y)
    l = P.shape[1]
    if Q.shape[1] != l:
        raise DimensionError(
            f"P has {l} columns but Q has {Q.shape[1]}"
        )
    if X.shape[1] != P.shape[0]:
        raise DimensionError(
            f"X has {X.shape[1]} columns but P has {P.shape[0]} rows"
        )
    if Y.shape[1] != Q.shape[0]:
        raise DimensionError(
            f"Y has {Y.shape[1]} columns but Q has {Q.shape[0]} rows"
        )
    if D.ndim == 1:
        if D.shape[0] != l:
            raise DimensionError(f"diagonal D has length {D.shape[0]}, expected {l}")
    elif D.ndim == 2:
        if D.shape != (l, l):
            raise DimensionError(f"D has shape {D.shape}, expected ({l}, {l})")
    else:
        raise DimensionError(f"D must be 1-D or 2-D, got ndim={D.ndim}")
    return X, Y, P, Q, D


def _residuals(X, Y, P, Q, D, cfg: LossConfig):
    t = X @ P
    td = t * D if D.ndim == 1 else t @ D
    res = td - Y @ Q
    e = (t @ P.T - X) if cfg.alpha != 0 else None
    f = ((Y @ Q) @ Q.T - Y) if cfg.beta != 0 else None
    return res, e, f


def loss_eval(X, Y, P, Q, D, cfg: LossConfig) -> float:
    """Evaluate the reconstruction-augmented regression loss.

    ``D`` may be a length-l vector (diagonal mode) or an l-by-l matrix.
    Frobenius norms add over stacked rows, so a collection of observation
    pairs is evaluated by passing their row concatenation.
    """
    X, Y, P, Q, D = _check_point(X, Y, P, Q, D)
    res, e, f = _residuals(X, Y, P, Q, D, cfg)
    total = float(np.sum(res * res))
    if e is not None:
        total += cfg.alpha * float(np.sum(e * e))
    if f is not None:
        total += cfg.beta * float(np.sum(f * f))
    return 0.5 * total


def euclidean_gradients(X, Y, P, Q, D, cfg: LossConfig):
    """Closed-form gradients of :func:`loss_eval` in the flat metric.

    Returns ``(G_P, G_Q, G_D)``; ``G_D`` matches the layout of ``D``
    (vector in diagonal mode, matrix otherwise).  Validated against
    central finite differences in the test suite and by the ``gradcheck``
    CLI command.
    """
    X, Y, P, Q, D = _check_point(X, Y, P, Q, D)
    t = X @ P
    td = t * D if D.ndim == 1 else t @ D
    res = td - Y @ Q
    g_p = X.T @ (res * D) if D.ndim == 1 else X.T @ res @ D.T
    g_q = -(Y.T @ res)
    if cfg.alpha != 0:
        e = t @ P.T - X
        g_p = g_p + cfg.alpha * (X.T @ e @ P + e.T @ t)
    if cfg.beta != 0:
        u = Y @ Q
        f = u @ Q.T - Y
        g_q = g_q + cfg.beta * (Y.T @ f @ Q + f.T @ u)
    g_d_full = t.T @ res
    g_d = np.diag(g_d_full).copy() if D.ndim == 1 else g_d_full
    return g_p, g_q, g_d


def tangent_project(P: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Project a flat gradient onto the Stiefel tangent space at ``P``:
    ``G - P sym(P' G)``."""
    s = P.T @ G
    return G - P @ ((s + s.T) / 2.0)


def _orthogonality_drift(M: np.ndarray) -> float:
    l = M.shape[1]
    return float(np.linalg.norm(M.T @ M - np.eye(l)))


def fit_descent(X, Y, n_components: int, loss_cfg: LossConfig,
                opt_cfg: OptimizerConfig, initial=None):
    """Minimize the augmented loss over the Stiefel manifold.

    Parameters
    ----------
    X, Y : arrays of shape (n, m) and (n, p)
        Column-centered data blocks.
    n_components : int
        Latent dimension l.
    loss_cfg, opt_cfg : LossConfig, OptimizerConfig
        Penalty weights and descent hyper-parameters.
    initial : optional (P0, Q0, D0) triple
        Explicit start point (used for warm starts); defaults to
        QR-orthonormalized seeded Gaussian loadings and D = 0.

    Returns
    -------
    (P, Q, D, trace) : fitted loadings, inner relation, and the
        :class:`DescentTrace` of the run.

    Notes
    -----
    Each iteration projects the flat gradients of P and Q onto the
    Stiefel tangent space, searches a non-increasing step by backtracking
    (the candidate point is always retracted via QR before the loss is
    compared, so the recorded loss sequence never increases), then takes
    the same-sized unconstrained step on D.  Iteration stops when the
    projected gradient norm drops to ``grad_tol``, the iteration budget
    runs out, or the line search stalls.

    Raises
    ------
    NumericalError
        If the loss or a gradient turns non-finite, reporting the
        iteration index.
    """
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    check_same_rows(X, Y)
    check_centered(X, "X")
    check_centered(Y, "Y")
    n, m = X.shape
    p = Y.shape[1]
    if not 1 <= n_components <= min(m, p):
        raise DimensionError(
            f"n_components={n_components} must be in [1, {min(m, p)}] "
            f"for X with {m} and Y with {p} columns"
        )
    l = n_components

    if initial is not None:
        P, Q, D = initial
        P = check_matrix(P, "initial P")
        Q = check_matrix(Q, "initial Q")
        D = np.asarray(D, dtype=float)
        _check_point(X, Y, P, Q, D)
    else:
        rng = np.random.default_rng(opt_cfg.seed)
        P = qr_orthonormalize(rng.standard_normal((m, l)))
        Q = qr_orthonormalize(rng.standard_normal((p, l)))
        D = np.zeros(l) if opt_cfg.d_mode == "diagonal" else np.zeros((l, l))

    loss = loss_eval(X, Y, P, Q, D, loss_cfg)
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss at iteration 0: {loss}")

    losses = [loss]
    grad_norms: list[float] = []
    drift_p = [_orthogonality_drift(P)]
    drift_q = [_orthogonality_drift(Q)]
    steps = 0
    converged = False
    stalled = False
    last_step = opt_cfg.step_size / 2.0
    # Growth is capped so a single lucky step cannot fling the iterate
    # arbitrarily far; 2**10 spans three decades above the base step.
    max_step = opt_cfg.step_size * 2.0 ** 10

    while True:
        g_p, g_q, g_d = euclidean_gradients(X, Y, P, Q, D, loss_cfg)
        if not (np.all(np.isfinite(g_p)) and np.all(np.isfinite(g_q))
                and np.all(np.isfinite(g_d))):
            exc = NumericalError(f"non-finite gradient at iteration {steps}")
            exc.trace = DescentTrace(
                losses=np.array(losses),
                grad_norms=np.array(grad_norms + [float("nan")]),
                drift_p=np.array(drift_p),
                drift_q=np.array(drift_q),
                iterations=steps,
                converged=False,
                stalled=False,
            )
            raise exc
        tg_p = tangent_project(P, g_p)
        tg_q = tangent_project(Q, g_q)
        grad_norm = float(np.sqrt(
            np.sum(tg_p * tg_p) + np.sum(tg_q * tg_q) + np.sum(g_d * g_d)
        ))
        grad_norms.append(grad_norm)
        if grad_norm <= opt_cfg.grad_tol:
            converged = True
            break
        if steps >= opt_cfg.max_iters:
            break

        # Trial step doubles from the last accepted one so the search
        # adapts to the local curvature instead of re-halving from the
        # configured base every iteration.
        step = min(2.0 * last_step, max_step)
        accepted = False
        for _ in range(opt_cfg.max_halvings + 1):
            raw_p = P - step * tg_p
            raw_q = Q - step * tg_q
            # Oversized trial steps can overflow or collapse the rank;
            # both just mean "shrink and retry".
            if np.all(np.isfinite(raw_p)) and np.all(np.isfinite(raw_q)):
                try:
                    p_cand = qr_orthonormalize(raw_p)
                    q_cand = qr_orthonormalize(raw_q)
                except DegeneracyError:
                    pass
                else:
                    d_cand = D - step * g_d
                    cand_loss = loss_eval(X, Y, p_cand, q_cand, d_cand,
                                          loss_cfg)
                    if np.isfinite(cand_loss) and cand_loss <= loss:
                        accepted = True
                        break
            step *= opt_cfg.backtracking_factor
        if not accepted:
            stalled = True
            logger.debug("line search stalled at iteration %d", steps)
            break

        P, Q, D, loss = p_cand, q_cand, d_cand, cand_loss
        last_step = step
        steps += 1
        losses.append(loss)
        drift_p.append(_orthogonality_drift(P))
        drift_q.append(_orthogonality_drift(Q))
        logger.debug("iter %d loss %.6g grad %.6g", steps, loss, grad_norm)

    trace = DescentTrace(
        losses=np.array(losses),
        grad_norms=np.array(grad_norms),
        drift_p=np.array(drift_p),
        drift_q=np.array(drift_q),
        iterations=steps,
        converged=converged,
        stalled=stalled,
    )
    return P, Q, D, trace


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of :func:`mse_equivalence_check`."""

    argmin_mse: int
    argmax_dot: int
    agree: bool


def mse_equivalence_check(X, y, trials: int, seed: int = 0) -> EquivalenceReport:
    """Check that, over unit-score candidates, minimizing the squared
    error agrees with maximizing the score-response dot product.

    Samples ``trials`` random weight vectors ``w``, rescales each so the
    score ``X @ w`` has unit norm, and compares the candidate selected by
    the smallest ``|X w - y|^2`` with the one selected by the largest
    ``(X w) . y``.  Under the unit-score normalization the two objectives
    differ by a constant, so the winners coincide.
    """
    X = check_matrix(X, "X")
    y = np.asarray(y, dtype=float)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise DimensionError(f"y must be a single column, got shape {y.shape}")
    if y.shape[0] != X.shape[0]:
        raise DimensionError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]}"
        )
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if not np.any(X):
        raise DegeneracyError("X is identically zero")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((X.shape[1], trials))
    scores = X @ w
    norms = np.linalg.norm(scores, axis=0)
    if np.any(norms <= np.finfo(float).tiny):
        raise DegeneracyError("a candidate score collapsed to zero norm")
    scores /= norms
    mse = np.sum((scores - y[:, None]) ** 2, axis=0)
    dots = scores.T @ y
    argmin_mse = int(np.argmin(mse))
    argmax_dot = int(np.argmax(dots))
    return EquivalenceReport(
        argmin_mse=argmin_mse,
        argmax_dot=argmax_dot,
        agree=argmin_mse == argmax_dot,
    )


def gradient_check(seed: int = 42, n_configs: int = 20, step: float = 1e-5,
                   perturbation: float = 0.0,
                   levels: tuple = (0.0, 0.5, 10.0)):
    """Compare the closed-form gradients against central differences on
    random configurations.

    Sweeps ``n_configs`` seeded random problems across the penalty
    weights in ``levels`` and both D layouts.  The error for each
    parameter block is the largest entrywise deviation scaled by the
    larger of 1 and the largest finite-difference magnitude in that
    block.

    ``perturbation`` is a testing hook added to every analytic gradient
    entry so negative controls can verify the checker fails loudly.

    Returns
    -------
    (max_error, worst_label) : the worst scaled error and which
        configuration/parameter block produced it.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_label = ""
    for i in range(n_configs):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(2, 6))
        p = int(rng.integers(2, 6))
        l = int(rng.integers(1, min(m, p) + 1))
        cfg = LossConfig(alpha=float(levels[i % len(levels)]),
                         beta=float(levels[(i // len(levels)) % len(levels)]))
        d_mode = D_MODES[i % 2]
        X = rng.standard_normal((n, m))
        Y = rng.standard_normal((n, p))
        # Generic (non-orthonormal) points: the closed forms are polynomial
        # identities over the whole flat space, and at square orthonormal
        # loadings the reconstruction term is exactly stationary, where its
        # huge-weight curvature would swamp the finite differences.
        P = rng.standard_normal((m, l))
        Q = rng.standard_normal((p, l))
        D = rng.standard_normal(l) if d_mode == "diagonal" \
            else rng.standard_normal((l, l))
        grads = euclidean_gradients(X, Y, P, Q, D, cfg)
        # Per-block configs drop the penalty term that is exactly constant
        # in that block, so a dominant penalty weight cannot bury the
        # other blocks' differences in cancellation noise.
        blocks = {
            "P": (P, LossConfig(alpha=cfg.alpha, beta=0.0)),
            "Q": (Q, LossConfig(alpha=0.0, beta=cfg.beta)),
            "D": (D, LossConfig(alpha=0.0, beta=0.0)),
        }
        for (label, (value, fd_cfg)), analytic in zip(blocks.items(), grads):
            analytic = analytic + perturbation
            fd = np.zeros_like(value, dtype=float)
            flat = value.reshape(-1)
            fd_flat = fd.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = loss_eval(X, Y, P, Q, D, fd_cfg)
                flat[j] = orig - step
                down = loss_eval(X, Y, P, Q, D, fd_cfg)
                flat[j] = orig
                fd_flat[j] = (up - down) / (2.0 * step)
            scale = max(1.0, float(np.abs(fd).max()))
            err = float(np.abs(analytic - fd).max()) / scale
            if err > worst:
                worst = err
                worst_label = f"config {i} ({d_mode}, alpha={cfg.alpha}, " \
                              f"beta={cfg.beta}) block {label}"
    return worst, worst_label


class PLSGradientDescent(_BasePLS):
    """PLS estimator minimizing the reconstruction-augmented regression
    loss by projected gradient descent with QR retraction.

    Parameters
    ----------
    n_components : int, default=2
        Latent dimension.
    alpha, beta : float, default=0.0
        Weights of the predictor/response reconstruction penalties.
    step_size : float, default=1e-2
        Base step, re-tried each iteration before backtracking.
    max_iters : int, default=5000
        Iteration budget.
    grad_tol : float, default=1e-8
        Stop once the projected gradient norm falls below this.
    backtracking_factor : float, default=0.5
        Step multiplier applied while the loss would increase.
    max_halvings : int, default=60
        Line-search budget per iteration.
    d_mode : {"diagonal", "general"}, default="diagonal"
        Constrain the inner relation to a diagonal or fit a full matrix.
    init : {"random", "warm"}, default="random"
        Start from seeded random orthonormal loadings or from the
        cross-covariance solution.
    seed : int, default=42
        Seed for the random initialization.

    After fitting, ``trace_`` holds the :class:`DescentTrace`.
    """

    _solver = "descent"

    def __init__(self, n_components: int = 2, alpha: float = 0.0,
                 beta: float = 0.0, step_size: float = 1e-2,
                 max_iters: int = 5000, grad_tol: float = 1e-8,
                 backtracking_factor: float = 0.5, max_halvings: int = 60,
                 d_mode: str = "diagonal", init: str = "random",
                 seed: int = 42):
        self.n_components = n_components
        self.alpha = alpha
        self.beta = beta
        self.step_size = step_size
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.backtracking_factor = backtracking_factor
        self.max_halvings = max_halvings
        self.d_mode = d_mode
        self.init = init
        self.seed = seed

    def _configs(self):
        return (
            LossConfig(alpha=self.alpha, beta=self.beta),
            OptimizerConfig(
                step_size=self.step_size,
                max_iters=self.max_iters,
                grad_tol=self.grad_tol,
                backtracking_factor=self.backtracking_factor,
                max_halvings=self.max_halvings,
                d_mode=self.d_mode,
                seed=self.seed,
            ),
        )

    def fit(self, X, Y):
        if self.init not in INIT_MODES:
            raise ConfigError(
                f"init must be one of {INIT_MODES}, got {self.init!r}"
            )
        loss_cfg, opt_cfg = self._configs()
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
        initial = None
        if self.init == "warm":
            P0, Q0, D0 = fit_cross_covariance(x_centered, y_centered,
                                              self.n_components)
            if opt_cfg.d_mode == "general":
                D0 = np.diag(D0)
            initial = (P0, Q0, D0)
        P, Q, D, trace = fit_descent(x_centered, y_centered,
                                     self.n_components, loss_cfg, opt_cfg,
                                     initial=initial)
        self.trace_ = trace
        return self._set_fit_state(P, Q, D, x_mean, y_mean)

"""Dense-matrix numerics used by every other module.

Row softmax, layer normalization, QR orthonormalization with a fixed sign
convention, and the leading singular triplets of a matrix computed by
deflated power iteration on the Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DegeneracyError, DimensionError
from .validation import check_matrix

#: Convergence threshold on successive power-iteration vectors.
POWER_ITERATION_TOL = 1e-12
#: Iteration cap per singular triplet.
POWER_ITERATION_MAX_ITERS = 10_000
#: Default variance regularizer for :func:`layer_norm`.
LAYER_NORM_EPSILON = 1e-5


@dataclass(frozen=True, eq=False)
class SingularTriplets:
    """Leading singular triplets of a matrix.

    ``sigmas`` is sorted descending; the k-th columns of ``U`` and ``V``
    are the left/right singular vectors for ``sigmas[k]``.  ``degenerate``
    is set when a zero singular value forced an arbitrary (but
    deterministic) orthonormal completion of the vector set.
    """

    sigmas: np.ndarray
    U: np.ndarray
    V: np.ndarray
    degenerate: bool = False


def row_softmax(a) -> np.ndarray:
    """Softmax applied independently to each row, with max-subtraction for
    overflow safety.  Output rows sum to 1."""
    arr = check_matrix(a, "softmax input")
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def layer_norm(a, epsilon: float = LAYER_NORM_EPSILON) -> np.ndarray:
    """Normalize each row to zero mean and (near-)unit variance.

    Uses the population variance (divide by the row length) and no learned
    gain or bias.  ``epsilon`` must be non-negative; with ``epsilon == 0``
    a zero-variance row produces NaNs, so callers normalizing constant
    rows should keep it positive.
    """
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ConfigError(f"epsilon must be non-negative, got {epsilon}")
    arr = check_matrix(a, "layer_norm input")
    centered = arr - arr.mean(axis=1, keepdims=True)
    var = np.mean(centered * centered, axis=1, keepdims=True)
    return centered / np.sqrt(var + epsilon)


def qr_orthonormalize(a) -> np.ndarray:
    """Return the Q-factor of ``a`` with a deterministic sign convention.

    The columns of the result are orthonormal, span the same subspace as
    the columns of ``a``, and the implied R-factor has a non-negative
    diagonal, so an already-orthonormal input is returned unchanged (up
    to round-off).

    Raises
    ------
    DimensionError
        If ``a`` has more columns than rows.
    DegeneracyError
        If the columns of ``a`` are (numerically) linearly dependent.
    """
    arr = check_matrix(a, "qr input")
    rows, cols = arr.shape
    if rows < cols:
        raise DimensionError(
            f"qr input needs rows >= cols, got {rows}x{cols}"
        )
    q, r = np.linalg.qr(arr, mode="reduced")
    diag = np.diag(r)
    # Unpivoted QR leaves a negligible diagonal entry exactly where a
    # column is dependent on its predecessors.
    threshold = np.finfo(float).eps * max(rows, cols) * np.linalg.norm(arr)
    if np.any(np.abs(diag) <= threshold):
        k = int(np.argmax(np.abs(diag) <= threshold))
        raise DegeneracyError(
            f"qr input is rank-deficient at column {k}"
        )
    return q * np.sign(diag)


def _completion_vector(existing: list[np.ndarray], dim: int) -> np.ndarray:
    """Deterministic unit vector orthogonal to all ``existing`` vectors.

    Picks the standard basis vector with the largest residual after
    projecting out ``existing``; the residual norm is bounded below by
    1/sqrt(dim), so normalization is always safe.
    """
    best, best_norm = None, -1.0
    for i in range(dim):
        v = np.zeros(dim)
        v[i] = 1.0
        for w in existing:
            v -= (w @ v) * w
        nv = float(np.linalg.norm(v))
        if nv > best_norm:
            best, best_norm = v, nv
    return best / best_norm


def _start_vector(dim: int, existing: list[np.ndarray]) -> np.ndarray:
    """All-ones start vector, orthogonalized against found directions."""
    v = np.ones(dim) / np.sqrt(dim)
    for w in existing:
        v -= (w @ v) * w
    nv = float(np.linalg.norm(v))
    if nv > 1e-8:
        return v / nv
    # The all-ones direction lies in the span already found (happens for
    # repeated singular values); fall back to a basis completion.
    return _completion_vector(existing, dim)


def top_singular_triplets(a, n_triplets: int, *,
                          tol: float = POWER_ITERATION_TOL,
                          max_iters: int = POWER_ITERATION_MAX_ITERS
                          ) -> SingularTriplets:
    """Leading ``n_triplets`` singular triplets of ``a``.

    Runs power iteration on the Gram matrix ``a.T @ a`` with explicit
    deflation after each converged triplet.  The start vector is the
    normalized all-ones vector, iteration stops once successive vectors
    differ by at most ``tol`` (or after ``max_iters`` rounds), and each
    right vector is signed so that its largest-magnitude entry is
    positive.  Exactly zero directions are completed with deterministic
    orthonormal vectors and flagged via ``degenerate``.
    """
    arr = check_matrix(a, "svd input")
    rows, cols = arr.shape
    if not 1 <= n_triplets <= min(rows, cols):
        raise DimensionError(
            f"cannot extract {n_triplets} triplets from a {rows}x{cols} matrix"
        )
    gram = arr.T @ arr
    # Eigenvalues below this are indistinguishable from zero at double
    # precision relative to the dominant one.
    zero_scale = np.linalg.norm(gram) * np.finfo(float).eps * max(rows, cols)
    sigma_floor = np.sqrt(zero_scale)

    sigmas = np.empty(n_triplets)
    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    degenerate = False

    deflated = gram.copy()
    for k in range(n_triplets):
        v = _start_vector(cols, vs)
        if np.linalg.norm(deflated) > zero_scale:
            for _ in range(max_iters):
                w = deflated @ v
                # Keep the iterate inside the orthogonal complement of the
                # triplets already extracted.
                for prev in vs:
                    w -= (prev @ w) * prev
                norm_w = float(np.linalg.norm(w))
                if norm_w <= zero_scale:
                    # Start vector fell into the numerical null space.
                    v = _completion_vector(vs, cols)
                    break
                w /= norm_w
                if np.linalg.norm(w - v) <= tol:
                    v = w
                    break
                v = w
        av = arr @ v
        sigma = float(np.linalg.norm(av))
        if sigma > sigma_floor:
            u = av / sigma
        else:
            sigma = 0.0
            u = _completion_vector(us, rows)
            degenerate = True
        # Sign convention: dominant entry of the right vector positive.
        pivot = int(np.argmax(np.abs(v)))
        if v[pivot] < 0:
            v = -v
            u = -u
        sigmas[k] = sigma
        vs.append(v)
        us.append(u)
        deflated -= sigma * sigma * np.outer(v, v)

    order = np.argsort(-sigmas, kind="stable")
    sigmas = sigmas[order]
    u_mat = np.column_stack(us)[:, order]
    v_mat = np.column_stack(vs)[:, order]
    return SingularTriplets(sigmas=sigmas, U=u_mat, V=v_mat,
                            degenerate=degenerate)


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between the column spans of
    two orthonormal-column matrices."""
    a = check_matrix(a, "subspace basis")
    b = check_matrix(b, "subspace basis")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(
            f"bases live in different spaces: {a.shape[0]} vs {b.shape[0]}"
        )
    cosines = np.linalg.svd(a.T @ b, compute_uv=False)
    return np.arccos(np.clip(cosines, -1.0, 1.0))

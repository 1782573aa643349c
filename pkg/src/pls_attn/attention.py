"""Single-head attention blocks and the PLS bridge.

Forward-only query/key/value projection, softmax self-attention, a
residual+LayerNorm encoder block, source-target cross-attention, the
position-wise feed-forward map, softmax-free linear attention variants,
and the conversion of a fitted PLS model into value-projection-only
linear attention that reproduces its predictions exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError
from .linalg import LAYER_NORM_EPSILON, layer_norm, row_softmax
from .validation import check_matrix, check_vector

MIXING_MODES = ("identity", "unnormalized")


@dataclass(frozen=True, eq=False)
class AttentionParams:
    """Projection weights for one attention head.

    ``w_key`` and ``w_value`` act on the source sequence and must share
    their input width; ``w_query`` may take a different input width (the
    target sequence in cross-attention).  All three share the latent
    width l.
    """

    w_query: np.ndarray
    w_key: np.ndarray
    w_value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_query", check_matrix(self.w_query, "w_query"))
        object.__setattr__(self, "w_key", check_matrix(self.w_key, "w_key"))
        object.__setattr__(self, "w_value", check_matrix(self.w_value, "w_value"))
        l = self.w_query.shape[1]
        if self.w_key.shape[1] != l or self.w_value.shape[1] != l:
            raise DimensionError(
                "projection widths differ: "
                f"w_query {self.w_query.shape}, w_key {self.w_key.shape}, "
                f"w_value {self.w_value.shape}"
            )
        if self.w_key.shape[0] != self.w_value.shape[0]:
            raise DimensionError(
                "w_key and w_value must share their input width, got "
                f"{self.w_key.shape} and {self.w_value.shape}"
            )

    @property
    def latent_dim(self) -> int:
        return self.w_query.shape[1]


@dataclass(frozen=True, eq=False)
class FfnParams:
    """Two affine maps with a ReLU in between; biases broadcast per row."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w1", check_matrix(self.w1, "w1"))
        object.__setattr__(self, "b1", check_vector(self.b1, "b1"))
        object.__setattr__(self, "w2", check_matrix(self.w2, "w2"))
        object.__setattr__(self, "b2", check_vector(self.b2, "b2"))
        if self.w1.shape[1] != self.b1.shape[0]:
            raise DimensionError(
                f"b1 has length {self.b1.shape[0]}, expected {self.w1.shape[1]}"
            )
        if self.w2.shape[0] != self.w1.shape[1]:
            raise DimensionError(
                f"w2 rows {self.w2.shape[0]} must match w1 columns "
                f"{self.w1.shape[1]}"
            )
        if self.w2.shape[1] != self.b2.shape[0]:
            raise DimensionError(
                f"b2 has length {self.b2.shape[0]}, expected {self.w2.shape[1]}"
            )


def _check_source(X: np.ndarray, params: AttentionParams, name: str = "X"):
    if X.shape[1] != params.w_key.shape[0]:
        raise DimensionError(
            f"{name} has {X.shape[1]} columns but the key/value weights "
            f"expect {params.w_key.shape[0]}"
        )


def project_qkv(X, params: AttentionParams):
    """The three projections ``(X W_Q, X W_K, X W_V)`` of one sequence."""
    X = check_matrix(X, "X")
    _check_source(X, params)
    if X.shape[1] != params.w_query.shape[0]:
        raise DimensionError(
            f"X has {X.shape[1]} columns but w_query expects "
            f"{params.w_query.shape[0]}"
        )
    return X @ params.w_query, X @ params.w_key, X @ params.w_value


def self_attention_weights(X, params: AttentionParams) -> np.ndarray:
    """Row-stochastic mixing matrix ``softmax(Q K' / sqrt(l))``."""
    q, k, _ = project_qkv(X, params)
    return row_softmax((q @ k.T) / np.sqrt(params.latent_dim))


def self_attention(X, params: AttentionParams) -> np.ndarray:
    """Scaled dot-product self-attention of one sequence."""
    q, k, v = project_qkv(X, params)
    weights = row_softmax((q @ k.T) / np.sqrt(params.latent_dim))
    return weights @ v


def linear_attention(X, params: AttentionParams, mixing: str) -> np.ndarray:
    """Softmax-free attention.

    ``mixing="unnormalized"`` keeps the raw scaled score matrix as the
    mixing map; ``mixing="identity"`` drops mixing entirely and returns
    the value projection ``X W_V``.
    """
    if mixing not in MIXING_MODES:
        raise ConfigError(f"mixing must be one of {MIXING_MODES}, got {mixing!r}")
    X = check_matrix(X, "X")
    _check_source(X, params)
    if mixing == "identity":
        return X @ params.w_value
    q, k, v = project_qkv(X, params)
    return ((q @ k.T) / np.sqrt(params.latent_dim)) @ v


def encoder_block(X, params: AttentionParams,
                  epsilon: float = LAYER_NORM_EPSILON) -> np.ndarray:
    """Self-attention with a residual connection and layer normalization.

    The residual addition requires the latent width to equal the input
    width.
    """
    X = check_matrix(X, "X")
    if params.latent_dim != X.shape[1]:
        raise DimensionError(
            f"residual connection needs latent width {params.latent_dim} "
            f"to equal the input width {X.shape[1]}"
        )
    return layer_norm(self_attention(X, params) + X, epsilon)


def cross_attention_weights(X_f, Y, params: AttentionParams) -> np.ndarray:
    """Row-stochastic source-target mixing
    ``softmax(Y W_Q (X_f W_K)' / sqrt(l))``."""
    X_f = check_matrix(X_f, "X_f")
    Y = check_matrix(Y, "Y")
    _check_source(X_f, params, "X_f")
    if Y.shape[1] != params.w_query.shape[0]:
        raise DimensionError(
            f"Y has {Y.shape[1]} columns but w_query expects "
            f"{params.w_query.shape[0]}"
        )
    q = Y @ params.w_query
    k = X_f @ params.w_key
    return row_softmax((q @ k.T) / np.sqrt(params.latent_dim))


def cross_attention(X_f, Y, params: AttentionParams) -> np.ndarray:
    """Source-target attention: queries from ``Y``, keys and values from
    the encoded source ``X_f``."""
    weights = cross_attention_weights(X_f, Y, params)
    return weights @ (check_matrix(X_f, "X_f") @ params.w_value)


def ffn(X, params: FfnParams) -> np.ndarray:
    """Position-wise feed-forward map ``max(0, X W1 + b1) W2 + b2``."""
    X = check_matrix(X, "X")
    if X.shape[1] != params.w1.shape[0]:
        raise DimensionError(
            f"X has {X.shape[1]} columns but w1 expects {params.w1.shape[0]}"
        )
    return np.maximum(X @ params.w1 + params.b1, 0.0) @ params.w2 + params.b2


def pls_to_attention(model):
    """Express a fitted PLS model as value-projection-only attention.

    Returns ``(params, "identity")`` where the value weights carry the
    whole fitted linear map ``P diag(D) Q'`` and the query/key weights
    are zero placeholders (identity mixing never reads them).  For
    centered inputs, ``linear_attention(X_c, params, "identity")``
    plus the stored response mean reproduces ``model.predict``.
    """
    coef = model.coef_
    zeros = np.zeros_like(coef)
    params = AttentionParams(w_query=zeros, w_key=zeros, w_value=coef)
    return params, "identity"

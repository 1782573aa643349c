"""Partial least squares, its constrained gradient-descent reformulation,
and single-head attention blocks with an exact PLS-to-attention bridge."""

from .attention import (
    AttentionParams,
    FfnParams,
    cross_attention,
    cross_attention_weights,
    encoder_block,
    ffn,
    linear_attention,
    pls_to_attention,
    project_qkv,
    self_attention,
    self_attention_weights,
)
from .dataio import Dataset, center, load_csv, load_model, save_model, write_csv
from .descent import (
    DescentTrace,
    EquivalenceReport,
    LossConfig,
    OptimizerConfig,
    PLSGradientDescent,
    euclidean_gradients,
    fit_descent,
    gradient_check,
    loss_eval,
    mse_equivalence_check,
    tangent_project,
)
from .exceptions import (
    CenteringError,
    ConfigError,
    DegeneracyError,
    DimensionError,
    NumericalError,
    ParseError,
    PlsAttnError,
    UnsupportedVersionError,
    ValidationError,
)
from .linalg import (
    SingularTriplets,
    layer_norm,
    principal_angles,
    qr_orthonormalize,
    row_softmax,
    top_singular_triplets,
)
from .pls import PLSCrossCovariance, fit_cross_covariance, fit_diagonal

__version__ = "0.1.0"

__all__ = [
    "AttentionParams",
    "CenteringError",
    "ConfigError",
    "Dataset",
    "DegeneracyError",
    "DescentTrace",
    "DimensionError",
    "EquivalenceReport",
    "FfnParams",
    "LossConfig",
    "NumericalError",
    "OptimizerConfig",
    "PLSCrossCovariance",
    "PLSGradientDescent",
    "ParseError",
    "PlsAttnError",
    "SingularTriplets",
    "UnsupportedVersionError",
    "ValidationError",
    "center",
    "cross_attention",
    "cross_attention_weights",
    "encoder_block",
    "euclidean_gradients",
    "ffn",
    "fit_cross_covariance",
    "fit_descent",
    "fit_diagonal",
    "gradient_check",
    "layer_norm",
    "linear_attention",
    "load_csv",
    "load_model",
    "loss_eval",
    "mse_equivalence_check",
    "pls_to_attention",
    "principal_angles",
    "project_qkv",
    "qr_orthonormalize",
    "row_softmax",
    "save_model",
    "self_attention",
    "self_attention_weights",
    "tangent_project",
    "top_singular_triplets",
    "write_csv",
]

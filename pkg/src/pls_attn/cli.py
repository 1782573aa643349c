"""Command-line interface.

Subcommands: ``fit``, ``predict``, ``gradcheck``, ``compare`` and
``attn-demo``.  Exit codes follow a fixed contract: 0 on success, 1 for
input/shape/configuration problems, 2 for numerical failures.  Log
verbosity is controlled by the ``PLS_ATTN_LOG`` environment variable
(``quiet``, ``info`` or ``trace``); logs go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .attention import (
    AttentionParams,
    FfnParams,
    cross_attention,
    cross_attention_weights,
    encoder_block,
    ffn,
    linear_attention,
    pls_to_attention,
    self_attention,
    self_attention_weights,
)
from .descent import (
    LossConfig,
    PLSGradientDescent,
    gradient_check,
    loss_eval,
)
from .exceptions import NumericalError, ValidationError
from .linalg import principal_angles
from .pls import PLSCrossCovariance
from .dataio import load_csv, load_model, save_model, write_csv

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO,
               "trace": logging.DEBUG}

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _configure_logging():
    level = _LOG_LEVELS.get(os.environ.get("PLS_ATTN_LOG", "quiet"),
                            logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    # basicConfig is a no-op once the root logger has handlers, so the
    # package logger level is set explicitly on every invocation.
    logging.getLogger("pls_attn").setLevel(level)


def _add_data_flags(p, need_y=True):
    p.add_argument("--x", required=True, help="predictor CSV path")
    if need_y:
        p.add_argument("--y", required=True, help="response CSV path")
    p.add_argument("--header", action="store_true",
                   help="skip one header row in input CSVs")


def _add_solver_flags(p):
    p.add_argument("--components", type=int, default=2,
                   help="latent dimension l (default 2)")
    p.add_argument("--alpha", type=float, default=0.0,
                   help="predictor reconstruction weight (default 0)")
    p.add_argument("--beta", type=float, default=0.0,
                   help="response reconstruction weight (default 0)")
    p.add_argument("--lr", type=float, default=1e-2,
                   help="descent base step size (default 1e-2)")
    p.add_argument("--max-iters", type=int, default=5000,
                   help="descent iteration budget (default 5000)")
    p.add_argument("--grad-tol", type=float, default=1e-8,
                   help="projected-gradient stopping tolerance (default 1e-8)")
    p.add_argument("--seed", type=int, default=42,
                   help="random seed (default 42)")
    p.add_argument("--d-mode", choices=("diagonal", "general"),
                   default="diagonal", help="inner-relation layout")
    p.add_argument("--init", choices=("random", "warm"), default="random",
                   help="descent start: seeded random or the SVD solution")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pls-attn",
                     description="PLS by cross-covariance SVD or "
                                 "constrained gradient descent, plus "
                                 "single-head attention demos.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_fit = sub.add_parser("fit", help="fit a model and write it as JSON")
    _add_data_flags(p_fit)
    _add_solver_flags(p_fit)
    p_fit.add_argument("--solver", choices=("svd", "descent"), default="svd")
    p_fit.add_argument("--model", required=True, help="output model path")
    p_fit.add_argument("--hex-floats", action="store_true",
                       help="serialize floats as hexadecimal text")
    p_fit.add_argument("--trace", default=None,
                       help="write the descent trace CSV here")

    p_pred = sub.add_parser("predict", help="predict responses from a model")
    _add_data_flags(p_pred, need_y=False)
    p_pred.add_argument("--model", required=True, help="model JSON path")
    p_pred.add_argument("--out", required=True, help="output CSV path")
    p_pred.add_argument("--hex-floats", action="store_true",
                        help="write predictions as hexadecimal float text")

    p_grad = sub.add_parser("gradcheck",
                            help="validate gradients against central "
                                 "finite differences")
    p_grad.add_argument("--seed", type=int, default=42)
    p_grad.add_argument("--alpha", type=float, default=None,
                        help="check only this predictor-penalty weight "
                             "instead of the default sweep")
    p_grad.add_argument("--beta", type=float, default=None,
                        help="check only this response-penalty weight "
                             "instead of the default sweep")
    p_grad.add_argument("--corrupt", type=float, default=0.0,
                        help="testing hook: offset added to every "
                             "analytic gradient entry")

    p_cmp = sub.add_parser("compare",
                           help="fit both solvers and report objectives, "
                                "subspace angles, and bridge residuals")
    _add_data_flags(p_cmp)
    _add_solver_flags(p_cmp)
    p_cmp.add_argument("--out", required=True, help="CSV report path")

    p_demo = sub.add_parser("attn-demo",
                            help="run encoder, cross-attention and FFN "
                                 "blocks with seeded random weights")
    _add_data_flags(p_demo)
    p_demo.add_argument("--components", type=int, default=2,
                        help="latent dimension l; the encoder residual "
                             "requires l to equal the X column count")
    p_demo.add_argument("--seed", type=int, default=42)
    p_demo.add_argument("--out", required=True,
                        help="directory for the intermediate CSV matrices")
    p_demo.add_argument("--zero-weights", action="store_true",
                        help="use all-zero weights instead of random ones")
    return parser


def _load_xy(args):
    X = load_csv(args.x, has_header=args.header)
    Y = load_csv(args.y, has_header=args.header)
    return X, Y


def _make_estimator(args, solver):
    if solver == "svd":
        return PLSCrossCovariance(n_components=args.components)
    return PLSGradientDescent(
        n_components=args.components,
        alpha=args.alpha,
        beta=args.beta,
        step_size=args.lr,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        d_mode=args.d_mode,
        init=args.init,
        seed=args.seed,
    )


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a - b) ** 2)))


def cmd_fit(args) -> int:
    X, Y = _load_xy(args)
    model = _make_estimator(args, args.solver)
    try:
        model.fit(X, Y)
    except NumericalError as exc:
        if exc.trace is not None:
            trace_path = args.trace or f"{args.model}.trace.csv"
            exc.trace.write_csv(trace_path)
            print(f"partial descent trace written to {trace_path}",
                  file=sys.stderr)
        raise
    save_model(model, args.model, hex_floats=args.hex_floats)
    print(f"training RMSE: {_rmse(model.predict(X), Y):.6g}")
    if args.solver == "descent":
        trace = model.trace_
        print(f"final loss: {trace.losses[-1]:.6g}")
        print(f"iterations: {trace.iterations}")
        if args.trace:
            trace.write_csv(args.trace)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X = load_csv(args.x, has_header=args.header)
    predictions = model.predict(X)
    write_csv(predictions, args.out, hex_floats=args.hex_floats)
    print(f"wrote {predictions.shape[0]}x{predictions.shape[1]} "
          f"predictions to {args.out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    kwargs = {}
    if args.alpha is not None or args.beta is not None:
        kwargs["levels"] = (args.alpha or 0.0, args.beta or 0.0)
    worst, label = gradient_check(seed=args.seed,
                                  perturbation=args.corrupt, **kwargs)
    print(f"max relative gradient error: {worst:.6g}")
    if worst > 1e-4:
        print(f"gradient check FAILED at {label}", file=sys.stderr)
        raise NumericalError(
            f"gradient mismatch {worst:.6g} exceeds 1e-4 at {label}"
        )
    return EXIT_OK


def _bridge_residual(model, X) -> float:
    params, mixing = pls_to_attention(model)
    bridged = linear_attention(X - model.x_mean_, params, mixing) + model.y_mean_
    return float(np.abs(bridged - model.predict(X)).max())


def cmd_compare(args) -> int:
    X, Y = _load_xy(args)
    svd_model = _make_estimator(args, "svd").fit(X, Y)
    descent_model = _make_estimator(args, "descent").fit(X, Y)

    x_centered = X - svd_model.x_mean_
    y_centered = Y - svd_model.y_mean_
    plain = LossConfig(alpha=0.0, beta=0.0)
    rows = [
        ("objective_svd",
         loss_eval(x_centered, y_centered, svd_model.P_, svd_model.Q_,
                   svd_model.D_, plain)),
        ("objective_descent",
         loss_eval(x_centered, y_centered, descent_model.P_,
                   descent_model.Q_, descent_model.D_, plain)),
    ]
    angles_p = principal_angles(svd_model.P_, descent_model.P_)
    angles_q = principal_angles(svd_model.Q_, descent_model.Q_)
    rows += [(f"angle_p_{k + 1}", a) for k, a in enumerate(angles_p)]
    rows += [(f"angle_q_{k + 1}", a) for k, a in enumerate(angles_q)]
    rows += [
        ("bridge_residual_svd", _bridge_residual(svd_model, X)),
        ("bridge_residual_descent", _bridge_residual(descent_model, X)),
    ]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for name, value in rows:
            fh.write(f"{name},{float(value)!r}\n")
    for name, value in rows:
        print(f"{name}: {float(value):.6g}")
    return EXIT_OK


def cmd_attn_demo(args) -> int:
    X, Y = _load_xy(args)
    n, m = X.shape
    p = Y.shape[1]
    l = args.components
    rng = np.random.default_rng(args.seed)

    def draw(shape):
        if args.zero_weights:
            return np.zeros(shape)
        return rng.standard_normal(shape)

    encoder_params = AttentionParams(w_query=draw((m, l)),
                                     w_key=draw((m, l)),
                                     w_value=draw((m, l)))
    # Raises a dimension error naming the residual constraint when l != m.
    x_f = encoder_block(X, encoder_params)
    cross_params = AttentionParams(w_query=draw((p, l)),
                                   w_key=draw((m, l)),
                                   w_value=draw((m, l)))
    mixed = cross_attention(x_f, Y, cross_params)
    ffn_params = FfnParams(w1=draw((l, 2 * l)), b1=draw((2 * l,)),
                           w2=draw((2 * l, l)), b2=draw((l,)))
    out = ffn(mixed, ffn_params)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(x_f, out_dir / "encoder.csv")
    write_csv(mixed, out_dir / "cross_attention.csv")
    write_csv(out, out_dir / "ffn.csv")

    self_w = self_attention_weights(X, encoder_params)
    cross_w = cross_attention_weights(x_f, Y, cross_params)
    perm = rng.permutation(n)
    equivariance = float(np.abs(
        self_attention(X[perm], encoder_params)
        - self_attention(X, encoder_params)[perm]
    ).max())
    print(f"self-attention row-sum deviation: "
          f"{np.abs(self_w.sum(axis=1) - 1.0).max():.6g}")
    print(f"cross-attention row-sum deviation: "
          f"{np.abs(cross_w.sum(axis=1) - 1.0).max():.6g}")
    print(f"permutation equivariance residual: {equivariance:.6g}")
    print(f"encoder row-mean max: {np.abs(x_f.mean(axis=1)).max():.6g}")
    print(f"wrote encoder.csv, cross_attention.csv, ffn.csv to {out_dir}")
    return EXIT_OK


_COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
    "compare": cmd_compare,
    "attn-demo": cmd_attn_demo,
}


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = _COMMANDS[args.command]
    try:
        return command(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        name = getattr(exc, "filename", None)
        where = f" ({name})" if name else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()

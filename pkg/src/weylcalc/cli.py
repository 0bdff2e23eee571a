"""Command-line entry point: ``weylcalc <subcommand> ...``.

Every subcommand prints JSON (or CSV where noted) to stdout or ``--out``.
Failures print ``{"error": ..., "message": ...}`` and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import WeylcalcError
from .hermite import HermiteBasisSpec, quantize
from .index import check_ellipticity, index_integral, operator_index_oracle
from .matsym import MatrixSymbol
from .parametrix import default_grid, matrix_parametrix_eval, verify_left_inverse
from .spectral import eigensolve_hermitian, operator_series_matrix, weyl_constant, weyl_gamma
from .sweeps import ExperimentConfig, run_counting_sweep, run_eigenvalue_sweep
from .symbol import (PolySymbol, sharp_power_closed_sum, sharp_power_iterated, sharp_term,
                     star)
from .weights import EntireSeries, WeightSequence, check_conditions


class CliError(WeylcalcError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _load_json(arg: str):
    """Inline JSON (starting with ``{``) or a path; ``-`` reads stdin."""
    text = arg.strip()
    if text.startswith("{"):
        return json.loads(text)
    if text == "-":
        return json.load(sys.stdin)
    return json.loads(Path(arg).read_text())


def _load_symbol(arg: str, dim: int | None) -> PolySymbol:
    sym = PolySymbol.from_dict(_load_json(arg))
    if dim is not None and sym.dim != dim:
        raise CliError(f"symbol has dim {sym.dim} but --dim {dim} was given")
    return sym


def _load_matrix(arg: str, dim: int | None) -> MatrixSymbol:
    A = MatrixSymbol.from_dict(_load_json(arg))
    if dim is not None and A.dim != dim:
        raise CliError(f"symbol has dim {A.dim} but --dim {dim} was given")
    return A


def _weights_from_args(args) -> WeightSequence:
    if getattr(args, "weights", None):
        return WeightSequence.from_config(_load_json(args.weights))
    cfg = {"kind": args.kind}
    if args.kind == "factorial_power":
        cfg["s"] = args.s if args.s is not None else 2
    elif args.kind == "self_power":
        cfg.update(h=args.h, s=args.s if args.s is not None else 2, m=args.m)
    else:
        if not args.values:
            raise CliError("--values is required for explicit weights")
        cfg["values"] = args.values
    return WeightSequence.from_config(cfg)


# subcommands ---------------------------------------------------------------------

def cmd_star(args):
    a, b = _load_symbol(args.a, args.dim), _load_symbol(args.b, args.dim)
    out = sharp_term(a, b, args.layer) if args.layer is not None else star(a, b)
    return out.to_dict()


def cmd_power(args):
    a = _load_symbol(args.a, args.dim)
    if args.method == "iterated":
        return sharp_power_iterated(a, args.n).to_dict()
    closed = sharp_power_closed_sum(a, args.n)
    if args.method == "both":
        it = sharp_power_iterated(a, args.n)
        if it != closed:
            raise WeylcalcError("closed-form and iterated powers differ")
    return closed.to_dict()


def _op_to_json(op) -> dict:
    return {"dim": op.dim, "N_dom": op.domain.max_degree, "N_cod": op.codomain.max_degree,
            "ordering": "grlex", "re": np.real(op.entries).tolist(), "im": np.imag(op.entries).tolist()}


def cmd_quantize(args):
    a = _load_symbol(args.a, args.dim)
    op = quantize(a, HermiteBasisSpec(a.dim, args.hermite_n))
    if args.interior:
        op = op.interior(max(a.degree, 0))
    if args.emit == "csv":
        return op.to_csv()
    return _op_to_json(op)


def _spectrum(build, N: int, step: int = 4):
    ref = eigensolve_hermitian(build(N - step)) if N - step > 0 else None
    return eigensolve_hermitian(build(N), reference=ref)


def cmd_spectrum(args):
    a = _load_symbol(args.a, args.dim)
    m = max(a.degree, 0)
    res = _spectrum(lambda N: quantize(a, HermiteBasisSpec(a.dim, N)).interior(m), args.hermite_n)
    res.source = f"interior block of quantized symbol, N={args.hermite_n}"
    return res.to_dict()


def cmd_series_op(args):
    a = _load_symbol(args.a, args.dim)
    P = EntireSeries(_weights_from_args(args))
    res = _spectrum(lambda N: operator_series_matrix(a, P, HermiteBasisSpec(a.dim, N), n_terms=args.terms),
                    args.hermite_n)
    res.source = f"operator series, N={args.hermite_n}"
    return res.to_dict()


def cmd_counting(args):
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    if args.sweep == "eigen":
        return run_eigenvalue_sweep(cfg)
    return run_counting_sweep(cfg)


def cmd_weyl_const(args):
    d = args.dim or 1
    Phi = _load_symbol(args.principal, d) if args.principal else 1.0
    return {"d": d, "m": args.m, "c": weyl_constant(d, args.m, Phi), "gamma": weyl_gamma(d, args.m, Phi)}


def cmd_parametrix(args):
    J = args.terms if args.terms is not None else 3
    doc = _load_json(args.a)
    if "entries" in doc:
        A = MatrixSymbol.from_dict(doc)
        grid = default_grid(A.dim)
        res = matrix_parametrix_eval(A, grid, J, variant=args.variant)
        err = res.max_composition_error()
        tol = args.tol if args.tol is not None else 1e-8
        if err > tol:
            raise WeylcalcError(f"matrix composition residual {err:.3e} exceeds {tol:g}")
        return {"J": J, "variant": args.variant, "points": len(grid), "max_residual": err,
                "max_condition": float(res.condition.max())}
    a = PolySymbol.from_dict(doc)
    return verify_left_inverse(a, J).to_dict()


def cmd_index(args):
    A = _load_matrix(args.symbol, args.dim)
    s = args.radius if args.radius is not None else 1.0
    tol = args.tol if args.tol is not None else 1e-3
    rep = check_ellipticity(A, s, seed=args.seed)
    if not rep.ok:
        raise WeylcalcError(f"symbol fails the ellipticity check at radius {s}")
    out = {"integral": None, "rounded": None, "oracle": None, "agree": None,
           "ellipticity": rep.to_dict()}
    if args.method in ("integral", "both"):
        r = index_integral(A, s, check=False)
        out.update(integral=r.value, rounded=r.rounded)
    if args.method in ("oracle", "both"):
        out["oracle"] = operator_index_oracle(A, args.hermite_n).index
    if args.method == "both":
        out["agree"] = bool(abs(out["integral"] - out["oracle"]) <= tol)
        if not out["agree"]:
            raise WeylcalcError(f"integral {out['integral']} and oracle {out['oracle']} disagree")
    return out


def cmd_check_weights(args):
    seq = _weights_from_args(args)
    return check_conditions(seq, args.pmax, s=args.stk_s, m=args.stk_m, C0=args.c0).to_dict()


# parser ----------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--dim", type=int, help="phase-space half dimension d")
    p.add_argument("--radius", type=float, help="sphere radius for index computations")
    p.add_argument("--hermite-n", type=int, default=20, help="Hermite degree cutoff N")
    p.add_argument("--terms", type=int, help="number of series or parametrix terms")
    p.add_argument("--tol", type=float, help="tolerance for internal assertions")
    p.add_argument("--emit", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    return p


def _weight_flags(p):
    p.add_argument("--weights", help="weight config JSON (file or inline)")
    p.add_argument("--kind", choices=("factorial_power", "self_power", "explicit"), default="self_power")
    p.add_argument("--s", type=float)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--values", nargs="+")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="weylcalc", description="Weyl symbol calculus toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("star", parents=[common], help="sharp product of two symbols")
    p.add_argument("a"); p.add_argument("b")
    p.add_argument("--layer", type=int, help="only this layer of the expansion")
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("power", parents=[common], help="sharp power of a symbol")
    p.add_argument("a")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=("iterated", "closed", "both"), default="both")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("quantize", parents=[common], help="Hermite matrix of a symbol")
    p.add_argument("a")
    p.add_argument("--interior", action="store_true", help="emit only the exact interior block")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues of a quantized real symbol")
    p.add_argument("a")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("series-op", parents=[common], help="eigenvalues of P(a^w)")
    p.add_argument("a")
    _weight_flags(p)
    p.set_defaults(func=cmd_series_op)

    p = sub.add_parser("counting", parents=[common], help="counting or eigenvalue sweep to CSV")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--sweep", choices=("counting", "eigen"), default="counting")
    p.set_defaults(func=cmd_counting)

    p = sub.add_parser("weyl-const", parents=[common], help="Weyl constant c and gamma")
    p.add_argument("--principal", help="principal symbol JSON; default is Phi = 1")
    p.add_argument("--m", type=float, default=2.0)
    p.set_defaults(func=cmd_weyl_const)

    p = sub.add_parser("parametrix", parents=[common], help="verify the parametrix recursion")
    p.add_argument("a", help="scalar symbol JSON or matrix symbol JSON")
    p.add_argument("--variant", choices=("left", "right"), default="left")
    p.set_defaults(func=cmd_parametrix)

    p = sub.add_parser("index", parents=[common], help="index of an elliptic matrix symbol")
    p.add_argument("--symbol", required=True)
    p.add_argument("--method", choices=("integral", "oracle", "both"), default="both")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("check-weights", parents=[common], help="weight sequence conditions")
    _weight_flags(p)
    p.add_argument("--pmax", type=int, default=50)
    p.add_argument("--stk-s", type=float, help="s in the stk inequality")
    p.add_argument("--stk-m", type=float, help="m in the stk inequality")
    p.add_argument("--c0", type=float, default=1.0)
    p.set_defaults(func=cmd_check_weights)
    return parser


def _emit(result, args) -> str:
    if isinstance(result, str):
        text = result
    else:
        text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def main(argv=None) -> int:
    threads = os.environ.get("WEYLCALC_THREADS")
    if threads:
        # cap BLAS pools too; the sweeps read the variable themselves
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    try:
        args = build_parser().parse_args(argv)
        _emit(args.func(args), args)
        return 0
    except (WeylcalcError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        msg = f"missing field {exc.args[0]!r}" if isinstance(exc, KeyError) else str(exc)
        sys.stdout.write(json.dumps({"error": type(exc).__name__, "message": msg}) + "\n")
        return 1


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()

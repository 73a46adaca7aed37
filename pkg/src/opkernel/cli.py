"""Command-line front end.

Each command reads a JSON input file, runs the corresponding construction,
and prints a JSON report to stdout. Reports echo the command, the input
digest, every tolerance and seed used, and carry a ``pass`` flag where a
numeric check applies, so that identical invocations reproduce identical
bytes.

Exit codes:
    0  success
    2  unreadable or structurally malformed input file
    3  domain validation failure (kernel not positive definite, operator
       not a contraction, POVM invalid, broken Hermitian symmetry)
    4  a numeric tolerance check failed
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dilation, factorization, gaussian, io, kernel
from .kernel import ValidationError

__all__ = ["EXIT_OK", "EXIT_PARSE", "EXIT_TOLERANCE", "EXIT_VALIDATION", "main", "run"]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_TOLERANCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opkernel",
        description=(
            "Operator-valued positive definite kernels: checks, minimal "
            "factorizations, dilation constructions, and Gaussian sampling."
        ),
        epilog=(
            "Exit codes: 0 success, 2 malformed input, 3 validation failure, "
            "4 tolerance failure."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-pd", help="test a kernel file for positive definiteness")
    p.add_argument("kernel", help="kernel JSON file")
    p.add_argument("--tol", type=float, default=kernel.DEFAULT_PD_TOL,
                   help="eigenvalue slack relative to 1 + ||G||_F (default %(default)g)")
    p.add_argument("--out", help="write the report JSON here as well")

    p = sub.add_parser("factorize", help="compute the minimal factor family of a kernel")
    p.add_argument("kernel", help="kernel JSON file")
    p.add_argument("--tol", type=float, default=factorization.DEFAULT_TRUNCATION_TOL,
                   help="relative eigenvalue truncation threshold (default %(default)g)")
    p.add_argument("--out", required=True, help="write the factor family JSON here")

    p = sub.add_parser("dilate-contraction",
                       help="power dilation A^n = V* U^n V of a contraction")
    p.add_argument("matrix", help="operator JSON file ({\"matrix\": [[[re,im],...],...]})")
    p.add_argument("--window", type=int, default=8,
                   help="largest index of the power kernel (default %(default)s)")
    p.add_argument("--tol", type=float, default=dilation.DEFAULT_POWER_TOL,
                   help="certification tolerance for the power identity (default %(default)g)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the quadratic-form check vectors (default %(default)s)")
    p.add_argument("--trials", type=int, default=5,
                   help="number of quadratic-form check vectors (default %(default)s)")
    p.add_argument("--polar", action="store_true",
                   help="replace the shift by the unitary factor of its polar decomposition")
    p.add_argument("--out", help="write the report JSON here as well")

    p = sub.add_parser("naimark", help="dilate a discrete POVM to a projection valued measure")
    p.add_argument("povm", help="POVM JSON file")
    p.add_argument("--tol", type=float, default=dilation.DEFAULT_POVM_TOL,
                   help="validation and invariant tolerance (default %(default)g)")
    p.add_argument("--out", help="write the report JSON here as well")

    p = sub.add_parser("sample",
                       help="sample the Gaussian family of a kernel and check its covariance")
    p.add_argument("kernel", help="kernel JSON file")
    p.add_argument("--samples", type=int, default=200000,
                   help="number of joint draws (default %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="stream seed (default %(default)s)")
    p.add_argument("--tol", type=float, default=None,
                   help="covariance tolerance (default 5/sqrt(samples))")
    p.add_argument("--out", help="write the report JSON here as well")
    p.add_argument("--emit-draws", help="write the draws as CSV here")
    return parser


def _report_base(command: str, in_path, tolerances: dict, seed=None) -> dict:
    report = {
        "command": command,
        "input": {"path": str(in_path), "sha256": io.file_digest(in_path)},
        "tolerances": {k: float(v) for k, v in tolerances.items()},
    }
    if seed is not None:
        report["seed"] = int(seed)
    return report


def _emit(report: dict, out_path) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")


def _cmd_check_pd(args) -> int:
    kern = io.load_kernel(args.kernel)
    verdict = kernel.is_positive_definite(kern, args.tol)
    report = _report_base("check-pd", args.kernel, {"pd_tol": args.tol})
    report["results"] = {
        "dim": kern.dim,
        "labels": list(kern.labels),
        "min_eigenvalue": verdict.min_eigenvalue,
        "gram_norm_fro": float(np.linalg.norm(kernel.block_gram(kern))),
        "positive_definite": bool(verdict.is_pd),
    }
    report["pass"] = bool(verdict.is_pd)
    _emit(report, args.out)
    return EXIT_OK if verdict.is_pd else EXIT_VALIDATION


def _cmd_factorize(args) -> int:
    kern = io.load_kernel(args.kernel)
    fact = factorization.factorize(kern, args.tol)
    io.dump_factors(fact, args.out)
    report = _report_base("factorize", args.kernel, {"truncation_tol": args.tol})
    report["results"] = {
        "dim": kern.dim,
        "labels": list(kern.labels),
        "rank": fact.rank,
        "residual": fact.residual,
        "factors_path": str(args.out),
    }
    report["pass"] = True
    _emit(report, None)
    return EXIT_OK


def _cmd_dilate_contraction(args) -> int:
    mat = io.load_matrix(args.matrix)
    dil = dilation.power_dilation(mat, args.window, args.tol, polar=args.polar)
    rng = np.random.default_rng(args.seed)
    d = dil.model.dim
    n_vectors = min(args.window, 4)
    max_dev = 0.0
    min_value = np.inf
    scale = 0.0
    for _ in range(max(args.trials, 1)):
        hs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(n_vectors)]
        tele = dilation.telescoping_quadratic(mat, hs)
        direct = dilation.gram_quadratic(mat, hs)
        max_dev = max(max_dev, abs(tele - direct))
        min_value = min(min_value, tele)
        scale = max(scale, sum(float(np.vdot(h, h).real) for h in hs))
    quad_tol = 1e-10 * (1.0 + scale)
    quad_ok = max_dev <= quad_tol and min_value >= -quad_tol
    report = _report_base(
        "dilate-contraction", args.matrix,
        {"power_tol": args.tol, "quadratic_tol": quad_tol},
        seed=args.seed,
    )
    report["results"] = {
        "dim": d,
        "window": dil.model.window,
        "spectral_norm": float(np.linalg.norm(mat, 2)),
        "rank": dil.fact.rank,
        "polar": bool(dil.polar),
        "max_power": dil.max_power,
        "power_residuals": [float(r) for r in dil.power_residuals[: dil.max_power]],
        "quadratic_check": {
            "trials": int(max(args.trials, 1)),
            "vectors_per_trial": n_vectors,
            "max_abs_deviation": float(max_dev),
            "min_value": float(min_value),
        },
    }
    report["pass"] = bool(quad_ok)
    _emit(report, args.out)
    return EXIT_OK if quad_ok else EXIT_TOLERANCE


def _cmd_naimark(args) -> int:
    povm = io.load_povm(args.povm)
    dil = dilation.naimark_dilate(povm, args.tol)
    max_compression = max(dil.compression_errors)
    ok = (
        dil.isometry_defect <= args.tol
        and dil.projection_defect <= args.tol
        and dil.projection_sum_defect <= args.tol
        and max_compression <= args.tol
    )
    report = _report_base("naimark", args.povm, {"povm_tol": args.tol})
    report["results"] = {
        "dim": povm.dim,
        "atoms": list(povm.atoms),
        "rank": dil.fact.rank,
        "isometry_defect": float(dil.isometry_defect),
        "projection_defect": float(dil.projection_defect),
        "projection_sum_defect": float(dil.projection_sum_defect),
        "compression_errors": {
            atom: float(err) for atom, err in zip(povm.atoms, dil.compression_errors)
        },
        "max_compression_error": float(max_compression),
    }
    report["pass"] = bool(ok)
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _cmd_sample(args) -> int:
    kern = io.load_kernel(args.kernel)
    if args.samples < 1:
        raise ValidationError("--samples must be at least 1")
    fact = factorization.factorize(kern)
    sampler = gaussian.build_sampler(fact, args.seed)
    tol = args.tol if args.tol is not None else 5.0 / np.sqrt(args.samples)
    table = gaussian.estimate_covariance_table(sampler, args.samples)
    pairs = {}
    max_err = 0.0
    for (s, t), est in sorted(table.items()):
        pairs[f"{s}|{t}"] = {
            "matrix": io.complex_matrix_to_pairs(est.matrix),
            "max_abs_error": float(est.max_abs_error),
            "std_error": float(est.std_error),
        }
        max_err = max(max_err, est.max_abs_error)
    if args.emit_draws:
        io.write_draws_csv(args.emit_draws, sampler, args.samples)
    ok = max_err <= tol
    report = _report_base(
        "sample", args.kernel, {"covariance_tol": float(tol)}, seed=args.seed
    )
    report["results"] = {
        "dim": kern.dim,
        "labels": list(kern.labels),
        "rank": fact.rank,
        "samples": int(args.samples),
        "algorithm": gaussian.NORMAL_ALGORITHM,
        "pairs": pairs,
        "max_abs_error": float(max_err),
    }
    report["pass"] = bool(ok)
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


_HANDLERS = {
    "check-pd": _cmd_check_pd,
    "factorize": _cmd_factorize,
    "dilate-contraction": _cmd_dilate_contraction,
    "naimark": _cmd_naimark,
    "sample": _cmd_sample,
}


def main(argv=None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except io.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run() -> None:
    """Console-script entry point."""
    raise SystemExit(main())


if __name__ == "__main__":
    run()

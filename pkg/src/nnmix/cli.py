"""Command-line front end.

Subcommands mirror the library: ``em``, ``nnrank3``, ``factorize``,
``boundary``, ``patterns``, ``family``, ``experiment``.  Matrices are read
and written in the shared text format (one row per line, comma-separated,
``p/q`` or integers for exact entries, decimals for floats).

Exit codes: 0 for success (including verdicts in/interior), 1 when the
verdict is out/boundary/outside (the payload is still written), 2 for usage
errors, 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import boundary as boundary_mod
from . import em, families, harness
from .exactla import EXACT, Matrix, format_matrix, parse_matrix
from .rank3cert import (DomainError, NotInModelError, nnrank3_membership,
                        nonneg_rank3_factorize)

EXIT_OK = 0
EXIT_NEGATIVE_VERDICT = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _read_matrix(path: str, backend: str) -> Matrix:
    """Load a matrix file; ``backend`` is auto/exact/float/promote.

    Raises ValueError on unreadable or malformed input so the dispatcher
    maps it to the usage exit code.
    """
    try:
        M = parse_matrix(Path(path).read_text())
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if backend == "exact" and M.backend != EXACT:
        raise ValueError(f"{path} holds float entries; "
                         "use --backend float or promote")
    if backend == "float":
        M = M.as_float()
    elif backend == "promote":
        M = M.as_exact()
    return M


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_em(args) -> int:
    M = _read_matrix(args.input, "float")
    U = M.to_numpy()
    if args.restarts > 1:
        best, batch = em.run_em_restarts(U, args.r, restarts=args.restarts,
                                         seed=args.seed, max_iter=args.max_iter,
                                         tol=args.tol, crit_tol=args.crit_tol)
        payload = best.report()
        payload["restarts"] = args.restarts
    else:
        best = em.run_em(U, args.r, init=args.seed, max_iter=args.max_iter,
                         tol=args.tol, crit_tol=args.crit_tol)
        payload = best.report()
    _emit(payload, args.output)
    if args.estimate_out:
        from .exactla import from_numpy
        Path(args.estimate_out).write_text(format_matrix(from_numpy(best.P_hat)))
    return EXIT_OK


def _cmd_nnrank3(args) -> int:
    M = _read_matrix(args.input, args.backend)
    dec = nnrank3_membership(M)
    _emit(dec.as_dict(), args.output)
    return EXIT_OK if dec else EXIT_NEGATIVE_VERDICT


def _cmd_factorize(args) -> int:
    M = _read_matrix(args.input, args.backend)
    try:
        A, B = nonneg_rank3_factorize(M)
    except NotInModelError as exc:
        _emit({"schema": "1", "error": str(exc)}, args.output)
        return EXIT_NEGATIVE_VERDICT
    prefix = args.prefix or "factor"
    Path(f"{prefix}_A.txt").write_text(format_matrix(A))
    Path(f"{prefix}_B.txt").write_text(format_matrix(B))
    _emit({"schema": "1", "status": "ok",
           "A": f"{prefix}_A.txt", "B": f"{prefix}_B.txt"}, args.output)
    return EXIT_OK


def _cmd_boundary(args) -> int:
    M = _read_matrix(args.input, args.backend)
    cls = boundary_mod.boundary_test(M)
    _emit(cls.as_dict(), args.output)
    return EXIT_OK if cls.status == boundary_mod.INTERIOR else EXIT_NEGATIVE_VERDICT


def _cmd_patterns(args) -> int:
    pats = boundary_mod.enumerate_zero_patterns(args.m, args.n)
    if args.kind != "both":
        pats = [p for p in pats if p.kind == args.kind]
    counts = boundary_mod.component_count(args.m, args.n)
    payload = {
        "schema": "1",
        "counts": counts.as_dict(),
        "patterns": [
            {"kind": p.kind, "A_zeros": list(map(list, p.A_zeros)),
             "B_zeros": list(map(list, p.B_zeros))}
            for p in pats
        ],
    }
    _emit(payload, args.output)
    return EXIT_OK


def _parse_param(text: str):
    return float(text) if ("." in text or "e" in text or "E" in text) \
        else Fraction(text)


def _cmd_family(args) -> int:
    summary: dict = {"schema": "1", "family": args.name}
    matrices: list[tuple[str, Matrix]] = []
    if args.name == "uab":
        a, b = int(args.a), int(args.b)
        U = families.uab_matrix(a, b)
        matrices.append(("U", U))
        summary["in_model"] = families.uab_in_model(a, b)
        if args.mle:
            mle = families.uab_closed_form_mle(a, b)
            summary["letters"] = {k: str(v) for k, v in mle.letters().items()}
            summary["exact"] = mle.exact
            summary["loglik"] = em.log_likelihood(U.to_numpy(),
                                                  mle.matrices[0].to_numpy())
            for idx, M in enumerate(mle.matrices, start=1):
                matrices.append((f"mle{idx}", M))
    elif args.name == "rectangle":
        a, b = _parse_param(args.a), _parse_param(args.b)
        M = families.rectangle_family(a, b)
        matrices.append(("P", M))
        summary["in_model"] = families.rectangle_in_model(a, b)
    elif args.name == "greencurve":
        x, y = _parse_param(args.a), _parse_param(args.b)
        M = families.greencurve_matrix(x, y)
        matrices.append(("P", M))
        from .exactla import determinant
        summary["det"] = str(determinant(M))
    else:
        raise SystemExit(f"error: unknown family {args.name!r}")
    text = "".join(f"# {name}\n{format_matrix(M)}" for name, M in matrices)
    if args.matrix_out:
        Path(args.matrix_out).write_text(text)
    else:
        sys.stdout.write(text)
    _emit(summary, args.output)
    return EXIT_OK


_EXPERIMENT_FIELDS = {
    "m": 4, "n": 4, "r": 3, "num_matrices": 200, "num_restarts": 100,
    "max_iter": 500, "tol": 1e-10, "crit_tol": 1e-6, "seed": 0,
    "generator": "normalized_uniform", "T": 10, "dist": "rational",
    "dist_param": 100,
}


def _cmd_experiment(args) -> int:
    # config file supplies the base values; explicitly given flags override
    values = dict(_EXPERIMENT_FIELDS)
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        unknown = set(loaded) - set(values) - {"mode"}
        if unknown:
            raise SystemExit(f"error: unknown config keys {sorted(unknown)}")
        values.update({k: v for k, v in loaded.items() if k != "mode"})
    for key in _EXPERIMENT_FIELDS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    cfg = harness.ExperimentConfig(mode=args.mode, **values)
    runner = {harness.TABLE1: harness.table1_experiment,
              harness.PLANTED: harness.planted_experiment,
              harness.BOUNDARY_FRACTION: harness.boundary_fraction_experiment}[args.mode]
    report = runner(cfg, jobs=args.jobs)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nnmix",
        description="EM, nonnegative-rank-3 certification, and boundary "
                    "classification for two-variable mixture models")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("em", help="run EM on a count table")
    p.add_argument("--input", required=True)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--crit-tol", dest="crit_tol", type=float, default=1e-6)
    p.add_argument("--output")
    p.add_argument("--estimate-out", dest="estimate_out")
    p.set_defaults(func=_cmd_em)

    for name, func, help_text in [
            ("nnrank3", _cmd_nnrank3, "nonnegative-rank-3 membership verdict"),
            ("boundary", _cmd_boundary, "topological boundary classification")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True)
        p.add_argument("--backend",
                       choices=["auto", "exact", "float", "promote"],
                       default="exact" if name == "boundary" else "auto",
                       help="exact requires rational entries; promote rounds "
                            "floats to denominator 1e12")
        p.add_argument("--output")
        p.set_defaults(func=func)

    p = sub.add_parser("factorize", help="exact nonnegative rank-3 factorization")
    p.add_argument("--input", required=True)
    p.add_argument("--backend", choices=["exact", "promote"], default="exact")
    p.add_argument("--prefix")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_factorize)

    p = sub.add_parser("patterns", help="boundary stratum zero patterns and counts")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--kind", choices=["a", "b", "both"], default="both")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_patterns)

    p = sub.add_parser("family", help="closed-form parametric families")
    p.add_argument("name", choices=["uab", "rectangle", "greencurve"])
    p.add_argument("--a", required=True, help="first parameter (x for greencurve)")
    p.add_argument("--b", required=True, help="second parameter (y for greencurve)")
    p.add_argument("--mle", action="store_true",
                   help="emit the eight closed-form maximizers (uab only)")
    p.add_argument("--matrix-out", dest="matrix_out")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_family)

    p = sub.add_parser("experiment", help="seeded Monte-Carlo experiments")
    p.add_argument("mode", choices=[harness.TABLE1, harness.PLANTED,
                                    harness.BOUNDARY_FRACTION])
    p.add_argument("--config", help="JSON file with base config values "
                                    "(explicit flags override)")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--num-matrices", dest="num_matrices", type=int)
    p.add_argument("--restarts", dest="num_restarts", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--crit-tol", dest="crit_tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--generator", choices=["normalized_uniform", "dirichlet"],
                   help="random-table generator for table1")
    p.add_argument("--T", type=int)
    p.add_argument("--dist", choices=["rational", "unit_rational", "int1to4"])
    p.add_argument("--dist-param", dest="dist_param", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, em.EMNumericalError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

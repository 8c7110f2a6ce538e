"""Command-line front end: validate, reduce, classify, certify system files."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_TRUNCATIONS,
    deficiency_indices,
    definiteness,
)
from .certify import certify_selfadjoint, verify_energy_bound
from .dsl import DslSyntaxError, EvaluationSingularity
from .propagate import PropagationError
from .sysfile import (
    SystemFileError,
    load_system_file,
    parse_complex,
    render_system_file,
)
from .system import (
    canonical_reduce,
    default_validation_grid,
    sl_embed,
    square_system,
    validate,
)

SCHEMA_VERSION = 1


def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, complex):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.complexfloating,)):
        return _jsonable(complex(obj))
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return str(obj)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _emit(args, command: str, verdicts: dict, evidence: dict, text: str) -> int:
    print(text)
    if getattr(args, "json", None):
        payload = {
            "schema": SCHEMA_VERSION,
            "tool_version": __version__,
            "command": command,
            "inputs_digest": _digest(args.file),
            "verdicts": _jsonable(verdicts),
            "evidence": _jsonable(evidence),
        }
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _truncations(args, sf):
    if getattr(args, "truncations", None):
        return tuple(float(v) for v in args.truncations.split(","))
    return sf.defaults.get("truncations", DEFAULT_TRUNCATIONS)


def _lambda(args, sf, fallback=1j):
    if getattr(args, "lam", None):
        return parse_complex(args.lam)
    return sf.defaults.get("lambda", fallback)


def _tol(args, sf, fallback=1e-10):
    if getattr(args, "tol", None) is not None:
        return args.tol
    return sf.defaults.get("tol", fallback)


# ---------------------------------------------------------------------------
# Commands

def cmd_validate(args) -> int:
    sf = load_system_file(args.file)
    system = sf.to_system()
    grid = default_validation_grid(system, per_piece=args.grid or sf.defaults.get("grid", 512))
    report = validate(system, grid, tol=_tol(args, sf))
    verdicts = {"passed": report.passed}
    evidence = {"max_residuals": report.max_residuals(), "grid_points": len(report.points),
                "failures": list(report.failures[:16])}
    return _emit(args, "validate", verdicts, evidence, report.summary())


def cmd_reduce(args) -> int:
    sf = load_system_file(args.file)
    system = sf.to_system()
    grid = default_validation_grid(system, per_piece=args.grid or sf.defaults.get("grid", 512))
    gauge, reduced = canonical_reduce(system, grid)
    j0 = reduced.J.evaluate(system.x0)
    max_b = 0.0
    max_jdrift = 0.0
    for x in grid:
        max_b = max(max_b, float(np.linalg.norm(reduced.B.evaluate(x), 2)))
        max_jdrift = max(max_jdrift, float(np.linalg.norm(reduced.J.evaluate(x) - j0, 2)))
    verdicts = {"reduced": bool(max_b <= 1e-8 and max_jdrift <= 1e-8)}
    evidence = {"max_B_norm": max_b, "max_J_drift": max_jdrift, "J_at_x0": j0,
                "grid_points": len(grid)}
    text = (
        f"canonical reduction over {len(grid)} grid points\n"
        f"  max |B~(x)|        = {max_b:.3e}\n"
        f"  max |J~(x)-J~(x0)| = {max_jdrift:.3e}\n"
        f"  J~(x0) = {np.array2string(j0, precision=6)}"
    )
    return _emit(args, "reduce", verdicts, evidence, text)


def cmd_definite(args) -> int:
    sf = load_system_file(args.file)
    system = sf.to_system()
    candidates = [tuple(args.interval)] if args.interval else None
    lam = _lambda(args, sf, fallback=0.0)
    report = definiteness(system, candidates, lam=lam, tol=_tol(args, sf))
    verdicts = {"definite": report.definite,
                "simple_criterion": report.simple_criterion_passed}
    evidence = {
        "lambda": report.lambda_used,
        "min_sv": report.min_sv,
        "witness_interval": report.witness_interval,
        "cross_check_lambda": report.cross_check_lambda,
        "cross_check_agrees": report.cross_check_agrees,
        "warning": report.warning,
        "candidates": list(report.candidates),
    }
    return _emit(args, "definite", verdicts, evidence, report.summary())


def cmd_deficiency(args) -> int:
    sf = load_system_file(args.file)
    system = sf.to_system()
    lam = _lambda(args, sf, fallback=1j)
    report = deficiency_indices(system, (lam, lam.conjugate()), _truncations(args, sf))
    verdicts = {"n_plus": report.n_plus, "n_minus": report.n_minus,
                "converged": report.converged}
    evidence = {
        "n_plus_range": report.n_plus_range,
        "n_minus_range": report.n_minus_range,
        "truncations": report.truncations_used,
        "directions": {
            side: [
                {"verdict": d.verdict, "zero_h_mass": d.zero_h_mass,
                 "growth_rate": d.growth_rate, "direction": d.direction}
                for d in ep.directions
            ]
            for side, ep in report.classification_plus.endpoints.items()
        },
    }
    lines = [report.summary()]
    for side, ep in report.classification_plus.endpoints.items():
        lines.append(f"  {side} endpoint:")
        for d in ep.directions:
            rate = "" if d.growth_rate is None else f", growth rate {d.growth_rate:+.3f}"
            zero = " (zero H-mass)" if d.zero_h_mass else ""
            lines.append(f"    {d.verdict}{zero}{rate}")
    return _emit(args, "deficiency", verdicts, evidence, "\n".join(lines))


def cmd_certify(args) -> int:
    sf = load_system_file(args.file)
    route = args.route
    if route in (None, "auto"):
        obj = sf.to_square_spec() if sf.has_square_data() else sf.to_system()
        route = "auto"
    elif route == "bare":
        obj = sf.to_system()
    else:
        obj = sf.to_square_spec()
    cert = certify_selfadjoint(obj, route=route)
    verdicts = {"verdict": cert.verdict, "route": cert.route, "failed": list(cert.failed)}
    return _emit(args, "certify", verdicts, dict(cert.evidence), cert.summary())


def cmd_energy_bound(args) -> int:
    sf = load_system_file(args.file)
    if sf.f1 is None:
        raise SystemFileError("energy-bound needs an [f1] section (compactly supported components)")
    spec = sf.to_square_spec()
    result = verify_energy_bound(spec, sf.f1)
    verdicts = {"satisfied": result.satisfied}
    evidence = {"lhs": result.lhs, "rhs": result.rhs, "C": result.C,
                "support": result.support, "range_residual": result.range_residual}
    return _emit(args, "energy-bound", verdicts, evidence, result.summary())


def cmd_embed_sl(args) -> int:
    sf = load_system_file(args.file)
    A, V, H = sf.sl_fields()
    system = sl_embed(A, V, H, sf.interval, sf.x0)
    fields = {"J": system.J, "B": system.B, "H": system.H}
    text = render_system_file(f"{sf.name}-embedded", system.n, system.interval, fields, system.x0)
    return _emit(args, "embed-sl", {"n": system.n}, {"system_file": text}, text.rstrip())


def cmd_square(args) -> int:
    sf = load_system_file(args.file)
    spec = sf.to_square_spec()
    system = square_system(spec)
    fields = {"J": system.J, "B": system.B, "H": system.H}
    text = render_system_file(f"{sf.name}-square", system.n, system.interval, fields, system.x0)
    return _emit(args, "square", {"n": system.n}, {"system_file": text}, text.rstrip())


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hamsys",
        description="Analyze symmetric first-order systems J f' + B f = lambda H f.",
    )
    p.add_argument("--version", action="version", version=f"hamsys {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lam=False, trunc=False, grid=False):
        sp.add_argument("file", help="system-definition file")
        sp.add_argument("--json", metavar="PATH", help="also write a machine-readable report")
        sp.add_argument("--tol", type=float, default=None, help="tolerance (default 1e-10)")
        if lam:
            sp.add_argument("--lambda", dest="lam", default=None,
                            help="spectral parameter, e.g. '1+2i'")
        if trunc:
            sp.add_argument("--truncations", default=None,
                            help="comma-separated truncation schedule, e.g. '1,2,4,8,16,32'")
        if grid:
            sp.add_argument("--grid", type=int, default=None, help="validation grid points per piece")

    sp = sub.add_parser("validate", help="check the structural hypotheses on a grid")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("reduce", help="reduce to constant J and vanishing B")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("definite", help="Gram-matrix definiteness test")
    common(sp, lam=True)
    sp.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"),
                    help="candidate compact interval")
    sp.set_defaults(func=cmd_definite)

    sp = sub.add_parser("deficiency", help="formal deficiency indices")
    common(sp, lam=True, trunc=True)
    sp.set_defaults(func=cmd_deficiency)

    sp = sub.add_parser("certify", help="essential self-adjointness certificate")
    common(sp)
    sp.add_argument("--route", choices=["auto", "bare", "square", "sturm-liouville"],
                    default="auto")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("energy-bound", help="verify the a-priori energy bound on a test function")
    common(sp)
    sp.set_defaults(func=cmd_energy_bound)

    sp = sub.add_parser("embed-sl", help="emit the first-order embedding of a Sturm-Liouville file")
    common(sp)
    sp.set_defaults(func=cmd_embed_sl)

    sp = sub.add_parser("square", help="emit the doubled system of a square-system spec")
    common(sp)
    sp.set_defaults(func=cmd_square)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SystemFileError, DslSyntaxError, FileNotFoundError, IsADirectoryError,
            TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PropagationError, EvaluationSingularity, np.linalg.LinAlgError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

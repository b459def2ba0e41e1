"""Command-line driver: dims, betti, flux and estimate."""
from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io, runtime
from .curlcurl import (
    ESSENTIAL,
    NATURAL,
    CurlCurlError,
    PatchInfeasibleError,
    lowest_order_sigma,
    manufactured_problem,
    run_estimator,
)
from .flux import (
    HarmonicResidualError,
    LevelResidualError,
    NotClosedError,
    cohomology_dims,
    full_reconstruct,
    layout_for,
    whitney_cohomology_dims,
)
from .simplicial import ComplexError, betti_numbers
from .spaces.assignment import AssignmentError, uniform_assignment
from .spaces.layout import GlobalForm, assemble_global_d, random_global_form
from .spaces.local import VARIANTS, dimension_formula, local_basis
from .spaces.sequence import FULL, TRIMMED, SpaceTag

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2


@dataclass
class RunConfig:
    command: str
    mesh: str | None = None
    order_spec: str | None = None
    k: int | None = None
    seed: int | None = None
    output: str | None = None
    tolerances: dict = field(default_factory=dict)


def config_from_args(args) -> RunConfig:
    seed = getattr(args, "random_exact", None)
    if seed is None:
        seed = getattr(args, "manufactured", None)
    return RunConfig(args.command, getattr(args, "mesh", None), getattr(args, "order_spec", None),
                     getattr(args, "k", None), seed, getattr(args, "output", None) or getattr(args, "report", None))


def _emit(args, summary: list[str], data: dict) -> None:
    cfg = config_from_args(args)
    data.setdefault("config", {"command": cfg.command, "mesh": cfg.mesh, "order_spec": cfg.order_spec,
                               "k": cfg.k, "seed": cfg.seed})
    if getattr(args, "json", False):
        print(io.dumps(data))
    else:
        print("\n".join(summary))
    out = getattr(args, "report", None)
    if out:
        io.write_json(out, data)


def cmd_dims(args) -> int:
    ns = [args.n] if args.n is not None else [1, 2, 3]
    rs = [args.r] if args.r is not None else list(range(5))
    families = [args.family] if args.family else [FULL, TRIMMED]
    variants = [args.variant] if args.variant else list(VARIANTS)
    rows, summary = [], []
    summary.append(f"{'n':>2} {'family':>8} {'r':>2} {'k':>2} {'variant':>15} {'enum':>6} {'formula':>8} {'printed':>8}  status")
    mismatches = 0
    for n in ns:
        for family in families:
            for r in rs:
                ks = [args.k] if args.k is not None else list(range(n + 1))
                for k in ks:
                    for variant in variants:
                        tag = SpaceTag(family, r)
                        enum = local_basis(n, tag, k, variant).dim
                        formula = dimension_formula(n, tag, k, variant)
                        printed = dimension_formula(n, tag, k, variant, printed=True)
                        ok = enum == formula
                        flag = "" if printed == enum else "formula-discrepancy"
                        mismatches += not ok
                        status = ("match" if ok else "MISMATCH") + (f" ({flag})" if flag else "")
                        rows.append({"n": n, "family": family, "r": r, "k": k, "variant": variant, "enumerated": enum,
                                     "formula": formula, "printed_formula": printed, "match": ok,
                                     "formula_discrepancy": bool(flag)})
                        summary.append(f"{n:>2} {family:>8} {r:>2} {k:>2} {variant:>15} {enum:>6} {formula:>8} {printed:>8}  {status}")
    summary.append(f"{len(rows)} rows, {mismatches} mismatches")
    _emit(args, summary, {"rows": rows, "mismatches": mismatches})
    return EXIT_OK if mismatches == 0 else EXIT_INFEASIBLE


def cmd_betti(args) -> int:
    c = io.load_mesh(args.mesh)
    betti = betti_numbers(c, args.relative)
    whitney = whitney_cohomology_dims(c, args.relative)
    data = {"mesh": args.mesh, "relative": args.relative, "betti": betti, "whitney_cohomology": whitney,
            "equal": betti == whitney}
    if args.family:
        a = uniform_assignment(c, args.family, args.r)
        data["fe_cohomology"] = cohomology_dims(a, args.relative)
        data["equal"] = data["equal"] and data["fe_cohomology"] == betti
    summary = [f"betti numbers:       {betti}", f"Whitney cohomology:  {whitney}"]
    if "fe_cohomology" in data:
        summary.append(f"FE cohomology:       {data['fe_cohomology']}")
    summary.append("verdict: " + ("EQUAL" if data["equal"] else "DIFFERENT"))
    _emit(args, summary, data)
    return EXIT_OK if data["equal"] else EXIT_INFEASIBLE


def _assignment(args, c):
    if args.order_spec:
        return io.load_order_spec(c, args.order_spec)
    return uniform_assignment(c, args.family, args.r)


def cmd_flux(args) -> int:
    c = io.load_mesh(args.mesh)
    a = _assignment(args, c)
    k = args.k
    if not 1 <= k <= c.dim:
        raise ValueError(f"degree k must be in 1..{c.dim}")
    layout = layout_for(a, k, args.relative)
    if args.random_exact is not None:
        lower = layout_for(a, k - 1, args.relative)
        xi0 = random_global_form(lower, random.Random(args.random_exact))
        D = assemble_global_d(lower, layout).matrix
        omega = GlobalForm(layout, D.matvec(xi0.coefficients))
    elif args.input:
        omega = io.load_form(layout, args.input)
    else:
        raise ValueError("give an input form (--input) or --random-exact SEED")
    data = {"mesh": args.mesh, "k": k, "relative": args.relative, "layout-hash": layout.hash}
    try:
        xi, report = full_reconstruct(omega.to_float())
    except HarmonicResidualError as exc:
        data.update({"status": "harmonic-residual", "harmonic_residual": exc.residual,
                     "relative_residual": exc.relative})
        if args.output:
            io.save_form(args.output, exc.xi)
        _emit(args, [f"closed but not exact: harmonic residual {exc.residual:.6e} (relative {exc.relative:.3e})"], data)
        return EXIT_INFEASIBLE
    data.update({"status": "ok", "report": report})
    if args.output:
        io.save_form(args.output, xi)
    else:
        data["xi"] = xi.to_json()
    summary = [f"flux reconstruction k={k}: residual {report['full_residual']:.3e}",
               f"  partial residual ‖ω - I_W ω - dξ_hi‖/‖ω‖ = {report['residual']:.3e}",
               f"  local solves {report['local_solves']} over {len(report['levels'])} levels"]
    _emit(args, summary, data)
    return EXIT_OK


def cmd_estimate(args) -> int:
    c = io.load_mesh(args.mesh)
    if args.manufactured is None:
        raise ValueError("estimate needs --manufactured SEED")
    p = manufactured_problem(c, args.r, args.manufactured, args.bc)
    rep, rec, gal = run_estimator(p)
    data = rep.to_json()
    lo = lowest_order_sigma(p)
    data["lowest_order_difference"] = float(np.abs(lo.coefficients - rec.sigma.coefficients).max(initial=0.0))
    data.update({"mesh": args.mesh, "r": args.r, "seed": args.manufactured, "boundary_condition": args.bc})
    summary = [f"η = {rep.eta:.6e}", f"true error = {rep.true_error:.6e}",
               f"reliability η ≥ error: {'PASS' if rep.reliable else 'FAIL'}",
               f"curl residual {rep.diagnostics['curl_residual']:.2e}, max jump {rep.diagnostics['max_jump']:.2e}, "
               f"boundary trace {rep.diagnostics['boundary_trace']:.2e}",
               f"lowest-order path difference {data['lowest_order_difference']:.2e}"]
    _emit(args, summary, data)
    return EXIT_OK if rep.reliable else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feec", description="Finite element exterior calculus tools")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker threads (fallback: FEEC_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
        p.add_argument("--report", help="also write the JSON report to this path")

    p = sub.add_parser("dims", help="enumerated vs closed-form space dimensions")
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--family", choices=[FULL, TRIMMED])
    p.add_argument("--variant", choices=list(VARIANTS))
    common(p)
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("betti", help="Betti numbers and discrete cohomology")
    p.add_argument("--mesh", required=True)
    p.add_argument("--relative", action="store_true")
    p.add_argument("--family", choices=[FULL, TRIMMED], help="also check a finite element complex")
    p.add_argument("--r", type=int, default=2)
    common(p)
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("flux", help="flux reconstruction ξ with dξ = ω")
    p.add_argument("--mesh", required=True)
    p.add_argument("--order-spec", help="order-spec JSON file or inline JSON")
    p.add_argument("--family", choices=[FULL, TRIMMED], default=TRIMMED)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--relative", action="store_true")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="GlobalForm JSON of the k-form ω")
    src.add_argument("--random-exact", type=int, metavar="SEED", help="use ω = dξ for a random FE ξ")
    p.add_argument("--output", help="write ξ as GlobalForm JSON")
    common(p)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("estimate", help="curl-curl Galerkin solve and equilibrated estimator")
    p.add_argument("--mesh", required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--manufactured", type=int, metavar="SEED")
    p.add_argument("--bc", choices=[ESSENTIAL, NATURAL], default=ESSENTIAL)
    common(p)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        runtime.set_workers(args.threads)
        return args.func(args)
    except (HarmonicResidualError, PatchInfeasibleError, LevelResidualError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ComplexError, AssignmentError, CurlCurlError, NotClosedError, ValueError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        runtime.set_workers(None)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: reproducible experiments with CSV output.

Exit codes: 0 success, 1 tolerance failure, 2 usage error.
"""

import argparse
import dataclasses
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .csvio import manifest_digest, write_csv, write_manifest
from .quadrature import DEFAULT_QUAD, QuadConfig

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _geometric(lo, hi, count):
    if not (0 < lo <= hi) or count < 1:
        raise UsageError("need 0 < eps-min <= eps-max and eps-count >= 1")
    if count == 1:
        return [hi]
    return [float(v) for v in np.geomspace(hi, lo, count)]


def _quad(args):
    return QuadConfig.from_file(args.config) if args.config else DEFAULT_QUAD


class Run:
    """Collects parameters and outputs; the manifest digest covers everything
    except the timing statistics so reruns give identical CSV files."""

    def __init__(self, args, command, tolerances):
        self.command = command
        self.out = args.out
        params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
        self.manifest = {
            "command": command,
            "version": __version__,
            "parameters": params,
            "seed": getattr(args, "seed", 0),
            "tolerances": tolerances,
            "outputs": [],
        }
        self.start = time.perf_counter()
        self.tables = []

    def add(self, name, columns, rows):
        self.tables.append((name, columns, [list(r) for r in rows]))
        self.manifest["outputs"].append(name)

    def finish(self, summary, ok):
        self.manifest["summary"] = summary
        self.manifest["passed"] = bool(ok)
        digest = manifest_digest(self.manifest)
        header = {"command": self.command, "manifest_sha256": digest}
        for name, columns, rows in self.tables:
            write_csv(os.path.join(self.out, name), columns, rows, header)
        full = dict(self.manifest, stats={"wall_clock_s": time.perf_counter() - self.start})
        write_manifest(os.path.join(self.out, f"{self.command}-manifest.json"), full)
        for key, val in summary.items():
            print(f"{key}: {val}")
        print("PASS" if ok else "FAIL")
        return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------ green-verify


def cmd_green_verify(args):
    from .fields import bump_field
    from .green import GreenKernel, footnote_green, green_value, verify_goa_limit

    if args.n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    eps = _geometric(args.eps_min, args.eps_max, args.eps_count)
    quad = _quad(args)
    k = GreenKernel(args.n, args.s, quad=quad)
    run = Run(args, "green-verify", {"ratio_tol": args.tol, "footnote_tol": args.footnote_tol, "quad": dataclasses.asdict(quad)})
    e = np.eye(args.n)[0]
    datum = bump_field(args.n, radius=args.bump_radius)
    table = verify_goa_limit(k, datum, e, -e, eps)
    run.add("goa_limit.csv", ["eps", "lhs", "rhs", "ratio"], table.rows())
    dev = table.deviations()[-1]
    summary = {"ratio_at_smallest_eps": table.ratio[-1], "settling": table.is_settling()}
    ok = dev <= args.tol
    if args.n == 1 and math.isclose(args.s, 0.5):
        rng = np.random.default_rng(args.seed)
        rows = []
        while len(rows) < args.pairs:
            x, z = rng.uniform(-0.99, 0.99, 2)
            if abs(x - z) < 1e-6:
                continue
            g = float(green_value(k, [x], [z]))
            ref = float(footnote_green(x, z))
            rows.append((x, z, g, ref, abs(g - ref) / abs(ref)))
        run.add("footnote.csv", ["x", "z", "quadrature", "closed_form", "rel_error"], rows)
        worst = max(r[-1] for r in rows)
        summary["footnote_max_rel_error"] = worst
        ok = ok and worst <= args.footnote_tol
    return run.finish(summary, ok)


# ------------------------------------------------------------------- eigen


def _alpha(text, n):
    try:
        alpha = tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad --alpha {text!r}") from exc
    if len(alpha) == 1 and n > 1:
        alpha = alpha + (0,) * (n - 1)
    if len(alpha) != n or min(alpha) < 0:
        raise UsageError("--alpha needs one non-negative entry per dimension")
    return alpha


def cmd_eigen(args):
    from .eigen import (
        BumpTest,
        EigenConfig,
        boundary_slope,
        principal_eigenpair,
        verify_distributional_derivatives,
        verify_eigen_boundary,
    )

    if args.n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    cfg = EigenConfig(degree=args.degree)
    alpha = _alpha(args.alpha, args.n) if args.check_distributional else None
    run = Run(args, "eigen", {"refine_tol": args.refine_tol, "boundary_tol": args.boundary_tol, "eigen": dataclasses.asdict(cfg)})
    pair = principal_eigenpair(args.n, args.s, cfg)
    norm = pair.l2_norm()
    slope = boundary_slope(pair)
    summary = {"lambda_star": pair.lambda_star, "kappa_star": pair.kappa_star, "l2_norm": norm, "boundary_slope": slope}
    ok = pair.lambda_star > 0 and abs(norm - 1.0) < 1e-8
    row = [args.n, args.s, pair.lambda_star, pair.kappa_star, norm, pair.degree, slope]
    cols = ["n", "s", "lambda_star", "kappa_star", "l2_norm", "degree", "boundary_slope"]
    if args.refine:
        fine = principal_eigenpair(args.n, args.s, cfg.refined())
        shift = abs(fine.lambda_star - pair.lambda_star) / pair.lambda_star
        row += [fine.lambda_star, shift]
        cols += ["lambda_refined", "relative_shift"]
        summary["relative_shift"] = shift
        ok = ok and shift < args.refine_tol
    run.add("eigen.csv", cols, [row])
    r = np.linspace(0.0, 1.0, args.profile_points)
    run.add("profile.csv", ["r", "phi"], zip(r, pair.profile(r)))
    e = np.eye(args.n)[0]
    eps = _geometric(args.eps_min, args.eps_max, args.eps_count)
    table = verify_eigen_boundary(pair, e, -e, eps)
    run.add("boundary.csv", ["eps", "lhs", "rhs", "ratio"], table.rows())
    summary["boundary_ratio"] = table.ratio[-1]
    ok = ok and abs(table.ratio[-1] - 1.0) <= args.boundary_tol
    if alpha is not None:
        psi = BumpTest(tuple(-args.bump_offset * e), args.bump_radius)
        dt = verify_distributional_derivatives(pair, e, alpha, psi, eps)
        run.add("distributional.csv", ["eps", "lhs", "rhs", "ratio"], dt.rows())
        summary["distributional_ratio"] = dt.ratio[-1]
        ok = ok and abs(dt.ratio[-1] - 1.0) <= args.distributional_tol
    return run.finish(summary, ok)


# ------------------------------------------------------------------- solve


def cmd_solve(args):
    from .constants import torsion_constant
    from .fields import bump_field, torsion_field
    from .fracop import frac_laplacian_at
    from .poisson import sampled_rhs, solve

    if args.n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    quad = _quad(args)
    run = Run(args, "solve", {"tol": args.tol, "quad": dataclasses.asdict(quad)})
    exact = None
    if args.datum == "torsion":
        prof = torsion_field(args.n, args.s)
        e = np.eye(args.n)[0]
        rhs = sampled_rhs(lambda r: float(frac_laplacian_at(prof, r * e, args.s, quad)), args.n)
        exact = lambda r: (1.0 - r**2) ** args.s
    elif args.datum == "one":
        rhs = sampled_rhs(lambda r: 1.0, args.n)
        mu0 = torsion_constant(args.n, args.s)
        exact = lambda r: (1.0 - r**2) ** args.s / mu0
    else:
        rhs = bump_field(args.n, radius=0.8)
    sol = solve(args.n, args.s, rhs, quad)
    r = np.linspace(0.0, args.radius, args.points)
    pts = r[:, None] * np.eye(args.n)[0][None, :]
    u = sol(pts)
    if exact is None:
        run.add("solution.csv", ["r", "u"], zip(r, u))
        return run.finish({"max_u": float(np.max(u))}, True)
    ref = exact(r)
    rel = np.abs(u - ref) / np.abs(ref)
    run.add("solution.csv", ["r", "u", "exact", "rel_error"], zip(r, u, ref, rel))
    worst = float(np.max(rel))
    return run.finish({"max_rel_error": worst}, worst <= args.tol)


# ------------------------------------------------------------- approximate


def _variables(caloric, n):
    space = ["x"] if n == 1 else [f"x{i + 1}" for i in range(n)]
    return (["t"] if caloric else []) + space


def cmd_approximate(args):
    from .approximator import (
        ApproximationConfig,
        ApproximationFailure,
        approximate_function,
        logistic_resource,
        parse_polynomial,
    )
    from .fields import caloric_spec, fractional_spec
    from .spanner import RankDeficientSpan

    if args.n not in (1, 2):
        raise UsageError("--n must be 1 or 2")
    caloric = args.caloric or args.logistic
    names = _variables(caloric, args.n)
    try:
        target = parse_polynomial(args.target, names)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.k < 0 or not args.eps > 0:
        raise UsageError("--k must be >= 0 and --eps > 0")
    config = ApproximationConfig.from_file(args.config) if args.config else ApproximationConfig()
    spec = caloric_spec(args.s, args.n) if caloric else fractional_spec(args.s, args.n)
    run = Run(args, "approximate", {"eps": args.eps, "residual_tol": config.residual_tol, "config": config.to_dict()})
    try:
        if args.logistic:
            logi = logistic_resource(target, args.s, args.k, args.eps, args.n, config)
            res = logi.u
        else:
            logi = None
            res = approximate_function(spec, target, args.k, args.eps, config)
    except (ApproximationFailure, RankDeficientSpan) as exc:
        best = getattr(exc, "best_error", getattr(exc, "residual", float("nan")))
        return run.finish({"error": str(exc), "best_error": best}, False)
    os.makedirs(args.out, exist_ok=True)
    res.save(os.path.join(args.out, "result.json"))
    run.manifest["outputs"].append("result.json")
    grid, err = res.error_map()
    run.add("error_map.csv", names + ["error"], [list(p) + [e] for p, e in zip(grid, err)])
    run.add(
        "residual.csv",
        names + ["residual"],
        [list(p) + [v] for p, v in zip(res.residual_points, res.residual_values)],
    )
    summary = {
        "achieved_error": res.achieved_error,
        "lambda_residual": res.lambda_residual,
        "region": res.region,
        "eta": [p.eta for p in res.plans],
    }
    ok = res.ok
    if logi is not None:
        summary.update(logi.report())
        ok = ok and logi.positive
    return run.finish(summary, ok)


# ------------------------------------------------------------------ parser


def build_parser():
    p = argparse.ArgumentParser(prog="fracapprox", description="Fractional operators and Lambda-harmonic approximation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=1, help="space dimension (1 or 2)")
        sp.add_argument("--s", type=float, required=True, help="fractional order in (0, 1)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--config", default=None, help="INI file with tuning sections")
        sp.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("green-verify", help="boundary limit of the Green potential and the closed form check")
    common(g)
    g.add_argument("--eps-min", type=float, default=1e-4)
    g.add_argument("--eps-max", type=float, default=1e-2)
    g.add_argument("--eps-count", type=int, default=3)
    g.add_argument("--pairs", type=int, default=100)
    g.add_argument("--bump-radius", type=float, default=0.8)
    g.add_argument("--tol", type=float, default=0.02)
    g.add_argument("--footnote-tol", type=float, default=1e-8)
    g.set_defaults(func=cmd_green_verify)

    e = sub.add_parser("eigen", help="principal eigenpair and its boundary behaviour")
    common(e)
    e.add_argument("--degree", type=int, default=320)
    e.add_argument("--refine", action="store_true", help="also solve with twice the degree")
    e.add_argument("--refine-tol", type=float, default=1e-4)
    e.add_argument("--profile-points", type=int, default=201)
    e.add_argument("--eps-min", type=float, default=1e-3)
    e.add_argument("--eps-max", type=float, default=1e-1)
    e.add_argument("--eps-count", type=int, default=3)
    e.add_argument("--boundary-tol", type=float, default=0.03)
    e.add_argument("--check-distributional", action="store_true")
    e.add_argument("--alpha", default="0")
    e.add_argument("--bump-offset", type=float, default=0.6)
    e.add_argument("--bump-radius", type=float, default=0.5)
    e.add_argument("--distributional-tol", type=float, default=0.05)
    e.set_defaults(func=cmd_eigen)

    so = sub.add_parser("solve", help="Dirichlet problem in the unit ball")
    common(so)
    so.add_argument("--datum", choices=("torsion", "one", "bump"), default="torsion")
    so.add_argument("--points", type=int, default=9)
    so.add_argument("--radius", type=float, default=0.8)
    so.add_argument("--tol", type=float, default=1e-3)
    so.set_defaults(func=cmd_solve)

    a = sub.add_parser("approximate", help="approximate a polynomial target by a Lambda-harmonic function")
    common(a)
    kind = a.add_mutually_exclusive_group()
    kind.add_argument("--caloric", action="store_true", help="d/dt + (-Delta)^s in the variables (t, x)")
    kind.add_argument("--logistic", action="store_true", help="resource construction for the logistic model")
    a.add_argument("--target", required=True, help='polynomial such as "x^2" or "1 + x^2/4"')
    a.add_argument("--k", type=int, default=0)
    a.add_argument("--eps", type=float, default=0.05)
    a.set_defaults(func=cmd_approximate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, FileNotFoundError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

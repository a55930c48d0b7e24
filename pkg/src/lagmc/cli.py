"""Command-line front end.

Exit status: 0 success, 1 validation error, 2 numerical failure,
3 non-convergence (solve only).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as lio
from .config import ConfigError, RunConfig, all_keys, exact_solution, load_config
from .convex import TransformError, lewy_yuan_rotate, inverse_rotate
from .diagnostics import (
    DiagnosticError,
    dual_convexity_check,
    holder_exponent_fit,
    rank_field,
    vmo_modulus,
)
from .grid import GridError, GridFunction, hessian_field
from .phase import PhaseError
from .profiles import BranchError, ProfileError, build_singular_rotator, quartic_coefficient, rotator_profile
from .solver import BlowUpError, SolverError, solve_dirichlet
from .verify import run_suite

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3

COMMANDS = ("solve", "rotate", "inverse-rotate", "profile", "singular", "diagnose", "verify")

# short flags that map onto config keys
ALIASES = {
    "profile": {"n": "profile.n", "a": "profile.a", "smax": "profile.smax", "steps": "profile.steps"},
    "singular": {"n": "profile.n", "a": "profile.a"},
    "diagnose": {"mode": "diagnose.mode"},
}


class _Parser(argparse.ArgumentParser):
    """Bad command lines are validation errors, so they exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagmc", description="Lagrangian mean curvature toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        if cmd == "verify":
            p.add_argument("suite", choices=("duality", "rotation", "solver", "profile", "diagnostics", "all"))
        p.add_argument("--config", type=Path)
        if cmd in ("rotate", "inverse-rotate", "diagnose"):
            p.add_argument("--in", dest="input", type=Path, required=True)
        if cmd != "verify":
            p.add_argument("--out", type=Path, required=True)
        for short, key in ALIASES.get(cmd, {}).items():
            p.add_argument(f"--{short}", dest=key, metavar="VALUE")
        for key in all_keys():
            if key not in ALIASES.get(cmd, {}).values():
                p.add_argument(f"--{key}", dest=key, metavar="VALUE")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in all_keys():
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value)
    cfg.check_files()
    return cfg


def _check_input(path: Path) -> None:
    if not path.exists():
        raise ConfigError(f"input file {path} not found")


# ------------------------------------------------------------ commands

def cmd_solve(cfg: RunConfig, args) -> int:
    spec = cfg.grid.spec()
    phase = cfg.phase.spec(spec.n)
    params = cfg.solve.params()
    if cfg.solve.boundary is not None:
        data = lio.read_grid(cfg.solve.boundary)
    elif cfg.solve.exact is not None:
        data = GridFunction(spec, exact_solution(cfg, spec))
    else:
        raise ConfigError("solve needs solve.boundary or solve.exact")
    spec = data.spec
    interior = np.zeros(spec.shape, dtype=bool)
    interior[(slice(1, -1),) * spec.n] = True
    if cfg.solve.init == "zero":
        init = data.with_values(np.where(interior, 0.0, data.values))
    elif cfg.solve.init == "data":
        init = data
    else:
        raise ConfigError(f"unknown solve.init {cfg.solve.init!r}")
    u, rep = solve_dirichlet(data, init, phase, params)
    report = {"command": "solve", "iterations": rep.iterations, "update": rep.update,
              "residual": rep.residual, "converged": int(rep.converged)}
    if cfg.solve.exact is not None and cfg.solve.boundary is None:
        report["max_error"] = float(np.abs(u.values - data.values).max())
    lio.write_grid(args.out, u, report)
    if not rep.converged:
        print(f"solve: not converged after {rep.iterations} iterations (update {rep.update:.3e})", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_rotate(cfg: RunConfig, args) -> int:
    _check_input(args.input)
    u = lio.read_grid(args.input)
    r = lewy_yuan_rotate(u, dual_h=cfg.rotate.dual_h, shrink=cfg.rotate.shrink, threads=cfg.run.threads)
    lio.write_rotated(args.out, r, {"command": "rotate", "points": len(r.values), "shrink": r.shrink})
    return EXIT_OK


def cmd_inverse(cfg: RunConfig, args) -> int:
    _check_input(args.input)
    ubar = lio.read_potential(args.input)
    u = inverse_rotate(ubar, primal_h=cfg.inverse.primal_h, min_eig=cfg.inverse.min_eig,
                       shrink=cfg.inverse.shrink, threads=cfg.run.threads)
    lio.write_grid(args.out, u, {"command": "inverse-rotate"})
    return EXIT_OK


def cmd_profile(cfg: RunConfig, args) -> int:
    c = cfg.profile
    p = rotator_profile(c.n, c.a, s_max=c.smax, steps=c.steps, s0=c.s0)
    res = float(np.abs(p.ode_residual()[1:]).max())
    lio.write_profile(args.out, p, {"ode_residual": res, "fpp0": float(p.fpp[0])})
    return EXIT_OK


def cmd_singular(cfg: RunConfig, args) -> int:
    c, s = cfg.profile, cfg.singular
    p = rotator_profile(c.n, c.a, s_max=c.smax, steps=c.steps, s0=c.s0)
    from .grid import GridSpec

    grid = GridSpec.centered(c.n, s.radius, s.h)
    sr = build_singular_rotator(p, grid, primal_h=s.primal_h, threads=cfg.run.threads)
    U = sr.U
    rmax = float(min(-np.max(U.spec.lo), np.min(U.spec.hi)))
    report = {"command": "singular", "n": c.n, "a": c.a,
              "quartic_coefficient": quartic_coefficient(sr.Ubar, 0.5 * s.radius)}
    try:
        fit = holder_exponent_fit(U, np.zeros(c.n), np.geomspace(0.1 * rmax, 0.5 * rmax, 6))
        report.update(holder_exponent=fit.exponent, holder_residual=fit.residual)
    except DiagnosticError as err:
        report["holder_exponent"] = f"unavailable ({err})"
    out = {"u": sr.u, "U": U, "ubar": sr.ubar}.get(s.output)
    if out is None:
        raise ConfigError(f"unknown singular.output {s.output!r}")
    lio.write_grid(args.out, out, report)
    return EXIT_OK


def _default_radii(u: GridFunction, point) -> np.ndarray:
    reach = float(min(np.min(point - np.asarray(u.spec.lo)), np.min(np.asarray(u.spec.hi) - point)))
    return np.geomspace(max(0.05 * reach, 4 * u.spec.h), 0.5 * reach, 6)


def cmd_diagnose(cfg: RunConfig, args) -> int:
    _check_input(args.input)
    u = lio.read_potential(args.input)
    d = cfg.diagnose
    n = u.spec.n
    if d.mode == "holder":
        point = np.asarray(d.point if d.point is not None else [0.0] * n, float)
        if point.shape != (n,):
            raise ConfigError("diagnose.point needs n values")
        radii = np.asarray(d.radii, float) if d.radii else _default_radii(u, point)
        fit = holder_exponent_fit(u, point, radii)
        report = {"mode": "holder", "point": point, "exponent": fit.exponent, "constant": fit.constant,
                  "residual": fit.residual}
        lio.write_table(args.out, ["radius", "oscillation"], np.column_stack([fit.radii, fit.oscillation]), report)
    elif d.mode == "vmo":
        radii = np.asarray(d.radii, float) if d.radii else u.spec.h * np.array([2, 3, 4, 6, 8])
        omega = vmo_modulus(hessian_field(u), u.spec.h, radii)
        report = {"mode": "vmo"}
        if np.all(omega > 0):
            report["rate"] = float(np.polyfit(np.log(radii), np.log(omega), 1)[0])
        lio.write_table(args.out, ["radius", "omega"], np.column_stack([radii, omega]), report)
    elif d.mode == "rank":
        rep = rank_field(u, d.eig_tol)
        x = u.spec.interior_coords().reshape(-1, n)
        report = {"mode": "rank", "eig_tol": rep.eig_tol, "constant": int(rep.constant),
                  "boundary_nodes": len(rep.boundary)}
        names = [f"x{i + 1}" for i in range(n)] + ["rank"]
        lio.write_table(args.out, names, np.column_stack([x, rep.rank.ravel()]), report)
    elif d.mode == "dual":
        rep = dual_convexity_check(u, d.alpha, d.beta, dual_h=d.dual_h)
        report = {"mode": "dual", "min_eigenvalue": rep.min_eigenvalue, "floor": rep.floor,
                  "flatness": rep.flatness, "flatness_residual": rep.flatness_residual,
                  "lower_exponent": rep.lower_exponent, "upper_exponent": rep.upper_exponent,
                  "strongly_convex": int(rep.strongly_convex), "borderline": int(rep.borderline),
                  "consistent": int(rep.consistent), "verdict": rep.verdict}
        names = [f"xbar{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)] + ["flatness"]
        lio.write_table(args.out, names, np.concatenate([rep.point, rep.direction, [rep.flatness]]), report)
    else:
        raise ConfigError(f"unknown diagnose.mode {d.mode!r}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = run_suite(args.suite, cfg.run.seed)
    for c in checks:
        print(c.row())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


HANDLERS = {
    "solve": cmd_solve,
    "rotate": cmd_rotate,
    "inverse-rotate": cmd_inverse,
    "profile": cmd_profile,
    "singular": cmd_singular,
    "diagnose": cmd_diagnose,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        return HANDLERS[args.command](cfg, args)
    except (BlowUpError, BranchError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, lio.FormatError, GridError, PhaseError, TransformError, SolverError,
            ProfileError, DiagnosticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except np.linalg.LinAlgError as err:
        print(f"error: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

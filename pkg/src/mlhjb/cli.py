"""Command-line front end: kernel evaluation, identity verification, solves, rollouts.

Subcommands:
  ml      evaluate the one- or two-parameter Mittag-Leffler function
  verify  tabulate the semigroup-defect identity residual as CSV
  solve   run a catalog problem and write value/policy/residual CSV files
  cost    forward-evaluate the discounted cost of a feedback law or policy file

Exit codes: 0 success, 1 verification tolerance unmet, 2 usage or domain
error, 3 numerical divergence (including state escape).

Flags override values from an optional key=value config file (--config);
unknown config keys are errors.  The MLHJB_OUT environment variable selects
the default output directory for `solve` when --out is absent.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import catalog
from .defect import QuadratureConfig, delta_ml
from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    StateEscapeError,
)
from .hjb import SolverConfig, evaluate_cost, lqr_oracle, solve_fractional
from .specfun import DiscountSpec, SeriesControl, kernel, ml_one, ml_two

__all__ = ["main", "console_main", "build_parser"]

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

_ENV_OUT = "MLHJB_OUT"


def _fmt_line(x: float) -> str:
    return f"{x:.12f}"


def _fmt_csv(x: float) -> str:
    return f"{x:.12g}"


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _add_shared(sp: argparse.ArgumentParser, lam_default: float = -0.5, tol_default=None) -> None:
    sp.add_argument("--alpha", type=float, default=1.0, help="kernel order in (0, 1] (default %(default)s)")
    sp.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        default=lam_default,
        help="discount rate multiplier; negative values discount (default %(default)s)",
    )
    sp.add_argument("--tol", type=float, default=tol_default, help="tolerance (command-specific meaning)")
    sp.add_argument("--out", default=None, help="output file (or directory for solve)")
    sp.add_argument("--config", default=None, help="key=value config file; flags take precedence")
    sp.add_argument("--seed", type=int, default=0, help="seed reserved for randomized checks (commands here are deterministic)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="mlhjb",
        description="Optimal control with a Mittag-Leffler discount kernel.",
        epilog=f"Environment: {_ENV_OUT} selects the default output directory for `solve`.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    ml = sub.add_parser("ml", help="evaluate E_a(z) or E_{a,b}(z) to 12 digits")
    ml.add_argument("--z", type=float, required=False, default=None, help="argument z")
    ml.add_argument("--beta", type=float, default=None, help="second parameter; omit for the one-parameter function")
    _add_shared(ml)
    subs["ml"] = ml

    verify = sub.add_parser("verify", help="tabulate the semigroup-defect identity residual")
    verify.add_argument("--t", type=float, default=1.0, help="first time argument (default %(default)s)")
    verify.add_argument(
        "--s",
        type=_float_list,
        default=[0.25, 0.5, 1.0],
        help="comma-separated list of second time arguments (default 0.25,0.5,1.0)",
    )
    verify.add_argument("--panels", type=int, default=8, help="quadrature panels per sub-interval (default %(default)s)")
    verify.add_argument(
        "--scheme",
        choices=("gauss_legendre", "adaptive_simpson"),
        default="gauss_legendre",
        help="quadrature rule (default %(default)s)",
    )
    _add_shared(verify, lam_default=-1.0, tol_default=1e-5)
    subs["verify"] = verify

    solve = sub.add_parser("solve", help="solve a catalog problem; write value/policy/residual CSVs")
    solve.add_argument("--problem", choices=catalog.PROBLEM_NAMES, default="lq1d", help="catalog problem (default %(default)s)")
    solve.add_argument("--dt", type=float, default=None, help="time step (default per problem)")
    solve.add_argument("--horizon", type=float, default=None, help="horizon truncation T (default per problem)")
    solve.add_argument("--nx", type=int, default=None, help="grid points per state dimension (default per problem)")
    solve.add_argument("--window", type=int, default=None, help="memory slices for the residual diagnostic (default per problem)")
    solve.add_argument("--x0", type=_float_list, default=None, help="summary evaluation state (default per problem)")
    solve.add_argument("--stride", type=int, default=None, help="emit every Nth time slice to CSV (default: about 200 slices)")
    _add_shared(solve)
    subs["solve"] = solve

    cost = sub.add_parser("cost", help="forward-evaluate the discounted cost of a control law")
    cost.add_argument("--problem", choices=catalog.PROBLEM_NAMES, default="lq1d", help="catalog problem (default %(default)s)")
    cost.add_argument("--dt", type=float, default=None, help="time step (default per problem)")
    cost.add_argument("--horizon", type=float, default=None, help="horizon truncation T (default per problem)")
    cost.add_argument("--nx", type=int, default=None, help="grid resolution used when replaying a policy file")
    cost.add_argument("--x0", type=_float_list, default=None, help="initial state (default per problem)")
    cost.add_argument("--policy", default=None, help="policy.csv file written by `solve` to replay")
    cost.add_argument(
        "--feedback",
        choices=("zero", "lqr"),
        default="zero",
        help="builtin feedback law when no policy file is given (default %(default)s)",
    )
    _add_shared(cost)
    subs["cost"] = cost

    return parser, subs


def _load_config(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key == "lambda":
            key = "lam"
        out[key] = value
    return out


def _emit_line(line: str, out: str | None) -> None:
    print(line)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(line + "\n")


def _cmd_ml(args) -> int:
    if args.z is None:
        raise DomainError("--z is required")
    control = SeriesControl(rel_tol=args.tol) if args.tol is not None else None
    if args.beta is None:
        value = ml_one(args.alpha, args.z, control)
    else:
        value = ml_two(args.alpha, args.beta, args.z, control)
    _emit_line(_fmt_line(float(value)), args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    spec = DiscountSpec(args.alpha, args.lam)
    quad = QuadratureConfig(panels=args.panels, scheme=args.scheme)
    if not args.s:
        raise DomainError("--s must list at least one value")
    rows = []
    worst = 0.0
    for s in args.s:
        kt = float(kernel(spec, args.t))
        ks = float(kernel(spec, s))
        kts = float(kernel(spec, args.t + s))
        delta = delta_ml(spec, args.t, s, quad)
        resid = kt * ks - delta - kts
        worst = max(worst, abs(resid))
        rows.append((args.t, s, kt * ks, delta, kts, resid))
    target = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(["t", "s", "product", "delta", "composed", "residual"])
        for row in rows:
            writer.writerow([_fmt_csv(v) for v in row])
    finally:
        if args.out:
            target.close()
    return EXIT_OK if worst <= args.tol else EXIT_TOLERANCE


def _slice_indices(count: int, stride: int | None) -> list[int]:
    if stride is None or stride <= 0:
        stride = max(1, math.ceil(count / 201))
    idx = list(range(0, count, stride))
    if idx[-1] != count - 1:
        idx.append(count - 1)
    return idx


def _grid_rows(axes: tuple) -> list[tuple]:
    if len(axes) == 1:
        return [(i,) for i in range(len(axes[0]))]
    return [(i, j) for i in range(len(axes[0])) for j in range(len(axes[1]))]


def _write_field_csv(path: str, header: list[str], times, axes, indices, value_of) -> None:
    nodes = _grid_rows(axes)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in indices:
            for node in nodes:
                coords = [axes[d][node[d]] for d in range(len(axes))]
                vals = value_of(i, node)
                if vals is None:
                    continue
                writer.writerow([_fmt_csv(times[i])] + [_fmt_csv(c) for c in coords] + [_fmt_csv(v) for v in vals])


def _cmd_solve(args) -> int:
    entry = catalog.get(args.problem)
    spec = DiscountSpec(args.alpha, args.lam)
    cfg = SolverConfig(
        dt=entry.dt if args.dt is None else args.dt,
        horizon=entry.horizon if args.horizon is None else args.horizon,
        nx=entry.nx if args.nx is None else args.nx,
        window=entry.window if args.window is None else args.window,
    )
    fld, pol = solve_fractional(entry.problem, spec, cfg)
    outdir = args.out or os.environ.get(_ENV_OUT) or "."
    os.makedirs(outdir, exist_ok=True)
    axes = fld.axes
    xcols = ["x"] if len(axes) == 1 else ["x1", "x2"]
    nt = cfg.steps

    value_idx = _slice_indices(nt + 1, args.stride)
    _write_field_csv(
        os.path.join(outdir, "value.csv"),
        ["t"] + xcols + ["V"],
        fld.times,
        axes,
        value_idx,
        lambda i, node: (fld.values[(i, *node)],),
    )
    policy_idx = [i for i in _slice_indices(nt, args.stride) if i < nt]
    ucols = ["u"] if pol.control_grid.shape[1] == 1 else [f"u{k+1}" for k in range(pol.control_grid.shape[1])]
    _write_field_csv(
        os.path.join(outdir, "policy.csv"),
        ["t"] + xcols + ucols,
        fld.times,
        axes,
        policy_idx,
        lambda i, node: tuple(pol.control_grid[pol.controls[(i, *node)]]),
    )
    resid_idx = [i for i in value_idx if i < fld.residual.shape[0] and np.all(np.isfinite(fld.residual[i]))]
    _write_field_csv(
        os.path.join(outdir, "residual.csv"),
        ["t"] + xcols + ["residual"],
        fld.times,
        axes,
        resid_idx,
        lambda i, node: (fld.residual[(i, *node)],),
    )
    x0 = tuple(entry.x0) if args.x0 is None else tuple(args.x0)
    if len(x0) != entry.problem.dim_x:
        raise DomainError(f"--x0 must have {entry.problem.dim_x} components for {entry.name}")
    print(f"V(x0,0) = {_fmt_line(fld.at(np.asarray(x0), 0))}")
    return EXIT_OK


def _policy_file_law(path: str, dim_x: int):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read policy file {path!r}: {exc}")
    if len(rows) < 2:
        raise ConfigError(f"policy file {path!r} has no data rows")
    header = rows[0]
    if len(header) < dim_x + 2 or header[0] != "t":
        raise ConfigError(f"policy file {path!r} header {header!r} does not match (t, x..., u...)")
    du = len(header) - 1 - dim_x
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError:
        raise ConfigError(f"policy file {path!r} contains non-numeric cells")
    if data.shape[1] != len(header):
        raise ConfigError(f"policy file {path!r} has ragged rows")
    tvals = np.unique(data[:, 0])
    axes = [np.unique(data[:, 1 + d]) for d in range(dim_x)]
    shape = (len(tvals),) + tuple(len(ax) for ax in axes)
    expected = int(np.prod(shape))
    if data.shape[0] != expected:
        raise ConfigError(f"policy file {path!r} does not cover a full (t, x) grid")
    table = np.empty(shape + (du,))
    it = np.searchsorted(tvals, data[:, 0])
    node = tuple(np.searchsorted(axes[d], data[:, 1 + d]) for d in range(dim_x))
    table[(it, *node)] = data[:, 1 + dim_x :]

    def law(x: np.ndarray, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(tvals - t)))
        idx = tuple(int(np.argmin(np.abs(axes[d] - x[d]))) for d in range(dim_x))
        return table[(i, *idx)]

    return law


def _cmd_cost(args) -> int:
    entry = catalog.get(args.problem)
    spec = DiscountSpec(args.alpha, args.lam)
    cfg = SolverConfig(
        dt=entry.dt if args.dt is None else args.dt,
        horizon=entry.horizon if args.horizon is None else args.horizon,
        nx=entry.nx if args.nx is None else args.nx,
        window=entry.window,
    )
    x0 = tuple(entry.x0) if args.x0 is None else tuple(args.x0)
    if args.feedback not in ("zero", "lqr"):
        raise ConfigError(f"unknown feedback law {args.feedback!r}")
    if args.policy is not None:
        law = _policy_file_law(args.policy, entry.problem.dim_x)
    elif args.feedback == "lqr":
        if args.problem != "lq1d":
            raise ConfigError("--feedback lqr is defined only for the lq1d problem")
        c = catalog.LQ1D_COEFFS
        _, gain = lqr_oracle(c["a"], c["b"], c["q"], c["r"], args.lam)
        law = lambda x, t: np.array([gain * x[0]])
    else:
        du = entry.problem.controls.shape[1]
        law = lambda x, t: np.zeros(du)
    j = evaluate_cost(entry.problem, spec, law, np.asarray(x0), cfg)
    _emit_line(_fmt_line(j), args.out)
    return EXIT_OK


_DISPATCH = {
    "ml": _cmd_ml,
    "verify": _cmd_verify,
    "solve": _cmd_solve,
    "cost": _cmd_cost,
}


def main(argv=None) -> int:
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.config is not None:
        try:
            overrides = _load_config(args.config)
            sub = subs[args.command]
            valid = {action.dest for action in sub._actions} - {"help", "config", "command"}
            unknown = sorted(set(overrides) - valid)
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
            sub.set_defaults(**overrides)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, ConvergenceError, StateEscapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))

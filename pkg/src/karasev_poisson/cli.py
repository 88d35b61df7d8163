"""Command-line front end.

Subcommands write CSV (to ``--out`` or stdout) and print a short summary to
stderr.  Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 failed check.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .collective import CollectiveStepper, SymplecticScheme, kcollective_step, kcollective_trajectory
from .diagnostics import (drift_report, parallel_map, reference_flow, self_adjoint_residual,
                          slope_fit, tensor_error)
from .exceptions import (ConvergenceError, IntegratorError, KarasevError, SingularJacobianError,
                         StepFailure, UsageError, ValidationError)
from .hj import GeneratingFunction, StepConfig, khj_step, khj_trajectory
from .karasev import Realization, alpha_oracle, realization_error_sweep
from .model import builtin, parse_system_json
from .report import format_float

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 2, 3, 4

MODES = ("realization", "tensor", "dynamics_h", "dynamics_eps")


@dataclass
class RunConfig:
    system: str = "so3"
    system_file: str = None
    method: str = "khj"
    alpha_order: int = 4
    hj_order: int = 2
    scheme: str = "implicit_midpoint"
    eps: float = 0.1
    h: float = 0.5
    steps: int = 100
    x0: tuple = None
    point: tuple = None
    eps_grid: tuple = (-3.0, -0.5, 20)
    h_grid: tuple = (-1.5, 0.5, 9)
    mode: str = "realization"
    seed: int = 42
    samples: int = 100
    floor: float = 1e-13
    workers: int = 1
    out: str = None
    emit_gnuplot: bool = False

    def validate(self):
        if self.method not in ("khj", "kcollective"):
            raise UsageError(f"unknown method {self.method!r}")
        if self.scheme not in ("implicit_midpoint", "gauss4"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.mode not in MODES:
            raise UsageError(f"unknown convergence mode {self.mode!r}")
        if self.alpha_order < 0:
            raise UsageError("--alpha-order must be >= 0")
        if self.hj_order < 1:
            raise UsageError("--hj-order must be >= 1")
        if self.steps < 0:
            raise UsageError("--steps must be >= 0")
        for name in ("eps_grid", "h_grid"):
            lo, hi, count = getattr(self, name)
            if int(count) != count or count < 4:
                raise UsageError(f"--{name.replace('_', '-')} needs at least 4 points")
        values = [self.eps, self.h, self.floor, *self.eps_grid, *self.h_grid,
                  *(self.x0 or ()), *(self.point or ())]
        if not all(math.isfinite(v) for v in values):
            raise UsageError("numeric settings must be finite")
        if self.emit_gnuplot and not self.out:
            raise UsageError("--emit-gnuplot needs --out")
        return self


def _floats(text, name):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _grid(text, name):
    vals = _floats(text, name)
    if len(vals) != 3:
        raise UsageError(f"{name}: expected 'lo,hi,count'")
    return (vals[0], vals[1], int(vals[2]))


_CONVERT = {
    "alpha_order": int, "hj_order": int, "steps": int, "seed": int, "samples": int,
    "workers": int, "eps": float, "h": float, "floor": float, "emit_gnuplot": bool,
    "x0": lambda v: _floats(v, "x0"), "point": lambda v: _floats(v, "point"),
    "eps_grid": lambda v: _grid(v, "eps-grid"), "h_grid": lambda v: _grid(v, "h-grid"),
}


def build_config(args):
    """Defaults, then the ``--config`` JSON file, then explicit flags."""
    merged = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            merged[f.name] = v
    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = {}
    for k, v in merged.items():
        conv = _CONVERT.get(k)
        try:
            cfg[k] = conv(v) if conv and v is not None else v
        except UsageError:
            raise
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {k}: {v!r}") from exc
    return RunConfig(**cfg).validate()


def load_system(cfg, validate=True):
    if cfg.system_file:
        try:
            text = Path(cfg.system_file).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read system file: {exc}") from exc
        return parse_system_json(text, validate=validate)
    return builtin(cfg.system)


def _default_x0(cfg, system):
    if cfg.x0 is not None:
        x0 = np.array(cfg.x0)
    elif system.dim == 3:
        x0 = np.array([1.0, 3.0, 3.0])
    else:
        x0 = np.linspace(0.5, 1.0, system.dim)
    if x0.size != system.dim:
        raise UsageError(f"--x0 needs {system.dim} values")
    return x0


def _default_point(cfg, system):
    if cfg.point is not None:
        z = np.array(cfg.point)
    elif system.dim == 3:
        z = np.array([2.0, 3.0, 3.0, 1.0, 2.0, 3.0])
    else:
        z = np.concatenate([np.linspace(0.5, 1.0, system.dim), np.linspace(0.2, 0.4, system.dim)])
    if z.size != 2 * system.dim:
        raise UsageError(f"--point needs {2 * system.dim} values")
    return z


def make_step(cfg, system, eps, h):
    """One-step map ``x -> x_next`` of the configured method."""
    r = Realization(system, cfg.alpha_order)
    if cfg.method == "khj":
        g = GeneratingFunction(r, eps, cfg.hj_order)
        sc = StepConfig(h)
        return lambda x: khj_step(g, sc, x)
    cs = CollectiveStepper(r, eps, SymplecticScheme(cfg.scheme))
    return lambda x: kcollective_step(cs, x, h)


def _logspace(grid):
    lo, hi, count = grid
    return np.logspace(lo, hi, int(count))


def _write_csv(cfg, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg):
    print(msg, file=sys.stderr)


_LOGLOG = """set logscale xy
set format xy "%g"
set xlabel "{x}"
set ylabel "{y}"
set datafile separator ","
set key autotitle columnhead
plot "{csv}" using 1:2 with linespoints
"""

_DRIFT = """set xlabel "step"
set ylabel "value - initial value"
set datafile separator ","
{lines}
"""


def _emit_gnuplot(cfg, script):
    if cfg.emit_gnuplot:
        path = Path(cfg.out).with_suffix(".gp")
        path.write_text(script)
        _say(f"gnuplot script: {path}")


def _sweep_summary(cfg, u, err, label):
    try:
        fit = slope_fit(np.column_stack([u, err]), floor=cfg.floor)
    except UsageError as exc:
        _say(f"{label}: slope not fitted: {exc}")
        return None
    lo, hi = u[fit.window[0]], u[fit.window[-1]]
    _say(f"{label}: slope {fit.slope:.4f} over {len(fit.window)} points, "
         f"window indices {fit.window[0]}..{fit.window[-1]} ({lo:.3g}..{hi:.3g})")
    return fit


def _emit_sweep(cfg, name, u, err, label):
    _write_csv(cfg, [name, "error"], [[format_float(a), format_float(b)] for a, b in zip(u, err)])
    _sweep_summary(cfg, u, err, label)
    if cfg.out:
        _emit_gnuplot(cfg, _LOGLOG.format(x=name, y="error", csv=cfg.out))


def cmd_realization_error(cfg):
    system = load_system(cfg)
    z = _default_point(cfg, system)
    eps = _logspace(cfg.eps_grid)
    err = realization_error_sweep(Realization(system, cfg.alpha_order), z, eps)
    _emit_sweep(cfg, "eps", eps, err, f"realization error, n={cfg.alpha_order}")
    return EXIT_OK


def cmd_trajectory(cfg):
    system = load_system(cfg)
    x0 = _default_x0(cfg, system)
    r = Realization(system, cfg.alpha_order)
    code = EXIT_OK
    try:
        if cfg.method == "khj":
            report = khj_trajectory(GeneratingFunction(r, cfg.eps, cfg.hj_order),
                                    StepConfig(cfg.h), x0, cfg.steps)
        else:
            cs = CollectiveStepper(r, cfg.eps, SymplecticScheme(cfg.scheme))
            report = kcollective_trajectory(cs, x0, cfg.h, cfg.steps)
    except StepFailure as exc:
        report = exc.report
        _say(f"solver failure: {exc}")
        code = EXIT_SOLVER
    report.meta["seed"] = cfg.seed
    _write_csv(cfg, report.header(), report.rows())
    for name, s in drift_report(report).items():
        _say(f"{name}: max|diff| {s['max_abs']:.3e}, trend/step {s['trend']:.3e}, "
             f"oscillation {s['oscillation']:.3e}, secular {'yes' if s['secular'] else 'no'}")
    if cfg.out and report.samples:
        cols = report.header()
        first = cols.index("H")
        init = [report.samples[0].hamiltonian, *report.samples[0].casimirs]
        plots = ", ".join(f'"{cfg.out}" using 1:(${i + 1}-({format_float(v)})) '
                          f'with lines title "{cols[i]}"'
                          for i, v in zip(range(first, len(cols) - 1), init))
        _emit_gnuplot(cfg, _DRIFT.format(lines=f"plot {plots}"))
    return code


def _one_step_error(cfg, system, x0, eps, h):
    y = make_step(cfg, system, eps, h)(x0)
    return float(np.max(np.abs(np.asarray(y) - reference_flow(system, x0, eps, h))))


def cmd_convergence(cfg):
    system = load_system(cfg)
    mode = cfg.mode
    if mode == "realization":
        z = _default_point(cfg, system)
        d = system.dim
        r = Realization(system, cfg.alpha_order)
        u = _logspace(cfg.eps_grid)

        def err(e):
            a = np.array(r.alpha(list(z[:d]), list(z[d:]), e))
            return float(np.max(np.abs(a - np.array(alpha_oracle(r, z[:d], z[d:], e, tol=1e-14)))))
        name = "eps"
    elif mode == "tensor":
        x0 = _default_x0(cfg, system)
        u = _logspace(cfg.eps_grid)

        def err(e):
            return tensor_error(make_step(cfg, system, e, cfg.h), system, x0)
        name = "eps"
    elif mode == "dynamics_h":
        x0 = _default_x0(cfg, system)
        u = _logspace(cfg.h_grid)

        def err(h):
            return _one_step_error(cfg, system, x0, cfg.eps, h)
        name = "h"
    else:
        x0 = _default_x0(cfg, system)
        u = _logspace(cfg.eps_grid)

        def err(e):
            return _one_step_error(cfg, system, x0, e, cfg.h)
        name = "eps"
    errors = np.array(parallel_map(err, u, cfg.workers))
    _emit_sweep(cfg, name, u, errors, f"{mode}, n={cfg.alpha_order}, m={cfg.hj_order}")
    return EXIT_OK


def cmd_tensor_error(cfg):
    system = load_system(cfg)
    x0 = _default_x0(cfg, system)
    eps = _logspace(cfg.eps_grid)
    errors = np.array(parallel_map(
        lambda e: tensor_error(make_step(cfg, system, e, cfg.h), system, x0), eps, cfg.workers))
    _emit_sweep(cfg, "eps", eps, errors, f"tensor error ({cfg.method}), n={cfg.alpha_order}")
    return EXIT_OK


def _check_line(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def cmd_check(cfg, tol=1e-10):
    system = load_system(cfg, validate=False)
    rng = np.random.default_rng(cfg.seed)
    d = system.dim
    ok = True

    pts = rng.uniform(-2.0, 2.0, (cfg.samples, d))
    jac = max(system.jacobi_residual(x) for x in pts)
    ok &= _check_line("jacobi", jac <= tol, f"max residual {jac:.3e} over {cfg.samples} points")
    if system.casimirs:
        cas = max(system.casimir_compatibility(x) for x in pts)
        ok &= _check_line("casimir", cas <= tol, f"max |Pi grad C| {cas:.3e}")
    else:
        _check_line("casimir", True, "no Casimirs declared")
    if not ok:
        return EXIT_CHECK

    r = Realization(system, cfg.alpha_order)
    x_pts = rng.uniform(0.5, 2.0, (3, d))
    g = GeneratingFunction(r, cfg.eps, 4, odd_only=False)
    even = max(max(abs(c.value) for c in g.coefficients(x, 0)[1::2]) for x in x_pts)
    ok &= _check_line("odd generating function", even <= 1e-11, f"max |S_2|, |S_4| {even:.3e}")

    g = GeneratingFunction(r, cfg.eps, cfg.hj_order)
    try:
        sa = max(self_adjoint_residual(lambda x, h: khj_step(g, StepConfig(h), x), x, cfg.h)
                 for x in x_pts)
        ok &= _check_line("khj self-adjoint", sa <= 1e-11, f"max residual {sa:.3e}")
    except (ConvergenceError, SingularJacobianError) as exc:
        ok &= _check_line("khj self-adjoint", False, f"solver failure: {exc}")
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "realization-error": cmd_realization_error,
    "trajectory": cmd_trajectory,
    "convergence": cmd_convergence,
    "tensor-error": cmd_tensor_error,
    "check": cmd_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--system", help="builtin system: so3, lotka_volterra, magnetic, canonicalN, zeroN")
    a("--system-file", help="path to a system JSON document")
    a("--method", choices=["khj", "kcollective"])
    a("--alpha-order", type=int, help="truncation order n of the realization")
    a("--hj-order", type=int, help="order m of the generating function in h")
    a("--scheme", choices=["implicit_midpoint", "gauss4"])
    a("--eps", type=float)
    a("--h", type=float)
    a("--steps", type=int)
    a("--x0", help='initial point, "a,b,c"')
    a("--point", help="realization-space point (x, p)")
    a("--eps-grid", help='"lo,hi,count": count eps values from 10**lo to 10**hi')
    a("--h-grid", help='"lo,hi,count" for step-size sweeps')
    a("--mode", choices=MODES, help="convergence sweep type")
    a("--seed", type=int)
    a("--samples", type=int, help="random points used by check")
    a("--floor", type=float, help="noise floor for slope fits")
    a("--workers", type=int, help="threads for sweeps")
    a("--out", help="CSV output path (default stdout)")
    a("--emit-gnuplot", action="store_const", const=True, default=None)
    a("--config", help="JSON file with defaults; flags override it")

    parser = argparse.ArgumentParser(
        prog="karasev-poisson",
        description="Poisson integrators from truncated Karasev realizations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ValidationError as exc:
        _say(f"invalid system: {exc}")
        return EXIT_CONFIG
    except UsageError as exc:
        _say(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (StepFailure, ConvergenceError, SingularJacobianError, IntegratorError) as exc:
        _say(f"solver failure: {exc}")
        return EXIT_SOLVER
    except KarasevError as exc:
        _say(f"error: {exc}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected in the terminal summary.  ``--runslow`` adds the n=10 tier.
"""

import time

import numpy as np
import pytest

from karasev_poisson.collective import CollectiveStepper, SymplecticScheme, symplectic_step
from karasev_poisson.diagnostics import (drift_report, reference_flow, self_adjoint_residual,
                                         slope_fit, step_jacobian, tensor_error)
from karasev_poisson.hj import GeneratingFunction, StepConfig, khj_step, khj_trajectory
from karasev_poisson.karasev import Realization, alpha_oracle, realization_error_sweep
from karasev_poisson.model import builtin, lotka_volterra, magnetic, so3
from karasev_poisson.ring import Jet

import oracles

BUILTINS = ["so3", "lotka_volterra", "magnetic", "canonical2", "canonical6", "zero3"]
Z_SO3 = np.array([2.0, 3.0, 3.0, 1.0, 2.0, 3.0])
Z_MAG = np.array([.5, .4, .3, .2, .3, .4, .1, .2, .3, .2, .1, .3])
X0 = np.array([1.0, 3.0, 3.0])
EPS_GRID = np.logspace(-3, -0.5, 20)


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def in_range(v, lo, hi):
    return lo <= v <= hi


def test_c01_closed_form_first_terms(criterion):
    rng = np.random.default_rng(101)
    worst = {}
    with Clock() as clk:
        for make, pi, dpi, ddpi in [
            (so3, oracles.so3_pi, oracles.so3_dpi, oracles.so3_ddpi),
            (lotka_volterra, oracles.lv_pi, oracles.lv_dpi, oracles.lv_ddpi),
        ]:
            r = Realization(make(), 3)
            err = 0.0
            for _ in range(100):
                x, p = rng.uniform(0.1, 2.0, 3), rng.uniform(-1.0, 1.0, 3)
                got = r.coefficients(list(x), list(p))[1:]
                want = oracles.first_terms(pi, dpi, ddpi, x, p)
                err = max(err, max(np.max(np.abs(np.array(a) - b)) for a, b in zip(got, want)))
            worst[make.__name__] = err
    ok = max(worst.values()) <= 1e-12 and clk.seconds < 5
    criterion("1 closed-form alpha_(1..3)", ok,
              f"max abs diff {worst} (tol 1e-12), {clk.seconds:.1f}s (< 5s)")


def _realization_slope(system, n, z):
    err = realization_error_sweep(Realization(system, n), z, EPS_GRID)
    return slope_fit(np.column_stack([EPS_GRID, err])).slope


def test_c02_so3_realization_slope(criterion):
    with Clock() as clk:
        s = _realization_slope(so3(), 4, Z_SO3)
    criterion("2 so3 realization slope n=4", in_range(s, 4.4, 5.6) and clk.seconds < 30,
              f"slope {s:.4f} (want [4.4, 5.6]), {clk.seconds:.1f}s (< 30s)")


@pytest.mark.slow
def test_c02_slow_so3_realization_slope_n10(criterion):
    with Clock() as clk:
        s = _realization_slope(so3(), 10, Z_SO3)
    criterion("2-slow so3 realization slope n=10", in_range(s, 10.0, 12.0) and clk.seconds < 600,
              f"slope {s:.4f} (want [10, 12]), {clk.seconds:.1f}s (< 600s)")


def test_c03_magnetic_realization_slope(criterion):
    with Clock() as clk:
        s = _realization_slope(magnetic(), 2, Z_MAG)
    criterion("3 magnetic realization slope n=2", in_range(s, 2.6, 3.4) and clk.seconds < 20,
              f"slope {s:.4f} (want [2.6, 3.4]), {clk.seconds:.1f}s (< 20s)")


def test_c04_rescaling_and_beta(criterion):
    rng = np.random.default_rng(104)
    worst, exact = 0.0, True
    with Clock() as clk:
        for name in BUILTINS:
            sys = builtin(name)
            r = Realization(sys, 4)
            for _ in range(10):
                x = rng.uniform(0.2, 2.0, sys.dim)
                p = rng.uniform(-1.0, 1.0, sys.dim)
                lam, eps = rng.uniform(0.1, 3.0), 0.1
                a = np.array(r.alpha(list(x), list(p), lam * eps))
                b = np.array(r.alpha(list(x), list(lam * p), eps))
                worst = max(worst, np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))
                exact &= np.array_equal(r.beta(list(x), list(p), eps),
                                        r.alpha(list(x), list(-p), eps))
    ok = worst <= 1e-13 and exact and clk.seconds < 5
    criterion("4 rescaling identity and beta", ok,
              f"max rel diff {worst:.2e} (tol 1e-13), beta bit-exact {exact}, "
              f"{clk.seconds:.1f}s (< 5s)")


@pytest.mark.parametrize("make", [so3, lotka_volterra])
def test_c05_oracle_equivalence(make, criterion):
    x, p = [1.0, 2.0, 3.0], [0.3, -0.2, 0.1]
    grid = np.logspace(-1, 0, 8)
    sys = make()
    slopes = {}
    with Clock() as clk:
        ref = [np.array(alpha_oracle(Realization(sys, 2), x, p, e, tol=1e-14)) for e in grid]
        for n in (2, 4, 6):
            r = Realization(sys, n)
            err = [np.max(np.abs(np.array(r.alpha(x, p, e)) - o)) for e, o in zip(grid, ref)]
            slopes[n] = slope_fit(np.column_stack([grid, err])).slope
    ok = all(in_range(s, n + 0.5, n + 1.5) for n, s in slopes.items()) and clk.seconds < 60
    detail = ", ".join(f"n={n}: {s:.3f} (want [{n + .5}, {n + 1.5}])" for n, s in slopes.items())
    criterion(f"5 oracle equivalence {sys.name}", ok, f"{detail}, {clk.seconds:.1f}s (< 60s)")


def test_c06_khj_tensor_error_slope(criterion):
    grid = np.logspace(-2, 0, 9)
    slopes = {}
    with Clock() as clk:
        for n in (2, 4):
            err = []
            for e in grid:
                g = GeneratingFunction(Realization(so3(), n), e, 3)
                err.append(tensor_error(lambda x: khj_step(g, StepConfig(0.5), x), so3(), X0))
            slopes[n] = slope_fit(np.column_stack([grid, err])).slope
    ok = all(s >= n + 0.5 for n, s in slopes.items()) and clk.seconds < 120
    detail = ", ".join(f"n={n}: {s:.3f} (want >= {n + .5})" for n, s in slopes.items())
    criterion("6 K-HJ tensor error eps-slope", ok, f"{detail}, {clk.seconds:.1f}s (< 120s)")


def test_c07_khj_dynamics_h_slope(criterion):
    grid = np.logspace(-1.5, 0.5, 9)
    eps = 0.1
    r = Realization(so3(), 6)
    slopes = {}
    with Clock() as clk:
        ref = [reference_flow(so3(), X0, eps, h) for h in grid]
        for m in (1, 3):
            g = GeneratingFunction(r, eps, m)
            err = [np.max(np.abs(khj_step(g, StepConfig(h), X0) - y)) for h, y in zip(grid, ref)]
            slopes[m] = slope_fit(np.column_stack([grid, err])).slope
    ok = all(s >= m + 0.5 for m, s in slopes.items()) and clk.seconds < 120
    detail = ", ".join(f"m={m}: {s:.3f} (want >= {m + .5}; odd m bonus gives ~{m + 2})"
                       for m, s in slopes.items())
    criterion("7 K-HJ one-step h-slope", ok, f"{detail}, {clk.seconds:.1f}s (< 120s)")


def test_c08_odd_generating_function_and_self_adjoint(criterion):
    rng = np.random.default_rng(108)
    even, sa = 0.0, 0.0
    with Clock() as clk:
        for make in (so3, lotka_volterra):
            r = Realization(make(), 4)
            g = GeneratingFunction(r, 0.1, 4, odd_only=False)
            for x in rng.uniform(0.5, 2.0, (100, 3)):
                S = g.coefficients(x, 0)
                even = max(even, abs(S[1].value), abs(S[3].value))
            for eps in (0.05, 0.1):
                g = GeneratingFunction(r, eps, 3)
                for h in (0.1, 0.5):
                    x = rng.uniform(0.5, 2.0, 3)
                    sa = max(sa, self_adjoint_residual(
                        lambda v, hh: khj_step(g, StepConfig(hh), v), x, h))
    ok = even <= 1e-11 and sa <= 1e-11 and clk.seconds < 30
    criterion("8 odd S and self-adjointness", ok,
              f"max |S_2|,|S_4| {even:.2e}, self-adjoint residual {sa:.2e} (tol 1e-11), "
              f"{clk.seconds:.1f}s (< 30s)")


def _casimir_drift(report):
    c = report.casimirs[:, 0] - report.casimirs[0, 0]
    finite = np.isfinite(c)
    return float(np.max(np.abs(c[finite]))), int(np.argmin(finite)) if not finite.all() else None


def test_c09_trajectory_regressions(criterion):
    lines = []
    ok = True
    with Clock() as clk:
        runs = {}
        for label, make, n, eps in [("so3", so3, 6, 0.1), ("lv eps=0.1", lotka_volterra, 8, 0.1),
                                    ("lv eps=0.01", lotka_volterra, 8, 0.01)]:
            g = GeneratingFunction(Realization(make(), n), eps, 2)
            rep = khj_trajectory(g, StepConfig(2.0), X0, 500)
            summary = drift_report(rep)
            runs[label] = rep
            secular = [k for k, v in summary.items() if v["secular"]]
            ok &= not secular
            drift, bad = _casimir_drift(rep)
            lines.append(f"{label}: H max {summary['H']['max_abs']:.2e}, Casimir max {drift:.2e}"
                         + (f" (non-finite from step {bad})" if bad is not None else "")
                         + f", secular {secular or 'none'}")
        d1 = _casimir_drift(runs["lv eps=0.1"])[0]
        d2 = _casimir_drift(runs["lv eps=0.01"])[0]
        ok &= d1 / d2 >= 1e3
    ok &= clk.seconds < 120
    criterion("9 trajectory regressions", ok,
              "; ".join(lines) + f"; LV drift ratio {d1 / d2:.2e} (want >= 1e3, finite samples), "
              f"{clk.seconds:.1f}s (< 120s)")


def test_c10_symplecticity_and_beta_conservation(criterion):
    rng = np.random.default_rng(110)
    W = np.block([[np.zeros((3, 3)), np.eye(3)], [-np.eye(3), np.zeros((3, 3))]])
    worst = 0.0
    z0 = np.array([1.0, 2.0, 3.0, 0.3, -0.2, 0.4])
    slopes = {}
    with Clock() as clk:
        for kind in ("implicit_midpoint", "gauss4"):
            cs = CollectiveStepper(Realization(so3(), 4), 0.2, SymplecticScheme(kind))
            for _ in range(5):
                z = np.concatenate([rng.uniform(0.5, 2.0, 3), rng.uniform(-0.5, 0.5, 3)])
                J = step_jacobian(lambda w: symplectic_step(cs.scheme, cs.hamiltonian, w, 0.5), z)
                worst = max(worst, np.max(np.abs(J.T @ W @ J - W)))
        # the scheme's own (eps h)^(s+1) error caps the slope, so pair n with scheme order
        for n, kind in [(2, "implicit_midpoint"), (4, "gauss4")]:
            pts = []
            for eps in np.logspace(-1.5, 0, 8):
                r = Realization(so3(), n)
                cs = CollectiveStepper(r, eps, SymplecticScheme(kind))
                z1 = symplectic_step(cs.scheme, cs.hamiltonian, z0, 0.5)
                b0 = np.array(r.beta(list(z0[:3]), list(z0[3:]), eps))
                b1 = np.array(r.beta(list(z1[:3]), list(z1[3:]), eps))
                pts.append((eps, np.max(np.abs(b1 - b0))))
            slopes[(n, kind)] = slope_fit(pts).slope
    ok = worst <= 1e-9 and all(s >= n + 0.5 for (n, _), s in slopes.items()) and clk.seconds < 60
    detail = ", ".join(f"n={n} {k}: {s:.3f} (want >= {n + .5})" for (n, k), s in slopes.items())
    criterion("10 symplecticity and beta conservation", ok,
              f"max |J^T W J - W| {worst:.2e} (tol 1e-9); {detail}, {clk.seconds:.1f}s (< 60s)")


def test_c11_model_sanity(criterion):
    rng = np.random.default_rng(111)
    jac = cas = fd = 0.0
    with Clock() as clk:
        for name in BUILTINS:
            sys = builtin(name)
            for x in rng.uniform(0.1, 2.0, (1000, sys.dim)):
                jac = max(jac, sys.jacobi_residual(x))
                cas = max(cas, sys.casimir_compatibility(x))
            for x in rng.uniform(0.1, 2.0, (5, sys.dim)):
                funcs = [sys.hamiltonian] + [c for c in sys.casimirs] + list(sys.pi.values())
                for f in funcs:
                    g = np.asarray(f(Jet.seed(x, 1)).gradient() if hasattr(
                        f(Jet.seed(x, 1)), "gradient") else np.zeros(sys.dim))
                    d = 1e-6
                    num = np.array([(f(x + d * e) - f(x - d * e)) / (2 * d)
                                    for e in np.eye(sys.dim)])
                    fd = max(fd, np.max(np.abs(g - num)) / max(1.0, np.max(np.abs(num))))
    ok = jac <= 1e-10 and cas <= 1e-10 and fd <= 1e-6 and clk.seconds < 10
    criterion("11 model sanity", ok,
              f"Jacobi {jac:.2e}, Casimir {cas:.2e} (tol 1e-10), jet vs FD rel {fd:.2e} "
              f"(tol 1e-6), {clk.seconds:.1f}s (< 10s)")

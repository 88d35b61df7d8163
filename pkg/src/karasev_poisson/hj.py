"""Hamilton-Jacobi generating functions and the K-HJ Poisson integrator.

A step of size ``h`` uses the Lagrangian ``graph(dS_h)`` where
``S_h(x) = sum_l S_(l)(x) h**l`` solves ``dS/dh = H(alpha(x, dS))`` with
``S_0 = 0``.  Matching powers of ``h`` gives ``S_(1) = H`` and

    (l + 1) S_(l+1) = [h**l] H(alpha(x, sum_{j<=l} h**j grad S_(j))).

The step solves ``beta(xh, grad S_h(xh)) = x_k`` for ``xh`` and returns
``alpha(xh, grad S_h(xh))``.  ``S_h`` is odd in ``h``, which makes the step
self-adjoint.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, SingularJacobianError, StepFailure, UsageError
from .karasev import Realization, evaluate_coefficients
from .report import ExperimentReport
from .ring import (Jet, NewtonOptions, TruncSeries, implicit_jets, layout_of,
                   newton_solve, values_of)

__all__ = [
    "GeneratingFunction",
    "StepConfig",
    "StepInfo",
    "hj_coefficients",
    "khj_step",
    "khj_trajectory",
]

MAX_HALVINGS = 8


class GeneratingFunction:
    """Order-``order_h`` expansion in ``h`` of the HJ generating function.

    With ``odd_only`` the even coefficients are known to vanish and are not
    computed.
    """

    def __init__(self, realization, eps, order_h, odd_only=True):
        if order_h < 1:
            raise UsageError("the HJ order must be at least 1")
        self.realization = realization
        self.eps = float(eps)
        self.order_h = int(order_h)
        self.odd_only = bool(odd_only)

    def __repr__(self):
        return (f"GeneratingFunction({self.realization!r}, eps={self.eps}, "
                f"order_h={self.order_h}, odd_only={self.odd_only})")

    @property
    def system(self):
        return self.realization.system

    def coefficients(self, x, jet_degree):
        """``[S_(1), ..., S_(m)]`` as jets of degree ``jet_degree`` at ``x``."""
        system = self.system
        d, m = system.dim, self.order_h
        x = np.asarray(x, dtype=float)
        top = jet_degree + m - 1
        S = [system.hamiltonian(Jet.seed(x, top))]
        S[0] = _as_jet(S[0], d, top)
        for l in range(1, m):
            deg = top - l
            if self.odd_only and (l + 1) % 2 == 0:
                S.append(Jet.constant(0.0, d, deg))
                continue
            xj = Jet.seed(x, deg)
            P = []
            for i in range(d):
                cells = [Jet.constant(0.0, d, deg)]
                cells += [S[j - 1].derivative(i).truncate(deg) for j in range(1, l + 1)]
                P.append(TruncSeries(cells))
            # p = O(h), so alpha_(k) only enters from h**k on
            order = min(self.realization.order, l)
            coeffs = self.realization.coefficients(xj, P, order=order)
            a = evaluate_coefficients(coeffs, self.eps)
            Ha = system.hamiltonian(a)
            S.append(_as_jet(Ha[l] if isinstance(Ha, TruncSeries) else 0.0, d, deg) / (l + 1))
        return [s.truncate(jet_degree) for s in S]

    def gradient(self, u, h):
        """``grad S_h`` at ``u`` (floats, or degree-1 jets in any variables)."""
        vals = values_of(u)
        has_jets = any(layout_of(v) for v in u)
        S = self.coefficients(vals, 2 if has_jets else 1)
        d = self.system.dim
        if not has_jets:
            g = np.zeros(d)
            for l, s in enumerate(S, start=1):
                g += h ** l * s.gradient()
            return list(g)
        shift = [ui - vi for ui, vi in zip(u, vals)]
        out = []
        for i in range(d):
            acc = None
            for l, s in enumerate(S, start=1):
                term = s.derivative(i) * h ** l
                acc = term if acc is None else acc + term
            out.append(acc.compose(shift))
        return out


def _as_jet(v, nvars, degree):
    if isinstance(v, Jet):
        return v
    return Jet.constant(float(v), nvars, degree)


def hj_coefficients(g, x, jet_degree):
    return g.coefficients(x, jet_degree)


@dataclass(frozen=True)
class StepConfig:
    h: float
    newton: NewtonOptions = field(default_factory=NewtonOptions)


@dataclass
class StepInfo:
    iterations: int = 0
    halvings: int = 0
    residual: float = 0.0


def _single_step(g, x_k, h, newton):
    r, eps = g.realization, g.eps

    def residual(u, xk):
        b = r.beta(list(u), g.gradient(list(u), h), eps)
        return [bi - xi for bi, xi in zip(b, xk)]

    xv = values_of(x_k)
    xhat, info = newton_solve(lambda uj: residual(uj, list(xv)), xv, newton, full_output=True)
    xhat = implicit_jets(residual, xhat, list(x_k))
    out = r.alpha(xhat, g.gradient(xhat, h), eps)
    return out, info


def _step(g, x_k, h, newton, depth, info):
    try:
        out, ni = _single_step(g, x_k, h, newton)
        info.iterations += ni.iterations
        info.residual = max(info.residual, ni.residual)
        return out
    except (ConvergenceError, SingularJacobianError):
        if depth >= MAX_HALVINGS:
            raise
    info.halvings += 1
    mid = _step(g, x_k, h / 2, newton, depth + 1, info)
    return _step(g, mid, h / 2, newton, depth + 1, info)


def khj_step(g, cfg, x_k, full_output=False):
    """One K-HJ step from ``x_k``.

    ``x_k`` may be degree-1 jets; the result then carries the step Jacobian
    (implicit-function theorem at the converged solve).  On Newton failure
    the step is split into two half steps, recursively up to 8 times.
    Returns a float array for real input, the list of jets otherwise.
    """
    h = float(cfg.h)
    info = StepInfo()
    if h == 0.0:
        out = list(x_k)
    else:
        out = _step(g, list(x_k), h, cfg.newton, 0, info)
    if not any(layout_of(v) for v in out):
        out = np.array(out, dtype=float)
    return (out, info) if full_output else out


def khj_trajectory(g, cfg, x0, steps):
    """Iterate :func:`khj_step`; a failure raises :class:`StepFailure` carrying
    the step index and the partial report (``exc.report``)."""
    if steps < 0:
        raise UsageError("steps must be non-negative")
    system = g.system
    report = ExperimentReport(meta={
        "system": system.name, "method": "khj", "n": g.realization.order,
        "m": g.order_h, "eps": g.eps, "h": float(cfg.h), "seed": None,
        "scheme": None,
    })
    x = np.asarray(x0, dtype=float)
    report.record(system, 0, x)
    for k in range(1, steps + 1):
        try:
            x, info = khj_step(g, cfg, x, full_output=True)
        except (ConvergenceError, SingularJacobianError) as exc:
            err = StepFailure(f"K-HJ step {k} failed: {exc}", step=k, cause=exc)
            err.report = report
            raise err from exc
        if not np.all(np.isfinite(x)):
            err = StepFailure(f"K-HJ step {k} produced a non-finite state", step=k)
            err.report = report
            raise err
        report.record(system, k, x, info.iterations, info.halvings)
    return report


def make_generating_function(system, n, eps, m, odd_only=True):
    return GeneratingFunction(Realization(system, n), eps, m, odd_only)

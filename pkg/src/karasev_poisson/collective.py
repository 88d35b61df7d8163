"""The K-Collective Poisson integrator.

The point ``x_k`` is lifted to ``(x_k, 0)`` in R^d x R^d, advanced by a
symplectic Runge-Kutta step for the collective Hamiltonian
``F(x, p) = H(alpha(x, p))`` and projected back with ``alpha``.  On
R^d x R^d the Hamiltonian vector field is ``(xdot, pdot) = (-dF/dp, dF/dx)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, SingularJacobianError, StepFailure, UsageError
from .report import ExperimentReport
from .ring import Jet, NewtonOptions, implicit_jets, layout_of, newton_solve, values_of

__all__ = [
    "SymplecticScheme",
    "CollectiveStepper",
    "collective_hamiltonian",
    "hamiltonian_gradient",
    "symplectic_step",
    "kcollective_step",
    "kcollective_trajectory",
    "SCHEME_ORDER",
]

SCHEME_ORDER = {"implicit_midpoint": 2, "gauss4": 4}

_R3 = np.sqrt(3.0)
_GAUSS_A = np.array([[0.25, 0.25 - _R3 / 6], [0.25 + _R3 / 6, 0.25]])
_GAUSS_B = np.array([0.5, 0.5])
# z' = z + sum_i w_i (Y_i - z) with w = b^T A^{-1}
_GAUSS_W = np.linalg.solve(_GAUSS_A.T, _GAUSS_B)


@dataclass(frozen=True)
class SymplecticScheme:
    kind: str = "implicit_midpoint"
    newton: NewtonOptions = field(default_factory=NewtonOptions)

    def __post_init__(self):
        if self.kind not in SCHEME_ORDER:
            raise UsageError(f"unknown scheme {self.kind!r}; choose from {sorted(SCHEME_ORDER)}")

    @property
    def order(self):
        return SCHEME_ORDER[self.kind]


class CollectiveStepper:
    def __init__(self, realization, eps, scheme=None):
        self.realization = realization
        self.eps = float(eps)
        self.scheme = scheme or SymplecticScheme()

    def __repr__(self):
        return f"CollectiveStepper({self.realization!r}, eps={self.eps}, scheme={self.scheme.kind!r})"

    @property
    def system(self):
        return self.realization.system

    def hamiltonian(self, z):
        d = self.system.dim
        z = list(z)
        if len(z) != 2 * d:
            raise UsageError(f"collective Hamiltonian needs {2 * d} coordinates")
        return self.system.hamiltonian(self.realization.alpha(z[:d], z[d:], self.eps))


def collective_hamiltonian(cs, z):
    return cs.hamiltonian(z)


def hamiltonian_gradient(H, u):
    """Gradient of ``H`` at ``u`` (floats or degree-1 jets).

    For jets, ``H`` is expanded to second order at the real point and its
    first derivatives are re-expanded in the variables of ``u``.
    """
    vals = values_of(u)
    if not any(layout_of(v) for v in u):
        F = H(Jet.seed(vals, 1))
        return list(F.gradient()) if isinstance(F, Jet) else [0.0] * len(vals)
    F = H(Jet.seed(vals, 2))
    if not isinstance(F, Jet):
        return [0.0] * len(vals)
    shift = [ui - vi for ui, vi in zip(u, vals)]
    return [F.derivative(i).compose(shift) for i in range(len(vals))]


def _vector_field(H, z):
    g = hamiltonian_gradient(H, z)
    d = len(z) // 2
    return [-v for v in g[d:]] + g[:d]


def _midpoint(H, z, h, newton):
    def residual(w, zz):
        mid = [(a + b) * 0.5 for a, b in zip(zz, w)]
        X = _vector_field(H, mid)
        return [wi - zi - h * xi for wi, zi, xi in zip(w, zz, X)]

    zv = values_of(z)
    guess = zv + h * np.array(values_of(_vector_field(H, list(zv))))
    w, info = newton_solve(lambda wj: residual(wj, list(zv)), guess, newton, full_output=True)
    return implicit_jets(residual, w, list(z)), info


def _gauss4(H, z, h, newton):
    n = len(z)

    def residual(Y, zz):
        Ys = [Y[:n], Y[n:]]
        X = [_vector_field(H, y) for y in Ys]
        out = []
        for i in range(2):
            for k in range(n):
                acc = Ys[i][k] - zz[k]
                for j in range(2):
                    acc = acc - (h * _GAUSS_A[i, j]) * X[j][k]
                out.append(acc)
        return out

    zv = values_of(z)
    X0 = np.array(values_of(_vector_field(H, list(zv))))
    guess = np.concatenate([zv + h * _GAUSS_A[0].sum() * X0, zv + h * _GAUSS_A[1].sum() * X0])
    Y, info = newton_solve(lambda yj: residual(yj, list(zv)), guess, newton, full_output=True)
    Y = implicit_jets(residual, Y, list(z))
    out = []
    for k in range(n):
        acc = z[k]
        for i in range(2):
            acc = acc + _GAUSS_W[i] * (Y[i * n + k] - z[k])
        out.append(acc)
    return out, info


def symplectic_step(scheme, Hfun, z, h, full_output=False):
    """One step of the symplectic scheme for ``Hfun`` on R^d x R^d.

    ``z`` may hold degree-1 jets, in which case the result carries the
    step Jacobian through the converged stage solve.
    """
    z = list(z)
    if len(z) % 2:
        raise UsageError("phase-space points need an even number of coordinates")
    h = float(h)
    if h == 0.0:
        out, info = z, None
    elif scheme.kind == "implicit_midpoint":
        out, info = _midpoint(Hfun, z, h, scheme.newton)
    else:
        out, info = _gauss4(Hfun, z, h, scheme.newton)
    if not any(layout_of(v) for v in out):
        out = np.array(out, dtype=float)
    return (out, info) if full_output else out


def kcollective_step(cs, x_k, h, full_output=False):
    """Lift ``x_k`` to ``(x_k, 0)``, take one symplectic step, project with ``alpha``."""
    d = cs.system.dim
    x_k = list(x_k)
    if len(x_k) != d:
        raise UsageError(f"point must have {d} coordinates")
    z = x_k + [0.0] * d
    z1, info = symplectic_step(cs.scheme, cs.hamiltonian, z, h, full_output=True)
    z1 = list(z1)
    out = cs.realization.alpha(z1[:d], z1[d:], cs.eps)
    if not any(layout_of(v) for v in out):
        out = np.array(out, dtype=float)
    return (out, info) if full_output else out


def kcollective_trajectory(cs, x0, h, steps):
    """Iterate :func:`kcollective_step`; failures raise :class:`StepFailure`
    with the partial report attached as ``exc.report``."""
    if steps < 0:
        raise UsageError("steps must be non-negative")
    system = cs.system
    report = ExperimentReport(meta={
        "system": system.name, "method": "kcollective", "n": cs.realization.order,
        "m": cs.scheme.order, "eps": cs.eps, "h": float(h), "seed": None,
        "scheme": cs.scheme.kind,
    })
    x = np.asarray(x0, dtype=float)
    report.record(system, 0, x)
    for k in range(1, steps + 1):
        try:
            x, info = kcollective_step(cs, x, h, full_output=True)
        except (ConvergenceError, SingularJacobianError) as exc:
            err = StepFailure(f"K-Collective step {k} failed: {exc}", step=k, cause=exc)
            err.report = report
            raise err from exc
        if not np.all(np.isfinite(x)):
            err = StepFailure(f"K-Collective step {k} produced a non-finite state", step=k)
            err.report = report
            raise err
        report.record(system, k, x, info.iterations if info else 0)
    return report

"""Truncated Karasev realizations.

For a Poisson system on R^d the realization space is R^d x R^d with points
``(x, p)``.  The flat spray ``V(x, p)^j = -sum_i Pi_ij(x) p_i`` is flowed
for a time ``s``; averaging the flow over ``s in [0, eps]`` gives the map
``phi_eps(x, p)``, and the source map ``alpha_eps`` solves
``phi_eps(alpha_eps(x, p), p) = x``.  The target map is
``beta_eps(x, p) = alpha_eps(x, -p)``.

Everything here is computed as a power series in ``eps``: the flow by
Picard iteration on truncated series, the inverse order by order.  The
coefficient ``alpha_(k)`` is homogeneous of degree ``k`` in ``p``, so
``alpha_{lam*eps}(x, p) = alpha_eps(x, lam*p)``.

The functions accept ring elements (floats, :class:`~karasev_poisson.ring.Jet`,
:class:`~karasev_poisson.ring.TruncSeries` and nestings) wherever a point
coordinate is expected.
"""

import numpy as np

from ._rk import MIN_RTOL, integrate
from .exceptions import UsageError
from .ring import (Jet, NewtonOptions, TruncSeries, common_layout, embed,
                   implicit_jets, jacobian_of, layout_of, newton_solve, values_of)

__all__ = [
    "Realization",
    "spray",
    "phi_series",
    "alpha_coefficients",
    "evaluate_coefficients",
    "alpha_eval",
    "beta_eval",
    "alpha_oracle",
    "phi_oracle",
    "realization_error",
    "realization_error_sweep",
    "canonical_bracket",
]


def spray(system, x, p):
    """``V^j = -sum_i Pi_ij(x) p_i``."""
    out = [0.0] * system.dim
    for (i, j), v in system.pi_entries(x).items():
        out[j] = out[j] - v * p[i]
        out[i] = out[i] + v * p[j]
    return out


def _as_layout(values, layout):
    return [v if layout_of(v) == layout else embed(v, layout) for v in values]


def _lie_series(system, x, p, order):
    """Taylor coefficients in ``s`` of the spray flow started at ``x``.

    ``x`` must already share one layout.  Each Picard sweep fixes one more
    coefficient, so sweep ``k`` only needs series of order ``k``.
    """
    X = [TruncSeries.constant(v, 0) for v in x]
    for k in range(order):
        V = _as_layout(spray(system, X, p), X[0].layout)
        X = [TruncSeries.constant(xi, k + 1) + vi.antiderivative() for xi, vi in zip(x, V)]
    return X


class Realization:
    """Order-``n`` truncation of the Karasev realization of ``system``.

    Immutable; coefficients are recomputed for each evaluation point.
    """

    def __init__(self, system, order):
        if int(order) != order or order < 0:
            raise UsageError("realization order must be a non-negative integer")
        self.system = system
        self.order = int(order)

    def __repr__(self):
        return f"Realization({self.system.name!r}, order={self.order})"

    @property
    def dim(self):
        return self.system.dim

    def _check(self, x, p):
        d = self.system.dim
        if len(x) != d or len(p) != d:
            raise UsageError(f"x and p need {d} components each")

    def phi_series(self, x, p, order=None):
        """Coefficients of ``phi_eps(x, p)`` in ``eps`` as one series per component."""
        self._check(x, p)
        n = self.order if order is None else order
        lay = common_layout(list(x) + list(p))
        x = _as_layout(list(x), lay)
        X = _lie_series(self.system, x, list(p), n)
        return [xi.cauchy_average() for xi in X]

    def coefficients(self, x, p, order=None):
        """``[alpha_(0), ..., alpha_(n)]``, each a list of ``dim`` ring elements."""
        self._check(x, p)
        n = self.order if order is None else int(order)
        lay = common_layout(list(x) + list(p))
        x = _as_layout(list(x), lay)
        p = list(p)
        if n == 0:
            return [x]
        alpha = [TruncSeries.constant(v, 0) for v in x]
        for j in range(1, n + 1):
            alpha = [a.truncate(j) for a in alpha]
            X = _lie_series(self.system, alpha, p, j)
            phi = [xi.cauchy_average().collapse() for xi in X]
            alpha = [a + (TruncSeries.constant(xi, j) - c)
                     for a, xi, c in zip(alpha, x, phi)]
        return [[a[k] for a in alpha] for k in range(n + 1)]

    def alpha(self, x, p, eps, order=None):
        return evaluate_coefficients(self.coefficients(x, p, order), eps)

    def beta(self, x, p, eps, order=None):
        return self.alpha(x, [-v for v in p], eps, order)


def evaluate_coefficients(coeffs, eps):
    """Horner sum ``sum_k coeffs[k] * eps**k`` componentwise."""
    eps = float(eps)
    acc = list(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = [a * eps + ci for a, ci in zip(acc, c)]
    return acc


def phi_series(r, x, p):
    return r.phi_series(x, p)


def alpha_coefficients(r, x, p):
    return r.coefficients(x, p)


def alpha_eval(r, x, p, eps):
    return r.alpha(x, p, eps)


def beta_eval(r, x, p, eps):
    return r.beta(x, p, eps)


def canonical_bracket(A):
    """Matrix of ``{f_i, f_j}`` for the rows of the Jacobian ``A`` in ``(x, p)``.

    ``{f, g} = sum_k df/dx_k dg/dp_k - df/dp_k dg/dx_k``.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[1] // 2
    Ax, Ap = A[:, :d], A[:, d:]
    return Ax @ Ap.T - Ap @ Ax.T


def _bracket_mismatch(system, vals, A, eps):
    P = eps * system.pi_array(vals)
    D = P - canonical_bracket(A)
    iu = np.triu_indices(system.dim, 1)
    return float(np.sqrt(np.sum(D[iu] ** 2)))


def realization_error(r, z, eps):
    """Failure of ``alpha`` to be a Poisson map from the canonical structure to ``eps*Pi``.

    ``sqrt(sum_{i<j} (eps*Pi_ij(alpha(z)) - {alpha_i, alpha_j})**2)`` with
    ``z = (x, p)`` of length ``2*dim``.
    """
    return realization_error_sweep(r, z, [eps])[0]


def realization_error_sweep(r, z, eps_values):
    """:func:`realization_error` for several ``eps`` sharing one coefficient solve."""
    z = np.asarray(z, dtype=float)
    d = r.dim
    if z.shape != (2 * d,):
        raise UsageError(f"point must have {2 * d} coordinates")
    zj = Jet.seed(z, 1)
    coeffs = r.coefficients(zj[:d], zj[d:])
    out = []
    for eps in eps_values:
        a = evaluate_coefficients(coeffs, eps)
        a = _as_layout(a, zj[0].layout)
        out.append(_bracket_mismatch(r.system, values_of(a), jacobian_of(a), eps))
    return np.array(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _flow_average(system, y, q, panels, rtol, atol):
    """Average over ``u in [0, 1]`` of the flow of ``V(., q)`` from ``y``.

    ``panels`` composite 10-point Gauss-Legendre panels; the flow is integrated
    node to node.
    """
    def f(state):
        return spray(system, state, q)

    lay = common_layout(list(y) + list(q))
    y = _as_layout(list(y), lay) if lay else list(y)
    total = [0.0] * len(y)
    state, t = y, 0.0
    width = 1.0 / panels
    for k in range(panels):
        for node, w in zip(_GL_NODES, _GL_WEIGHTS):
            tn = width * (k + 0.5 * (node + 1.0))
            state = integrate(f, state, (t, tn), rtol=rtol, atol=atol)
            t = tn
            total = [acc + (0.5 * width * w) * s for acc, s in zip(total, state)]
    return total


def _max_abs(v):
    return float(np.max(np.abs(v.array))) if layout_of(v) else abs(float(v))


def phi_oracle(system, y, p, eps, tol=1e-13, max_panels=64):
    """Untruncated ``phi_eps(y, p)`` by adaptive integration and quadrature.

    The flow runs at tolerance ``tol / 10``.  The quadrature is re-estimated
    with twice as many panels until two successive estimates agree to
    ``tol / 10``, or to the integrator's own round-off level when that is
    larger.
    """
    q = [eps * v for v in p]
    rk_tol = tol / 10
    scale = max(1.0, max(_max_abs(v) for v in y))
    target = max(tol / 10, 10 * MIN_RTOL * scale)
    panels = 1
    prev = _flow_average(system, y, q, panels, rk_tol, rk_tol)
    while True:
        panels *= 2
        cur = _flow_average(system, y, q, panels, rk_tol, rk_tol)
        diff = max(_max_abs(a - b) for a, b in zip(cur, prev))
        if diff <= target or panels >= max_panels:
            return cur
        prev = cur


def alpha_oracle(r, x, p, eps, tol=1e-12, newton=None):
    """Untruncated ``alpha_eps(x, p)`` by solving ``phi_eps(y, p) = x`` numerically.

    Independent of the series machinery: the spray flow is integrated with an
    embedded Runge-Kutta pair and averaged by Gauss-Legendre quadrature;
    Newton's Jacobian is carried through the integrator by degree-1 jets.
    When ``x`` or ``p`` are degree-1 jets, the result is differentiated by the
    implicit-function theorem.
    """
    system = r.system
    d = system.dim
    if len(x) != d or len(p) != d:
        raise UsageError(f"x and p need {d} components each")
    newton = newton or NewtonOptions(tol=tol, max_iter=30)
    xv, pv = values_of(x), values_of(p)
    if eps == 0:
        return list(x)
    guess = xv - 0.5 * eps * np.array(values_of(spray(system, list(xv), list(pv))))

    def residual(y, params):
        xs, ps = params[:d], params[d:]
        phi = phi_oracle(system, y, ps, eps, tol=tol)
        return [a - b for a, b in zip(phi, xs)]

    y = newton_solve(lambda yj: residual(yj, list(xv) + list(pv)), guess, newton)
    return implicit_jets(residual, y, list(x) + list(p))

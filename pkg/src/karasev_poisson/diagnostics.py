"""Order and geometry diagnostics for one-step Poisson maps."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rk import integrate
from .exceptions import UsageError
from .report import ExperimentReport, drift_summary
from .ring import Jet, jacobian_of, layout_of, values_of

__all__ = [
    "ExperimentReport",
    "SlopeFit",
    "slope_fit",
    "step_jacobian",
    "tensor_error",
    "drift_report",
    "self_adjoint_residual",
    "reference_flow",
    "parallel_map",
    "finite_difference_jacobian",
]

DEFAULT_FLOOR = 1e-13


@dataclass
class SlopeFit:
    points: np.ndarray  # rows (log u, log e) of every finite positive input
    slope: float
    intercept: float
    window: np.ndarray  # indices into the input that were fitted

    def __str__(self):
        return f"slope={self.slope:.4f} window={self.window.tolist()}"


def slope_fit(points, floor=DEFAULT_FLOOR, min_points=4):
    """Least-squares slope of ``log e`` against ``log u``.

    Points with ``e <= floor`` are left out of the fit.  Raises
    :class:`UsageError` when fewer than ``min_points`` remain.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    u, e = pts[:, 0], pts[:, 1]
    if np.any(u <= 0):
        raise UsageError("sweep parameters must be positive")
    keep = np.flatnonzero(np.isfinite(e) & (e > floor))
    if keep.size < min_points:
        raise UsageError(f"only {keep.size} points above the noise floor {floor:g}; "
                         f"need {min_points} to fit a slope")
    with np.errstate(divide="ignore"):
        logs = np.column_stack([np.log(u), np.log(np.abs(e))])
    slope, intercept = np.polyfit(logs[keep, 0], logs[keep, 1], 1)
    return SlopeFit(logs, float(slope), float(intercept), keep)


def step_jacobian(step, x):
    """Jacobian of a one-step map at ``x``, by evaluating it on degree-1 jets.

    Steps that solve implicit equations must differentiate the converged
    solution (all steppers in this package do).
    """
    x = np.asarray(x, dtype=float)
    out = list(step(Jet.seed(x, 1)))
    if not any(layout_of(v) for v in out):
        return np.zeros((len(out), x.size))
    return jacobian_of(out)


def finite_difference_jacobian(step, x, delta=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = delta
        cols.append((np.asarray(values_of(step(list(x + e))))
                     - np.asarray(values_of(step(list(x - e))))) / (2 * delta))
    return np.array(cols).T


def tensor_error(step, system, x):
    """How far ``step`` is from a Poisson map at ``x``.

    ``sqrt(sum_{i<j} ([J Pi(x) J^T]_ij - Pi_ij(step(x)))**2)`` with ``J`` the
    step Jacobian.
    """
    x = np.asarray(x, dtype=float)
    out = list(step(Jet.seed(x, 1)))
    y = values_of(out)
    J = jacobian_of(out) if any(layout_of(v) for v in out) else np.zeros((len(out), x.size))
    D = J @ system.pi_array(x) @ J.T - system.pi_array(y)
    iu = np.triu_indices(system.dim, 1)
    return float(np.sqrt(np.sum(D[iu] ** 2)))


def drift_report(report, floor=1e-12, factor=5.0):
    """Fill and return ``report.summary`` (see :func:`drift_summary`)."""
    report.summary = drift_summary(report, floor=floor, factor=factor)
    return report.summary


def self_adjoint_residual(step, x, h):
    """``max |step(step(x, -h), h) - x|`` for a step family ``step(x, h)``."""
    x = np.asarray(x, dtype=float)
    back = step(x, -h)
    return float(np.max(np.abs(np.asarray(step(back, h), dtype=float) - x)))


def reference_flow(system, x0, eps, h, rtol=1e-14, atol=1e-15):
    """Exact Poisson flow of ``H`` for the tensor ``eps * Pi`` over time ``h``.

    Tight DOP853 solve; the target of the one-step error studies.
    """
    def f(x):
        return [eps * v for v in system.hamiltonian_vf(x)]

    return np.array(integrate(f, list(np.asarray(x0, dtype=float)), (0.0, h),
                              rtol=rtol, atol=atol))


def parallel_map(fn, items, workers=None):
    """``[fn(i) for i in items]`` on a thread pool, results in input order."""
    items = list(items)
    if workers is not None and workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

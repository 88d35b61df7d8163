"""Trajectory records and their CSV form."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Sample", "ExperimentReport", "format_float", "drift_summary"]


def format_float(v):
    return "%.17g" % v


@dataclass
class Sample:
    step: int
    t: float
    state: np.ndarray
    hamiltonian: float
    casimirs: np.ndarray
    iterations: int = 0
    halvings: int = 0


@dataclass
class ExperimentReport:
    """Samples of a trajectory plus the parameters that produced it.

    ``meta`` holds ``system``, ``method``, ``n``, ``m``, ``eps``, ``h`` and
    ``seed`` (unused keys are ``None``); the physical time of step ``k`` is
    ``k * eps * h``.
    """

    meta: dict
    samples: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def record(self, system, step, state, iterations=0, halvings=0):
        state = np.array(state, dtype=float)
        eps, h = self.meta.get("eps"), self.meta.get("h")
        t = step * eps * h if eps is not None and h is not None else float(step)
        self.samples.append(Sample(step, t, state, float(system.hamiltonian(state)),
                                   system.casimir_values(state), iterations, halvings))

    def __len__(self):
        return len(self.samples)

    @property
    def states(self):
        return np.array([s.state for s in self.samples])

    @property
    def steps(self):
        return np.array([s.step for s in self.samples])

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def hamiltonian(self):
        return np.array([s.hamiltonian for s in self.samples])

    @property
    def casimirs(self):
        """Array of shape ``(samples, n_casimirs)``."""
        k = len(self.samples[0].casimirs) if self.samples else 0
        return np.array([s.casimirs for s in self.samples]).reshape(len(self.samples), k)

    def observables(self):
        out = {"H": self.hamiltonian}
        cas = self.casimirs
        for k in range(cas.shape[1]):
            out[f"casimir_{k + 1}"] = cas[:, k]
        return out

    def header(self):
        d = len(self.samples[0].state) if self.samples else 0
        k = self.casimirs.shape[1]
        return (["step", "t"] + [f"x_{i + 1}" for i in range(d)] + ["H"]
                + [f"casimir_{i + 1}" for i in range(k)] + ["newton_iters"])

    def rows(self):
        for s in self.samples:
            yield ([str(s.step), format_float(s.t)]
                   + [format_float(v) for v in s.state]
                   + [format_float(s.hamiltonian)]
                   + [format_float(v) for v in s.casimirs]
                   + [str(s.iterations)])

    def to_csv(self, stream=None):
        """Write the samples as CSV; returns the text when ``stream`` is None."""
        buf = stream if stream is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        if stream is None:
            return buf.getvalue()
        return None


def _trend(steps, values):
    if len(values) < 2:
        return 0.0, np.zeros_like(values)
    A = np.vstack([steps, np.ones_like(steps)]).T
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return float(coef[0]), values - A @ coef


def drift_summary(report, floor=1e-12, factor=5.0):
    """Per-observable drift statistics.

    For each observable: ``max_abs`` of value minus initial value, ``min`` and
    ``max`` of that difference, the least-squares ``trend`` per step and the
    peak ``oscillation`` left after removing the trend.  ``secular`` flags a
    trend whose accumulated change over the run exceeds ``factor`` times the
    oscillation (or ``floor``, whichever is larger).
    """
    steps = report.steps.astype(float)
    span = steps[-1] - steps[0] if len(steps) else 0.0
    out = {}
    for name, vals in report.observables().items():
        diff = vals - vals[0] if len(vals) else vals
        trend, resid = _trend(steps, diff)
        osc = float(np.max(np.abs(resid))) if len(resid) else 0.0
        finite = bool(np.all(np.isfinite(diff)))
        out[name] = {
            "max_abs": float(np.max(np.abs(diff))) if len(diff) else 0.0,
            "min": float(np.min(diff)) if len(diff) else 0.0,
            "max": float(np.max(diff)) if len(diff) else 0.0,
            "trend": trend,
            "oscillation": osc,
            "secular": (not finite) or abs(trend) * span > factor * max(osc, floor),
        }
    return out

"""
Lotka-Volterra: shrinking eps
=============================

The geometric error of each step scales like ``eps**(n+1)``, so a tenfold
smaller ``eps`` improves the Casimir by orders of magnitude.  Both components ``x1`` and ``x2`` decay towards the
equilibrium ``(0, 0, 7)``; we stop before they leave the floating-point range.
"""

import numpy as np

from karasev_poisson.hj import GeneratingFunction, StepConfig, khj_trajectory
from karasev_poisson.karasev import Realization
from karasev_poisson.model import lotka_volterra

system = lotka_volterra()
x0 = np.array([1.0, 3.0, 3.0])

for eps in (0.1, 0.01):
    g = GeneratingFunction(Realization(system, 8), eps, 2)
    report = khj_trajectory(g, StepConfig(2.0), x0, 200)
    cas = report.casimirs[:, 0] - report.casimirs[0, 0]
    H = report.hamiltonian - report.hamiltonian[0]
    print(f"eps={eps}: Casimir drift {np.max(np.abs(cas)):.2e}, "
          f"H drift {np.max(np.abs(H)):.2e}, final state {report.states[-1]}")

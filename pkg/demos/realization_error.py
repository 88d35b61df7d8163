"""
Realization error of truncated Karasev maps
===========================================

How fast does the order-``n`` truncation become a Poisson map as ``eps``
shrinks?  We sweep ``eps`` and fit the log-log slope of the bracket mismatch.
"""

import numpy as np

from karasev_poisson.diagnostics import slope_fit
from karasev_poisson.karasev import Realization, realization_error_sweep
from karasev_poisson.model import lotka_volterra, magnetic, so3

eps = np.logspace(-3, -0.5, 20)

###############################################################################
# A quadratic tensor behaves generically: order ``n`` leaves an ``eps**(n+1)``
# error.

z = np.array([2.0, 3.0, 3.0, 1.0, 2.0, 3.0])
for n in (2, 4):
    err = realization_error_sweep(Realization(lotka_volterra(), n), z, eps)
    print(f"lotka_volterra n={n}: slope {slope_fit(np.column_stack([eps, err])).slope:.2f}")

###############################################################################
# For the rigid body the tensor is linear.  Its coefficients are Bernoulli
# numbers times powers of a matrix, and the odd ones past the first vanish,
# so even ``n`` gains one order for free.

for n in (2, 4, 6):
    err = realization_error_sweep(Realization(so3(), n), z, eps)
    print(f"so3 n={n}: slope {slope_fit(np.column_stack([eps, err])).slope:.2f}")

###############################################################################
# The magnetically twisted symplectic form on R^6 is handled the same way.

zm = np.array([.5, .4, .3, .2, .3, .4, .1, .2, .3, .2, .1, .3])
err = realization_error_sweep(Realization(magnetic(), 2), zm, eps)
print(f"magnetic n=2: slope {slope_fit(np.column_stack([eps, err])).slope:.2f}")

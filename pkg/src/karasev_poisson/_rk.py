"""Adaptive Dormand-Prince integration of ring-valued state vectors.

The state is a list of floats or ring elements sharing one layout.  Their
coefficient arrays are concatenated into one real vector for
:func:`scipy.integrate.solve_ivp` (DOP853), so the step-size control acts on
every stored coefficient and derivative information carried by jets is
integrated as accurately as the values.
"""

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import IntegratorError
from .ring import _wrap, common_layout, embed, layout_of

# solve_ivp refuses relative tolerances below 100 * machine epsilon
MIN_RTOL = 100 * np.finfo(float).eps


def _pack(values, layout):
    return np.concatenate([np.ravel(embed(v, layout).data) if layout
                           else [float(v)] for v in values])


def _unpack(flat, layout, n):
    if not layout:
        return [float(v) for v in flat]
    shape = tuple(f.size for f in layout)
    size = int(np.prod(shape))
    return [_wrap(layout, flat[k * size:(k + 1) * size].reshape(shape).copy())
            for k in range(n)]


class _Budget(Exception):
    pass


def integrate(f, y0, t_span, rtol=1e-12, atol=1e-12, max_evals=50000):
    """Integrate ``y' = f(y)`` over ``t_span`` and return ``y(t_span[1])``.

    ``f`` maps a list of ring elements to a list of ring elements (or floats).
    Raises :class:`IntegratorError` if the solver gives up or needs more than
    ``max_evals`` right-hand-side evaluations (typically a blow-up).
    """
    t0, t1 = map(float, t_span)
    y0 = list(y0)
    if t0 == t1:
        return y0
    layout = common_layout(y0)
    n = len(y0)

    evals = [0]

    def rhs(_, flat):
        evals[0] += 1
        if evals[0] > max_evals:
            raise _Budget
        return _pack(f(_unpack(flat, layout, n)), layout)

    try:
        sol = solve_ivp(rhs, (t0, t1), _pack(y0, layout), method="DOP853",
                        rtol=max(rtol, MIN_RTOL), atol=atol)
    except _Budget:
        raise IntegratorError(f"more than {max_evals} evaluations on {t_span}; "
                              "the flow is probably blowing up") from None
    if sol.status != 0:
        raise IntegratorError(f"integration failed: {sol.message}")
    return _unpack(sol.y[:, -1], layout, n)


"""Truncated power series, multivariate jets, and a jet-driven Newton solver.

Every ring element stores its coefficients in one dense float array.  The
array has one axis per *factor* of the element's layout: a
:class:`SeriesLayout` axis holds the coefficients of a univariate series
truncated at a fixed order, a :class:`JetLayout` axis holds the coefficients
of a multivariate Taylor polynomial truncated at a fixed total degree (in
graded-lexicographic order).  ``TruncSeries(Jet(real))`` therefore has a
two-axis array, ``Jet(TruncSeries(real))`` the same two axes swapped.

Elements whose layout is a suffix of another element's layout act as
constants of the larger ring, so a ``Jet`` can be multiplied with a
``TruncSeries`` of jets without explicit embedding.  Plain floats embed
everywhere.

Multiplication is vectorised: for each factor the pairs of input indices
contributing to each output index are gathered with ``np.take`` and summed
with ``np.add.reduceat``; inner factors are handled recursively with the
outer pair axis acting as a batch axis.
"""

import functools
import itertools
import numbers
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceError, SingularJacobianError, UsageError

__all__ = [
    "SeriesLayout",
    "JetLayout",
    "TruncSeries",
    "Jet",
    "NewtonOptions",
    "NewtonInfo",
    "series_mul",
    "series_cauchy_average",
    "jet_mul",
    "jet_gradient",
    "newton_solve",
    "implicit_jets",
    "layout_of",
    "common_layout",
    "embed",
    "values_of",
    "jacobian_of",
    "multi_indices",
]


@dataclass(frozen=True)
class SeriesLayout:
    order: int

    @property
    def size(self):
        return self.order + 1


@dataclass(frozen=True)
class JetLayout:
    nvars: int
    degree: int

    @property
    def size(self):
        return len(multi_indices(self.nvars, self.degree))


@functools.lru_cache(maxsize=None)
def multi_indices(nvars, degree):
    """Multi-indices of total degree <= ``degree`` in graded-lex order.

    >>> multi_indices(2, 2)
    ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    """
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), total):
            exps = [0] * nvars
            for k in combo:
                exps[k] += 1
            out.append(tuple(exps))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _index_map(nvars, degree):
    return {a: i for i, a in enumerate(multi_indices(nvars, degree))}


@functools.lru_cache(maxsize=None)
def _product_table(factor):
    """(left, right, starts) index arrays for the truncated product.

    Pairs are sorted by output index; ``starts`` are the reduceat offsets.
    Every output index has at least the pair (0, k), so no segment is empty.
    """
    left, right, starts = [], [], []
    if isinstance(factor, SeriesLayout):
        for k in range(factor.order + 1):
            starts.append(len(left))
            for i in range(k + 1):
                left.append(i)
                right.append(k - i)
    else:
        idx = _index_map(factor.nvars, factor.degree)
        for a in multi_indices(factor.nvars, factor.degree):
            starts.append(len(left))
            for b in itertools.product(*(range(e + 1) for e in a)):
                left.append(idx[b])
                right.append(idx[tuple(x - y for x, y in zip(a, b))])
    return (np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
            np.array(starts, dtype=np.intp))


def _mul(layout, a, b):
    if not layout:
        return a * b
    axis = -len(layout)
    left, right, starts = _product_table(layout[0])
    prod = _mul(layout[1:], np.take(a, left, axis=axis), np.take(b, right, axis=axis))
    return np.add.reduceat(prod, starts, axis=axis)


def _suffix_offset(long, short):
    k = len(long) - len(short)
    if k > 0 and long[k:] == short:
        return k
    return None


def _shape(layout):
    return tuple(f.size for f in layout)


def _wrap(layout, data):
    if not layout:
        return float(data)
    cls = TruncSeries if isinstance(layout[0], SeriesLayout) else Jet
    obj = object.__new__(cls)
    obj.layout = layout
    obj.data = data
    return obj


def layout_of(value):
    return value.layout if isinstance(value, _Truncated) else ()


def _data(value):
    return value.data if isinstance(value, _Truncated) else np.asarray(float(value))


def common_layout(values):
    """Longest layout among ``values``; all others must be suffixes of it."""
    best = ()
    for v in values:
        lay = layout_of(v)
        if len(lay) > len(best):
            best = lay
    for v in values:
        lay = layout_of(v)
        if lay != best and lay and _suffix_offset(best, lay) is None:
            raise UsageError(f"incompatible coefficient rings {lay} and {best}")
    return best


def embed(value, layout):
    """Embed ``value`` as a constant of the ring with the given layout."""
    lay = layout_of(value)
    if lay == layout:
        return value
    k = len(layout) - len(lay)
    if k < 0 or (lay and layout[k:] != lay):
        raise UsageError(f"cannot embed {lay} into {layout}")
    data = np.zeros(_shape(layout))
    data[(0,) * k] = _data(value)
    return _wrap(layout, data)


def values_of(values):
    """Real parts (constant terms) of a sequence of ring elements."""
    return np.array([v.constant_term() if isinstance(v, _Truncated) else float(v)
                     for v in values])


def jacobian_of(values):
    """Stack the gradients of a sequence of real-coefficient jets into a matrix."""
    rows = []
    nvars = None
    for v in values:
        if isinstance(v, Jet):
            nvars = v.nvars
    for v in values:
        if isinstance(v, Jet):
            rows.append(np.asarray(v.gradient(), dtype=float))
        else:
            rows.append(None)
    if nvars is None:
        raise UsageError("no jet among the values")
    return np.array([np.zeros(nvars) if r is None else r for r in rows])


class _Truncated:
    """Shared arithmetic of :class:`TruncSeries` and :class:`Jet`."""

    __slots__ = ("layout", "data")
    __array_ufunc__ = None

    def _new(self, data):
        return _wrap(self.layout, data)

    def constant_term(self):
        return float(self.data[(0,) * len(self.layout)])

    @property
    def array(self):
        """Coefficient array (read-only view)."""
        view = self.data.view()
        view.flags.writeable = False
        return view

    def __neg__(self):
        return self._new(-self.data)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, numbers.Real):
            data = self.data.copy()
            data[(0,) * len(self.layout)] += other
            return self._new(data)
        if isinstance(other, _Truncated):
            if other.layout == self.layout:
                return self._new(self.data + other.data)
            k = _suffix_offset(self.layout, other.layout)
            if k is not None:
                data = self.data.copy()
                data[(0,) * k] += other.data
                return self._new(data)
            if _suffix_offset(other.layout, self.layout) is not None:
                return other.__add__(self)
            raise UsageError(f"ring mismatch: {self.layout} vs {other.layout}")
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (numbers.Real, _Truncated)):
            return self.__add__(-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (numbers.Real, _Truncated)):
            return (-self).__add__(other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return self._new(self.data * other)
        if isinstance(other, _Truncated):
            if other.layout == self.layout:
                return self._new(_mul(self.layout, self.data, other.data))
            if _suffix_offset(self.layout, other.layout) is not None:
                return self._new(_mul(other.layout, self.data, other.data))
            if _suffix_offset(other.layout, self.layout) is not None:
                return other.__mul__(self)
            raise UsageError(f"ring mismatch: {self.layout} vs {other.layout}")
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        # scale-by-real only; the ring has no general division
        if isinstance(other, numbers.Real):
            return self._new(self.data / other)
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, numbers.Integral) or k < 0:
            return NotImplemented
        result = self._new(np.zeros_like(self.data)) + 1.0
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def coefficient_equal(self, other):
        """Exact equality of layouts and coefficient arrays."""
        return (isinstance(other, _Truncated) and other.layout == self.layout
                and np.array_equal(self.data, other.data))


class TruncSeries(_Truncated):
    """Univariate power series truncated at a fixed order.

    ``coeffs`` may mix floats with ring elements; floats are embedded into the
    common coefficient ring.

    >>> a = TruncSeries([1.0, 1.0, 0.0]); b = TruncSeries([1.0, -1.0, 0.0])
    >>> (a * b).coeffs
    [1.0, 0.0, -1.0]
    """

    __slots__ = ()

    def __init__(self, coeffs):
        coeffs = list(coeffs)
        if not coeffs:
            raise UsageError("a series needs at least one coefficient")
        inner = common_layout(coeffs)
        self.layout = (SeriesLayout(len(coeffs) - 1),) + inner
        self.data = np.stack([_data(embed(c, inner)) for c in coeffs])

    @classmethod
    def constant(cls, value, order):
        inner = layout_of(value)
        data = np.zeros((order + 1,) + _shape(inner))
        data[0] = _data(value)
        return _wrap((SeriesLayout(order),) + inner, data)

    @classmethod
    def variable(cls, order, inner=()):
        """The formal variable of a series ring over the given coefficient layout."""
        data = np.zeros((order + 1,) + _shape(inner))
        if order >= 1:
            data[(1,) + (0,) * len(inner)] = 1.0
        return _wrap((SeriesLayout(order),) + inner, data)

    @property
    def order(self):
        return self.layout[0].order

    @property
    def coeffs(self):
        return [_wrap(self.layout[1:], self.data[k]) for k in range(self.order + 1)]

    def __getitem__(self, k):
        return _wrap(self.layout[1:], self.data[k])

    def __repr__(self):
        return f"TruncSeries(order={self.order}, coeffs={self.coeffs!r})"

    def truncate(self, order):
        """Drop coefficients above ``order`` or zero-pad up to it."""
        n = self.order
        if order <= n:
            data = self.data[:order + 1].copy()
        else:
            data = np.zeros((order + 1,) + self.data.shape[1:])
            data[:n + 1] = self.data
        return _wrap((SeriesLayout(order),) + self.layout[1:], data)

    def cauchy_average(self):
        """Coefficient k divided by k+1: the average of t**k over [0, 1]."""
        scale = 1.0 / np.arange(1, self.order + 2)
        return self._new(self.data * scale.reshape((-1,) + (1,) * (self.data.ndim - 1)))

    def antiderivative(self):
        """Integral from 0 with the order raised by one, so nothing is lost."""
        n = self.order
        data = np.zeros((n + 2,) + self.data.shape[1:])
        scale = 1.0 / np.arange(1, n + 2)
        data[1:] = self.data * scale.reshape((-1,) + (1,) * (self.data.ndim - 1))
        return _wrap((SeriesLayout(n + 1),) + self.layout[1:], data)

    def evaluate(self, t):
        """Horner evaluation at ``t`` (a float or a coefficient-ring element)."""
        acc = self[self.order]
        for k in range(self.order - 1, -1, -1):
            acc = acc * t + self[k]
        return acc

    def collapse(self):
        """Substitute t := u for a series in t over series in u.

        Returns ``sum_k c_k u**k`` truncated at the inner order, where the
        ``c_k`` are the (series-valued) coefficients.
        """
        if len(self.layout) < 2 or not isinstance(self.layout[1], SeriesLayout):
            raise UsageError("collapse needs series coefficients")
        m = self.layout[1].order
        out = np.zeros(self.data.shape[1:])
        for k in range(min(self.order, m) + 1):
            out[k:] += self.data[k, :m + 1 - k]
        return _wrap(self.layout[1:], out)


class Jet(_Truncated):
    """Multivariate Taylor polynomial in ``nvars`` variables, total degree <= ``degree``.

    ``coeffs`` is either a mapping from multi-index tuples to coefficients or
    a sequence in graded-lex order (see :func:`multi_indices`).
    """

    __slots__ = ()

    def __init__(self, nvars, degree, coeffs=None):
        if nvars < 1 or degree < 0:
            raise UsageError("a jet needs nvars >= 1 and degree >= 0")
        index = multi_indices(nvars, degree)
        if coeffs is None:
            coeffs = {}
        if isinstance(coeffs, dict):
            imap = _index_map(nvars, degree)
            for a in coeffs:
                if tuple(a) not in imap:
                    raise UsageError(f"multi-index {a} exceeds degree {degree}")
            inner = common_layout(list(coeffs.values()))
            cells = [coeffs.get(a, 0.0) for a in index]
        else:
            cells = list(coeffs)
            if len(cells) != len(index):
                raise UsageError(f"expected {len(index)} coefficients, got {len(cells)}")
            inner = common_layout(cells)
        self.layout = (JetLayout(nvars, degree),) + inner
        self.data = np.stack([_data(embed(c, inner)) for c in cells])

    @classmethod
    def constant(cls, value, nvars, degree):
        inner = layout_of(value)
        layout = (JetLayout(nvars, degree),) + inner
        data = np.zeros(_shape(layout))
        data[0] = _data(value)
        return _wrap(layout, data)

    @classmethod
    def seed(cls, point, degree):
        """Identity jets ``point[i] + delta_i`` for every coordinate."""
        point = list(point)
        nvars = len(point)
        inner = common_layout(point)
        layout = (JetLayout(nvars, degree),) + inner
        out = []
        for i, v in enumerate(point):
            data = np.zeros(_shape(layout))
            data[0] = _data(embed(v, inner))
            if degree >= 1:
                data[(1 + i,) + (0,) * len(inner)] = 1.0
            out.append(_wrap(layout, data))
        return out

    @classmethod
    def linear(cls, value, gradient):
        """Degree-1 jet with the given value and real gradient."""
        gradient = np.asarray(gradient, dtype=float)
        inner = layout_of(value)
        layout = (JetLayout(len(gradient), 1),) + inner
        data = np.zeros(_shape(layout))
        data[0] = _data(value)
        data[(slice(1, None),) + (0,) * len(inner)] = gradient
        return _wrap(layout, data)

    @property
    def nvars(self):
        return self.layout[0].nvars

    @property
    def degree(self):
        return self.layout[0].degree

    @property
    def coeffs(self):
        inner = self.layout[1:]
        return {a: _wrap(inner, self.data[i])
                for i, a in enumerate(multi_indices(self.nvars, self.degree))}

    @property
    def value(self):
        return _wrap(self.layout[1:], self.data[0])

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, degree={self.degree}, data={self.data!r})"

    def gradient(self):
        """First-order coefficients; an array for real jets, else a list."""
        if self.degree < 1:
            raise UsageError("gradient of a degree-0 jet")
        cells = self.data[1:self.nvars + 1]
        if len(self.layout) == 1:
            return cells.copy()
        return [_wrap(self.layout[1:], c) for c in cells]

    def truncate(self, degree):
        """Drop terms above ``degree`` or zero-pad up to it."""
        v = self.nvars
        size = len(multi_indices(v, degree))
        layout = (JetLayout(v, degree),) + self.layout[1:]
        if degree <= self.degree:
            return _wrap(layout, self.data[:size].copy())
        data = np.zeros((size,) + self.data.shape[1:])
        data[:self.data.shape[0]] = self.data
        return _wrap(layout, data)

    def derivative(self, var):
        """Partial derivative in variable ``var``; the degree drops by one."""
        if self.degree < 1:
            raise UsageError("derivative of a degree-0 jet")
        src, scale = _derivative_table(self.nvars, self.degree, var)
        data = np.take(self.data, src, axis=0) * scale.reshape((-1,) + (1,) * (self.data.ndim - 1))
        return _wrap((JetLayout(self.nvars, self.degree - 1),) + self.layout[1:], data)

    def compose(self, args):
        """Evaluate the jet as a polynomial in its displacement variables.

        ``args[i]`` replaces ``delta_i``; for the Taylor expansion of a
        function at a point, pass ``y - point`` to get the expansion at ``y``.
        """
        args = list(args)
        if len(args) != self.nvars:
            raise UsageError("compose needs one argument per jet variable")
        index = multi_indices(self.nvars, self.degree)
        imap = _index_map(self.nvars, self.degree)
        monomials = [1.0]
        for a in index[1:]:
            r = next(i for i, e in enumerate(a) if e)
            prev = list(a)
            prev[r] -= 1
            monomials.append(monomials[imap[tuple(prev)]] * args[r])
        inner = self.layout[1:]
        total = 0.0
        for i, mono in enumerate(monomials):
            c = _wrap(inner, self.data[i])
            if isinstance(c, float) and c == 0.0:
                continue
            total = total + c * mono
        return total


@functools.lru_cache(maxsize=None)
def _derivative_table(nvars, degree, var):
    imap = _index_map(nvars, degree)
    src, scale = [], []
    for a in multi_indices(nvars, degree - 1):
        b = list(a)
        b[var] += 1
        src.append(imap[tuple(b)])
        scale.append(float(b[var]))
    return np.array(src, dtype=np.intp), np.array(scale)


def series_mul(a, b):
    """Cauchy product truncated at the common order."""
    if not (isinstance(a, TruncSeries) and isinstance(b, TruncSeries)):
        raise UsageError("series_mul needs two TruncSeries")
    if a.layout != b.layout:
        raise UsageError(f"order/ring mismatch: {a.layout} vs {b.layout}")
    return a * b


def series_cauchy_average(a):
    return a.cauchy_average()


def jet_mul(a, b):
    """Polynomial product truncated at the common total degree."""
    if not (isinstance(a, Jet) and isinstance(b, Jet)):
        raise UsageError("jet_mul needs two Jets")
    if a.layout != b.layout:
        raise UsageError(f"shape mismatch: {a.layout} vs {b.layout}")
    return a * b


def jet_gradient(a):
    return a.gradient()


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if self.max_iter < 1:
            raise UsageError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise UsageError("damping must lie in (0, 1]")


@dataclass
class NewtonInfo:
    iterations: int
    residual: float


def _lu_solve(J, r):
    scale = np.max(np.abs(J)) if J.size else 0.0
    if scale == 0.0:
        raise SingularJacobianError("Jacobian is identically zero")
    lu, piv = scipy.linalg.lu_factor(J, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < 1e-14 * scale:
        raise SingularJacobianError(
            f"LU pivot {np.min(pivots):.3e} below 1e-14 * {scale:.3e}")
    return scipy.linalg.lu_solve((lu, piv), r)


def newton_solve(F, x0, opts=None, full_output=False):
    """Solve ``F(x) = 0`` with Jacobians from degree-1 jet evaluation.

    ``F`` receives a list of degree-1 jets seeded at the current iterate and
    must return a list of jets (or floats) of the same length.

    Returns the solution array, or ``(x, NewtonInfo)`` with ``full_output``.
    Raises :class:`ConvergenceError` after ``opts.max_iter`` updates and
    :class:`SingularJacobianError` on a vanishing LU pivot.
    """
    opts = opts or NewtonOptions()
    x = np.array(x0, dtype=float).reshape(-1)
    n = x.size
    iterations = 0
    while True:
        out = list(F(Jet.seed(x, 1)))
        if len(out) != n:
            raise UsageError(f"F returned {len(out)} components for {n} unknowns")
        r = values_of(out)
        res = float(np.max(np.abs(r))) if n else 0.0
        if not np.isfinite(res):
            raise ConvergenceError("non-finite residual", res, iterations)
        if res <= opts.tol:
            break
        if iterations >= opts.max_iter:
            raise ConvergenceError(
                f"no convergence after {iterations} iterations (residual {res:.3e})",
                res, iterations)
        J = np.array([o.gradient() if isinstance(o, Jet) else np.zeros(n) for o in out])
        x = x - opts.damping * _lu_solve(J, r)
        iterations += 1
    if full_output:
        return x, NewtonInfo(iterations, res)
    return x


def implicit_jets(residual, u, params):
    """Lift a converged implicit solution to jets in the parameters' variables.

    ``residual(u, params)`` vanishes at the real solution ``u``.  ``params`` is
    a list mixing floats and degree-1 jets in a common set of ``w``
    variables.  By the implicit-function theorem
    ``du/dw = -(dR/du)^{-1} dR/dw``; the result is a list of degree-1 jets in
    ``w`` whose values are ``u``.  With no jets among ``params`` the real
    solution is returned unchanged.
    """
    u = np.asarray(u, dtype=float)
    lay = common_layout(params)
    if not lay:
        return list(u)
    if len(lay) != 1 or not isinstance(lay[0], JetLayout) or lay[0].degree != 1:
        raise UsageError("implicit differentiation supports real degree-1 jets only")
    pvals = list(values_of(params))
    Ju = jacobian_of(residual(Jet.seed(u, 1), pvals))
    Rw = residual(list(u), params)
    Jw = np.array([r.gradient() if isinstance(r, Jet) else np.zeros(lay[0].nvars)
                   for r in Rw])
    du = -_lu_solve(Ju, Jw)
    return [Jet.linear(ui, row) for ui, row in zip(u, du)]

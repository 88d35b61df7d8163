"""Poisson systems with polynomial bracket matrices.

The stored object is the bracket matrix ``Pi[i][j] = {x_i, x_j}``; only the
entries above the diagonal are kept and the lower half is mirrored.  Hamilton's
equation reads ``xdot_j = sum_i dH/dx_i * Pi[i][j]``, i.e. ``Pi(x).T @ grad H``.
With ``Pi = [[0, 1], [-1, 0]]`` on ``(q, p)`` this gives ``(qdot, pdot) =
(-dH/dp, dH/dq)``.

Tensors and Hamiltonians are :class:`Polynomial` objects and evaluate over
any ring element from :mod:`karasev_poisson.ring`.  Casimirs additionally
allow ``log(x_i)`` atoms and evaluate on reals and degree-1 jets.
"""

import json
import math
import numbers

import jsonschema
import numpy as np

from .exceptions import SchemaError, UsageError, ValidationError
from .ring import Jet, jacobian_of, layout_of

__all__ = [
    "Polynomial",
    "Casimir",
    "PoissonSystem",
    "builtin",
    "BUILTINS",
    "canonical",
    "zero",
    "so3",
    "lotka_volterra",
    "magnetic",
    "parse_system_json",
    "system_to_json",
    "pi_matrix",
    "hamiltonian_vf",
    "jacobi_residual",
    "casimir_values",
]


class Polynomial:
    """Real polynomial in ``nvars`` variables stored as canonical terms.

    ``terms`` is an iterable of ``(coefficient, exponents)``; duplicates are
    merged and zero coefficients dropped.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=()):
        self.nvars = int(nvars)
        acc = {}
        for c, e in terms:
            e = tuple(int(k) for k in e)
            if len(e) != self.nvars:
                raise UsageError(f"exponent vector {e} has length != {self.nvars}")
            if any(k < 0 for k in e):
                raise UsageError(f"negative exponent in {e}")
            acc[e] = acc.get(e, 0.0) + float(c)
        self.terms = tuple(sorted(((c, e) for e, c in acc.items() if c != 0.0),
                                  key=lambda t: t[1]))

    @classmethod
    def variable(cls, nvars, i, coeff=1.0):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, [(coeff, e)])

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, [(c, (0,) * nvars)])

    def __call__(self, x):
        if len(x) != self.nvars:
            raise UsageError(f"expected {self.nvars} arguments, got {len(x)}")
        powers = {}
        total = 0.0
        for c, e in self.terms:
            mono = None
            for i, k in enumerate(e):
                if k == 0:
                    continue
                key = (i, k)
                if key not in powers:
                    powers[key] = x[i] ** k if k > 1 else x[i]
                mono = powers[key] if mono is None else mono * powers[key]
            total = total + (c if mono is None else mono * c)
        return total

    def derivative(self, i):
        terms = []
        for c, e in self.terms:
            if e[i]:
                d = list(e)
                d[i] -= 1
                terms.append((c * e[i], d))
        return Polynomial(self.nvars, terms)

    def gradient(self):
        return [self.derivative(i) for i in range(self.nvars)]

    def degree(self):
        return max((sum(e) for _, e in self.terms), default=0)

    def __add__(self, other):
        if not isinstance(other, Polynomial) or other.nvars != self.nvars:
            return NotImplemented
        return Polynomial(self.nvars, self.terms + other.terms)

    def __neg__(self):
        return Polynomial(self.nvars, [(-c, e) for c, e in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return Polynomial(self.nvars, [(c * other, e) for c, e in self.terms])
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.nvars == other.nvars
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.nvars, self.terms))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Polynomial({self.nvars}, {list(self.terms)!r})"


def _log(v):
    if isinstance(v, Jet):
        if v.degree > 1 or len(v.layout) > 1:
            raise UsageError("log is only available on real degree-1 jets")
        x0 = v.constant_term()
        if not x0 > 0:
            raise UsageError(f"log of a jet at non-positive value {x0}")
        return Jet.linear(math.log(x0), v.gradient() / x0)
    if layout_of(v):
        raise UsageError("log is only available on reals and degree-1 jets")
    v = float(v)
    if v > 0:
        return math.log(v)
    # outside the domain; -inf at an underflowed zero
    return -math.inf if v == 0 else math.nan


class Casimir:
    """``poly(x) + sum_k c_k * log(x[var_k])``; ``var_k`` is 0-based."""

    __slots__ = ("poly", "logs")

    def __init__(self, poly, logs=()):
        self.poly = poly
        self.logs = tuple((float(c), int(v)) for c, v in logs)
        for _, v in self.logs:
            if not 0 <= v < poly.nvars:
                raise UsageError(f"log variable {v} out of range")

    @property
    def nvars(self):
        return self.poly.nvars

    def __call__(self, x):
        total = self.poly(x)
        for c, v in self.logs:
            total = total + c * _log(x[v])
        return total

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.array([float(dp(x)) for dp in self.poly.gradient()])
        for c, v in self.logs:
            g[v] += c / x[v]
        return g

    def __eq__(self, other):
        return (isinstance(other, Casimir) and self.poly == other.poly
                and self.logs == other.logs)

    def __repr__(self):
        return f"Casimir({self.poly!r}, logs={list(self.logs)!r})"


class PoissonSystem:
    """Bracket matrix, Hamiltonian and Casimirs on a single chart of R^dim.

    ``pi`` maps 0-based pairs ``(i, j)`` with ``i < j`` to polynomials.
    Construction does not run the Jacobi/Casimir checks; call
    :meth:`validate` (the JSON parser does).
    """

    def __init__(self, dim, pi, hamiltonian, casimirs=(), name="custom"):
        self.dim = int(dim)
        entries = {}
        for (i, j), poly in dict(pi).items():
            if not (0 <= i < j < self.dim):
                raise UsageError(f"bracket entry ({i}, {j}) must satisfy 0 <= i < j < dim")
            if poly.nvars != self.dim:
                raise UsageError("bracket polynomial has wrong number of variables")
            if poly:
                entries[(i, j)] = poly
        self.pi = dict(sorted(entries.items()))
        if hamiltonian.nvars != self.dim:
            raise UsageError("Hamiltonian has wrong number of variables")
        self.hamiltonian = hamiltonian
        self.casimirs = tuple(casimirs)
        for c in self.casimirs:
            if c.nvars != self.dim:
                raise UsageError("Casimir has wrong number of variables")
        self.name = name
        self._dH = hamiltonian.gradient()

    def __repr__(self):
        return f"PoissonSystem(name={self.name!r}, dim={self.dim})"

    def __eq__(self, other):
        return (isinstance(other, PoissonSystem) and self.dim == other.dim
                and self.pi == other.pi and self.hamiltonian == other.hamiltonian
                and self.casimirs == other.casimirs)

    def _check(self, x):
        if len(x) != self.dim:
            raise UsageError(f"point has {len(x)} coordinates, system dimension is {self.dim}")

    def pi_entries(self, x):
        """``{(i, j): Pi_ij(x)}`` for the stored upper-triangular entries."""
        self._check(x)
        return {ij: poly(x) for ij, poly in self.pi.items()}

    def pi_matrix(self, x):
        """Full skew matrix as a nested list (ring elements or floats)."""
        d = self.dim
        out = [[0.0] * d for _ in range(d)]
        for (i, j), v in self.pi_entries(x).items():
            out[i][j] = v
            out[j][i] = -v
        return out

    def pi_array(self, x):
        """Real bracket matrix as an ndarray."""
        return np.array(self.pi_matrix(np.asarray(x, dtype=float)), dtype=float)

    def hamiltonian_value(self, x):
        return self.hamiltonian(x)

    def grad_hamiltonian(self, x):
        return [dh(x) for dh in self._dH]

    def hamiltonian_vf(self, x):
        """``X_H^j = sum_i dH/dx_i * Pi_ij``."""
        self._check(x)
        dH = self.grad_hamiltonian(x)
        out = [0.0] * self.dim
        for (i, j), v in self.pi_entries(x).items():
            out[j] = out[j] + dH[i] * v
            out[i] = out[i] - dH[j] * v
        return out

    def jacobi_residual(self, x):
        """Max over (i, j, k) of the cyclic sum; derivatives from degree-1 jets."""
        x = np.asarray(x, dtype=float)
        self._check(x)
        d = self.dim
        P = np.zeros((d, d))
        dP = np.zeros((d, d, d))  # dP[i, j, l] = d_l Pi_ij
        for (i, j), v in self.pi_entries(Jet.seed(x, 1)).items():
            if isinstance(v, Jet):
                P[i, j], g = v.constant_term(), v.gradient()
            else:
                P[i, j], g = float(v), np.zeros(d)
            P[j, i] = -P[i, j]
            dP[i, j], dP[j, i] = g, -g
        # S[i,j,k] = sum_l Pi_li d_l Pi_jk
        S = np.einsum("li,jkl->ijk", P, dP)
        cyc = S + np.transpose(S, (1, 2, 0)) + np.transpose(S, (2, 0, 1))
        return float(np.max(np.abs(cyc))) if d else 0.0

    def casimir_values(self, x):
        self._check(x)
        return np.array([float(c(x)) for c in self.casimirs])

    def casimir_compatibility(self, x):
        """``max_k ||Pi(x) grad C_k(x)||_inf`` (0 when there are no Casimirs)."""
        x = np.asarray(x, dtype=float)
        P = self.pi_array(x)
        worst = 0.0
        for c in self.casimirs:
            worst = max(worst, float(np.max(np.abs(P @ c.gradient(x)))))
        return worst

    def validate(self, tol=1e-8, samples=100, seed=0, low=0.1, high=2.0):
        """Check Jacobi and Casimir compatibility at seeded random points.

        Points are drawn from ``[low, high]**dim`` (positive, so log-Casimirs
        are defined).  Raises :class:`ValidationError` on the first failure.
        """
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            x = rng.uniform(low, high, self.dim)
            jr = self.jacobi_residual(x)
            if jr > tol:
                raise ValidationError(
                    f"Jacobi identity fails at {x.tolist()}: residual {jr:.3e}",
                    "jacobi", jr, point=x)
            P = self.pi_array(x)
            for k, c in enumerate(self.casimirs):
                r = float(np.max(np.abs(P @ c.gradient(x))))
                if r > tol:
                    raise ValidationError(
                        f"Casimir {k + 1} not in the kernel at {x.tolist()}: residual {r:.3e}",
                        "casimir", r, point=x, index=k)
        return self


def pi_matrix(sys, x):
    return sys.pi_matrix(x)


def hamiltonian_vf(sys, x):
    return sys.hamiltonian_vf(x)


def jacobi_residual(sys, x):
    return sys.jacobi_residual(x)


def casimir_values(sys, x):
    return sys.casimir_values(x)


def _quadratic_sum(dim, weights):
    terms = []
    for i, w in enumerate(weights):
        e = [0] * dim
        e[i] = 2
        terms.append((w, e))
    return Polynomial(dim, terms)


def canonical(dim=2, hamiltonian=None):
    """Canonical structure on ``(q_1..q_k, p_1..p_k)`` with ``{q_i, p_i} = 1``."""
    if dim % 2 or dim < 2:
        raise UsageError("canonical systems need an even dimension >= 2")
    k = dim // 2
    pi = {(i, k + i): Polynomial.constant(dim, 1.0) for i in range(k)}
    H = hamiltonian or _quadratic_sum(dim, [0.5] * dim)
    return PoissonSystem(dim, pi, H, (), name=f"canonical{dim}")


def zero(dim=3, hamiltonian=None):
    H = hamiltonian or _quadratic_sum(dim, [0.5] * dim)
    return PoissonSystem(dim, {}, H, (Casimir(Polynomial.variable(dim, 0)),), name=f"zero{dim}")


def so3():
    """Rigid body on so*(3): Pi_12 = -x3, Pi_13 = x2, Pi_23 = -x1."""
    pi = {
        (0, 1): Polynomial.variable(3, 2, -1.0),
        (0, 2): Polynomial.variable(3, 1, 1.0),
        (1, 2): Polynomial.variable(3, 0, -1.0),
    }
    H = _quadratic_sum(3, [1 / 2, 1 / 1.5, 1 / 2.5])
    C = Casimir(_quadratic_sum(3, [1.0, 1.0, 1.0]))
    return PoissonSystem(3, pi, H, (C,), name="so3")


def lotka_volterra():
    """Quadratic structure Pi_ij = 2 x_i x_j (i < j) with H = x1 + x2 + x3."""
    pi = {}
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        e = [0, 0, 0]
        e[i] = e[j] = 1
        pi[(i, j)] = Polynomial(3, [(2.0, e)])
    H = Polynomial(3, [(1.0, (1, 0, 0)), (1.0, (0, 1, 0)), (1.0, (0, 0, 1))])
    C = Casimir(Polynomial(3), logs=[(1.0, 0), (-1.0, 1), (1.0, 2)])
    return PoissonSystem(3, pi, H, (C,), name="lotka_volterra")


def magnetic():
    """Canonical structure on (x, y, z, px, py, pz) twisted by a magnetic term."""
    pi = {
        (0, 3): Polynomial.constant(6, -1.0),
        (1, 4): Polynomial.constant(6, -1.0),
        (2, 5): Polynomial.constant(6, -1.0),
        (3, 4): Polynomial(6, [(1.0, (2, 0, 0, 0, 0, 0))]),
        (3, 5): Polynomial.variable(6, 2),
        (4, 5): Polynomial.variable(6, 1),
    }
    H = _quadratic_sum(6, [0, 0, 0, 0.5, 0.5, 0.5])
    return PoissonSystem(6, pi, H, (), name="magnetic")


BUILTINS = {
    "so3": so3,
    "lotka_volterra": lotka_volterra,
    "magnetic": magnetic,
}


def builtin(name):
    """Look up a catalog entry; ``canonicalN`` and ``zeroN`` take a dimension suffix."""
    if name in BUILTINS:
        return BUILTINS[name]()
    for prefix, factory, default in (("canonical", canonical, 2), ("zero", zero, 3)):
        if name.startswith(prefix):
            rest = name[len(prefix):].lstrip("(_").rstrip(")")
            if not rest:
                return factory(default)
            if rest.isdigit():
                return factory(int(rest))
    raise UsageError(f"unknown builtin system {name!r}; choose from "
                     f"{sorted(BUILTINS) + ['canonicalN', 'zeroN']}")


_TERMS = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {
            "c": {"type": "number"},
            "e": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
        "required": ["c", "e"],
        "additionalProperties": False,
    },
}

SYSTEM_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "pi": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "i": {"type": "integer", "minimum": 1},
                    "j": {"type": "integer", "minimum": 1},
                    "terms": _TERMS,
                },
                "required": ["i", "j", "terms"],
                "additionalProperties": False,
            },
        },
        "hamiltonian": {
            "type": "object",
            "properties": {"terms": _TERMS},
            "required": ["terms"],
            "additionalProperties": False,
        },
        "casimirs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "terms": _TERMS,
                    "logs": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "c": {"type": "number"},
                                "var": {"type": "integer", "minimum": 1},
                            },
                            "required": ["c", "var"],
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
    },
    "required": ["name", "dim", "pi", "hamiltonian"],
    "additionalProperties": False,
}


def _poly(dim, terms, where):
    for t in terms:
        if len(t["e"]) != dim:
            raise SchemaError(f"{where}: exponent vector {t['e']} must have length {dim}")
    return Polynomial(dim, [(t["c"], t["e"]) for t in terms])


def parse_system_json(text, tol=1e-8, samples=100, seed=0, validate=True):
    """Build and validate a :class:`PoissonSystem` from its JSON description.

    Indices in the document are 1-based and only ``i < j`` entries are
    allowed.  Raises :class:`SchemaError` for malformed documents and
    :class:`ValidationError` when the Jacobi identity or a Casimir fails
    (skipped with ``validate=False``).
    """
    try:
        doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, SYSTEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"schema violation at '{path}': {exc.message}") from exc
    dim = doc["dim"]
    pi = {}
    for k, entry in enumerate(doc["pi"]):
        i, j = entry["i"], entry["j"]
        if not (1 <= i < j <= dim):
            raise SchemaError(f"pi[{k}]: need 1 <= i < j <= dim, got i={i}, j={j}")
        if (i - 1, j - 1) in pi:
            raise SchemaError(f"pi[{k}]: duplicate entry ({i}, {j})")
        pi[(i - 1, j - 1)] = _poly(dim, entry["terms"], f"pi[{k}]")
    H = _poly(dim, doc["hamiltonian"]["terms"], "hamiltonian")
    casimirs = []
    for k, c in enumerate(doc.get("casimirs", [])):
        logs = []
        for atom in c.get("logs", []):
            if atom["var"] > dim:
                raise SchemaError(f"casimirs[{k}]: log variable {atom['var']} > dim")
            logs.append((atom["c"], atom["var"] - 1))
        casimirs.append(Casimir(_poly(dim, c.get("terms", []), f"casimirs[{k}]"), logs))
    system = PoissonSystem(dim, pi, H, casimirs, name=doc["name"])
    if validate:
        system.validate(tol=tol, samples=samples, seed=seed)
    return system


def _terms_json(poly):
    return [{"c": c, "e": list(e)} for c, e in poly.terms]


def system_to_json(system):
    doc = {
        "name": system.name,
        "dim": system.dim,
        "pi": [{"i": i + 1, "j": j + 1, "terms": _terms_json(p)}
               for (i, j), p in system.pi.items()],
        "hamiltonian": {"terms": _terms_json(system.hamiltonian)},
        "casimirs": [{"terms": _terms_json(c.poly),
                      "logs": [{"c": a, "var": v + 1} for a, v in c.logs]}
                     for c in system.casimirs],
    }
    return json.dumps(doc, indent=2)

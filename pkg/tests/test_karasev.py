import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from karasev_poisson.karasev import (Realization, alpha_oracle, phi_oracle, realization_error,
                                     realization_error_sweep, spray)
from karasev_poisson.model import lotka_volterra, magnetic, so3, zero
from karasev_poisson.ring import Jet, jacobian_of

import oracles

small = arrays(float, 3, elements=st.floats(-1, 1))
positive = arrays(float, 3, elements=st.floats(0.2, 2))


def test_phi_series_trivial_cases():
    x = [1.0, 2.0, 3.0]
    r = Realization(so3(), 4)
    for c in r.phi_series(x, [0.0, 0.0, 0.0]):
        assert np.allclose(c.coeffs[1:], 0.0)
    p = [0.3, -0.2, 0.1]
    phi = r.phi_series(x, p)
    V = spray(so3(), x, p)
    assert np.allclose([c.coeffs[1] for c in phi], 0.5 * np.array(V))
    for c in Realization(zero(3), 4).phi_series(x, p):
        assert np.allclose(c.coeffs, [c.coeffs[0], 0, 0, 0, 0])


def test_alpha_with_zero_momentum_is_identity():
    for sys in (so3(), lotka_volterra(), magnetic()):
        x = np.linspace(0.5, 1.5, sys.dim)
        assert np.array_equal(Realization(sys, 5).alpha(x, np.zeros(sys.dim), 0.3), x)


@pytest.mark.parametrize("make, pi, dpi, ddpi", [
    (so3, oracles.so3_pi, oracles.so3_dpi, oracles.so3_ddpi),
    (lotka_volterra, oracles.lv_pi, oracles.lv_dpi, oracles.lv_ddpi),
])
def test_first_terms_at_reference_point(make, pi, dpi, ddpi):
    x, p = np.array([1.0, 2.0, 3.0]), np.array([0.1, 0.2, 0.3])
    coeffs = Realization(make(), 3).coefficients(list(x), list(p))
    for got, want in zip(coeffs[1:], oracles.first_terms(pi, dpi, ddpi, x, p)):
        assert np.allclose(got, want, rtol=0, atol=1e-14)


@given(small, small)
@settings(max_examples=30, deadline=None)
def test_so3_coefficients_are_bernoulli(x, p):
    coeffs = Realization(so3(), 7).coefficients(list(x), list(p))
    want = oracles.linear_alpha_coefficients(oracles.so3_structure(), x, p, 7)
    for k, (a, b) in enumerate(zip(coeffs, want)):
        assert np.allclose(a, b, rtol=0, atol=1e-13), k
    # odd coefficients past the first vanish for linear tensors
    for k in (3, 5, 7):
        assert np.max(np.abs(coeffs[k])) <= 1e-13


@given(positive, small, st.floats(0.1, 3.0))
@settings(max_examples=30, deadline=None)
def test_rescaling_identity(x, p, lam):
    r = Realization(lotka_volterra(), 4)
    a = np.array(r.alpha(list(x), list(p), lam * 0.1))
    b = np.array(r.alpha(list(x), list(lam * p), 0.1))
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13 * np.max(np.abs(a)))


@given(positive, small)
@settings(max_examples=30, deadline=None)
def test_beta_is_alpha_with_reversed_momentum(x, p):
    r = Realization(so3(), 4)
    assert np.array_equal(r.beta(list(x), list(p), 0.2), r.alpha(list(x), list(-p), 0.2))


def test_realization_error_trivial_cases():
    z = [2.0, 3.0, 3.0, 1.0, 2.0, 3.0]
    assert realization_error(Realization(so3(), 4), z, 0.0) == 0.0
    assert np.all(realization_error_sweep(Realization(zero(3), 4), z, [0.01, 0.1, 1.0]) == 0.0)


def test_realization_error_pins():
    # frozen values from this implementation, cross-checked by the slope tests
    z = [2.0, 3.0, 3.0, 1.0, 2.0, 3.0]
    assert realization_error(Realization(so3(), 4), z, 0.1) == pytest.approx(1.9799558513059e-07, rel=1e-8)
    zm = [.5, .4, .3, .2, .3, .4, .1, .2, .3, .2, .1, .3]
    assert realization_error(Realization(magnetic(), 2), zm, 0.1) == pytest.approx(6.66666666666e-06, rel=1e-8)
    a = Realization(lotka_volterra(), 3).alpha([1.0, 2.0, 3.0], [0.1, 0.2, 0.3], 0.1)
    assert np.allclose(a, [0.8752563333333333, 1.8407093333333333, 3.147775], rtol=1e-13)


def test_realization_is_exact_for_canonical_structure():
    from karasev_poisson.model import canonical
    z = [0.3, -0.5, 1.2, 0.7]
    assert realization_error(Realization(canonical(2), 2), z, 0.4) <= 1e-15


def test_oracle_zero_momentum_and_eps():
    r = Realization(so3(), 2)
    x = [1.0, 2.0, 3.0]
    assert np.allclose(alpha_oracle(r, x, [0.0, 0.0, 0.0], 0.3), x, atol=1e-14)
    assert alpha_oracle(r, x, [0.3, -0.2, 0.1], 0.0) == x


def test_oracle_matches_linear_closed_form():
    x, p, eps = np.array([1.0, 2.0, 3.0]), np.array([0.3, -0.2, 0.1]), 0.5
    got = alpha_oracle(Realization(so3(), 2), list(x), list(p), eps)
    want = oracles.linear_alpha_exact(oracles.so3_structure(), x, p, eps)
    assert np.allclose(got, want, rtol=0, atol=1e-11)


def test_oracle_phi_inverts_series_phi_for_small_eps():
    x, p, eps = [1.0, 2.0, 3.0], [0.1, 0.2, 0.3], 0.05
    r = Realization(lotka_volterra(), 8)
    series = [c.evaluate(eps) for c in r.phi_series(x, p)]
    assert np.allclose(phi_oracle(lotka_volterra(), x, p, eps), series, rtol=0, atol=1e-12)


def test_oracle_jets_match_finite_differences():
    r = Realization(so3(), 2)
    x, p, eps = np.array([1.0, 2.0, 3.0]), np.array([0.3, -0.2, 0.1]), 0.3
    zj = Jet.seed(np.concatenate([x, p]), 1)
    J = jacobian_of(alpha_oracle(r, zj[:3], zj[3:], eps))
    d = 1e-5
    for k in range(6):
        e = np.zeros(6)
        e[k] = d
        zp, zm = np.concatenate([x, p]) + e, np.concatenate([x, p]) - e
        fd = (np.array(alpha_oracle(r, list(zp[:3]), list(zp[3:]), eps))
              - np.array(alpha_oracle(r, list(zm[:3]), list(zm[3:]), eps))) / (2 * d)
        assert np.allclose(J[:, k], fd, atol=1e-7)


def test_untruncated_so3_is_a_realization():
    # alpha from the oracle satisfies the Poisson-map identity to integration accuracy
    from karasev_poisson.karasev import _bracket_mismatch
    x, p, eps = [2.0, 3.0, 3.0], [1.0, 2.0, 3.0], 0.05
    zj = Jet.seed(x + p, 1)
    a = alpha_oracle(Realization(so3(), 2), zj[:3], zj[3:], eps)
    vals = [v.value for v in a]
    assert _bracket_mismatch(so3(), vals, jacobian_of(a), eps) <= 1e-9

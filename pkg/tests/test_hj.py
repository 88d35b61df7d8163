import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from karasev_poisson.diagnostics import (finite_difference_jacobian, reference_flow,
                                         self_adjoint_residual, step_jacobian)
from karasev_poisson.exceptions import StepFailure, UsageError
from karasev_poisson.hj import (GeneratingFunction, StepConfig, khj_step, khj_trajectory,
                                make_generating_function)
from karasev_poisson.karasev import Realization
from karasev_poisson.model import lotka_volterra, so3, zero

positive = arrays(float, 3, elements=st.floats(0.5, 2))
X0 = np.array([1.0, 3.0, 3.0])


def test_first_coefficient_is_hamiltonian():
    g = make_generating_function(so3(), 4, 0.1, 3)
    x = [0.4, -1.0, 2.0]
    S = g.coefficients(x, 1)
    assert S[0].value == pytest.approx(so3().hamiltonian(x))
    assert np.allclose(S[0].gradient(), so3().grad_hamiltonian(x))


def test_zero_system_generating_function_is_h_times_H():
    g = make_generating_function(zero(3), 4, 0.5, 4, odd_only=False)
    for s in g.coefficients([1.0, 2.0, 3.0], 2)[1:]:
        assert np.all(s.array == 0.0)
    assert np.array_equal(khj_step(g, StepConfig(0.7), X0), X0)


@pytest.mark.parametrize("make", [so3, lotka_volterra])
@given(x=positive)
@settings(max_examples=10, deadline=None)
def test_even_coefficients_vanish(make, x):
    g = GeneratingFunction(Realization(make(), 4), 0.1, 4, odd_only=False)
    S = g.coefficients(x, 1)
    assert abs(S[1].value) <= 1e-12 and np.max(np.abs(S[1].gradient())) <= 1e-12
    assert abs(S[3].value) <= 1e-12


def test_zero_step_is_identity():
    g = make_generating_function(so3(), 6, 0.1, 2)
    assert np.array_equal(khj_step(g, StepConfig(0.0), X0), X0)


def test_so3_step_against_reference_flow():
    g = make_generating_function(so3(), 6, 0.1, 2)
    y = khj_step(g, StepConfig(2.0), X0)
    ref = reference_flow(so3(), X0, 0.1, 2.0)
    # frozen from this implementation: O((eps h)^3) for m = 2
    assert np.max(np.abs(y - ref)) == pytest.approx(0.004271688174348309, rel=1e-6)
    assert abs(so3().casimir_values(y)[0] - 19.0) <= 1e-6


@pytest.mark.parametrize("make", [so3, lotka_volterra])
def test_step_jacobian_matches_finite_differences(make):
    g = make_generating_function(make(), 4, 0.1, 3)
    cfg = StepConfig(0.5)

    def step(x):
        return khj_step(g, cfg, x)

    J = step_jacobian(step, X0)
    fd = finite_difference_jacobian(step, X0)
    assert np.allclose(J, fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(J)))


@pytest.mark.parametrize("make", [so3, lotka_volterra])
def test_self_adjoint(make):
    g = make_generating_function(make(), 4, 0.1, 3)
    res = self_adjoint_residual(lambda x, h: khj_step(g, StepConfig(h), x), X0, 0.5)
    assert res <= 1e-11


def test_step_failure_carries_partial_report():
    g = make_generating_function(lotka_volterra(), 4, 1.0, 3)
    with pytest.raises(StepFailure) as info:
        khj_trajectory(g, StepConfig(50.0), X0, 3)
    assert info.value.step == 1
    assert len(info.value.report) == 1


def test_trajectory_records():
    g = make_generating_function(so3(), 4, 0.1, 2)
    rep = khj_trajectory(g, StepConfig(0.5), X0, 0)
    assert len(rep) == 1 and np.array_equal(rep.states[0], X0)
    rep = khj_trajectory(g, StepConfig(0.5), X0, 5)
    assert list(rep.steps) == [0, 1, 2, 3, 4, 5]
    assert rep.times[-1] == pytest.approx(5 * 0.1 * 0.5)
    assert np.max(np.abs(rep.casimirs - 19.0)) <= 1e-12
    rep = khj_trajectory(make_generating_function(zero(3), 4, 0.1, 2), StepConfig(0.5), X0, 4)
    assert np.all(rep.states == X0)
    with pytest.raises(UsageError):
        khj_trajectory(g, StepConfig(0.5), X0, -1)
    with pytest.raises(UsageError):
        make_generating_function(so3(), 4, 0.1, 0)

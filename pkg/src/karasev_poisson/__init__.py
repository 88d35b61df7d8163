"""Poisson integrators built from truncated Karasev symplectic realizations."""

from .collective import (CollectiveStepper, SymplecticScheme, collective_hamiltonian,
                         kcollective_step, kcollective_trajectory, symplectic_step)
from .diagnostics import (ExperimentReport, SlopeFit, drift_report, reference_flow,
                          self_adjoint_residual, slope_fit, step_jacobian, tensor_error)
from .exceptions import (ConvergenceError, IntegratorError, KarasevError, SchemaError,
                         SingularJacobianError, StepFailure, UsageError, ValidationError)
from .hj import GeneratingFunction, StepConfig, hj_coefficients, khj_step, khj_trajectory
from .karasev import (Realization, alpha_eval, alpha_oracle, beta_eval, phi_series,
                      realization_error)
from .model import (Casimir, PoissonSystem, Polynomial, builtin, canonical, lotka_volterra,
                    magnetic, parse_system_json, so3, zero)
from .ring import Jet, NewtonOptions, TruncSeries, newton_solve

__version__ = "0.1.0"

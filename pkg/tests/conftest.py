import numpy as np
import pytest

from contact_hj.expressions import parse
from contact_hj.grid import Domain, GridField, UniformGrid
from contact_hj.hamiltonian import (HamiltonianModel, LagrangianEvaluator,
                                    LinearCoupling, QuadraticKinetic)
from contact_hj.solver import (ControlSet, SolveParams, mane_potential,
                               solve_ergodic, solve_state_constraint)


def make_ql_model() -> HamiltonianModel:
    """Quadratic kinetic, Gaussian well potential, unit linear coupling."""
    return HamiltonianModel(
        dim=1,
        kinetic=QuadraticKinetic(),
        potential=parse("1 - exp(-x^2)"),
        coupling=LinearCoupling(parse("1"), 1.0, 1.0),
    )


@pytest.fixture(scope="session")
def ql_model():
    return make_ql_model()


@pytest.fixture(scope="session")
def ql_evaluator(ql_model):
    return LagrangianEvaluator(ql_model)


@pytest.fixture(scope="session")
def controls1d():
    return ControlSet.build(1)


@pytest.fixture(scope="session")
def grid201():
    return UniformGrid(Domain.full_box(((-10.0, 10.0),)), (201,))


@pytest.fixture(scope="session")
def grid401():
    return UniformGrid(Domain.full_box(((-10.0, 10.0),)), (401,))


@pytest.fixture(scope="session")
def params_fast():
    return SolveParams(tol=1e-7)


@pytest.fixture(scope="session")
def params_tight():
    return SolveParams(tol=1e-8)


@pytest.fixture(scope="session")
def theta_01(ql_model, grid201, params_fast, controls1d, ql_evaluator):
    """State-constraint field at lam = 0.1 on the coarse grid."""
    out = solve_state_constraint(ql_model, grid201, 0.1, 0.0, params_fast,
                                 controls=controls1d, evaluator=ql_evaluator)
    assert out.converged
    return out


@pytest.fixture(scope="session")
def theta_005(ql_model, grid201, params_fast, controls1d, ql_evaluator,
              theta_01):
    out = solve_state_constraint(ql_model, grid201, 0.05, 0.0, params_fast,
                                 controls=controls1d, evaluator=ql_evaluator,
                                 v0=theta_01.field.values)
    assert out.converged
    return out


@pytest.fixture(scope="session")
def ergodic201(ql_model, grid201, params_fast, controls1d, ql_evaluator):
    out = solve_ergodic(ql_model, grid201, 0.0, params_fast,
                        controls=controls1d, evaluator=ql_evaluator)
    assert out.converged
    return out


@pytest.fixture(scope="session")
def mane401(ql_model, grid401, params_tight, controls1d, ql_evaluator):
    return mane_potential(ql_model, grid401, 0.0, 0.0, params_tight,
                          controls=controls1d, evaluator=ql_evaluator)


_OR_X = np.linspace(0.0, 4.0, 40001)
_OR_F = 1.0 - np.exp(-_OR_X ** 2)
_OR_CUM = np.concatenate([[0.0], np.cumsum(
    0.5 * (np.sqrt(2 * _OR_F[1:]) + np.sqrt(2 * _OR_F[:-1]))
    * np.diff(_OR_X))])


def quadrature_mane(x):
    """Trapezoid oracle for the pinned semi-distance of the Gaussian well.

    S(x, 0) = |integral_0^x sqrt(2 f(s)) ds| with f = 1 - exp(-s^2).
    """
    return np.interp(np.abs(np.asarray(x, dtype=float)), _OR_X, _OR_CUM)


def window_residual(field, curve, indices, evaluator, lam, c, j_hi, j_lo):
    """Residual of the weighted window identity along a traced curve.

    Between segment indices j_hi < j_lo (time decreases with the index), the
    weighted field drop e^{lam*beta}v at the two ends must match the windowed
    exponential action taken at reference level zero.
    """
    pts = curve.points
    w = indices.weights(lam)
    v_hi = float(np.asarray(field.interpolate(pts[j_hi])).reshape(-1)[0])
    v_lo = float(np.asarray(field.interpolate(pts[j_lo])).reshape(-1)[0])
    xs = pts[j_hi:j_lo]
    vs = curve.velocities[j_hi:j_lo]
    lvals = np.asarray(evaluator.legendre(xs, vs, 0.0), dtype=float)
    action = float(np.sum(w[j_hi:j_lo] * (lvals + c)) * curve.dt)
    return abs(w[j_hi] * v_hi - w[j_lo] * v_lo - action)

"""Model evaluation, Legendre transforms, discount indices, assumption checks.

Frozen values below were produced by brute-force maximization over dense
momentum grids (2e6 points on [-50, 50]) independent of the evaluator.
"""

import math

import numpy as np
import pytest

from contact_hj.expressions import parse
from contact_hj.hamiltonian import (
    ArctanCoupling,
    ExtentError,
    HamiltonianModel,
    LagrangianEvaluator,
    LinearCoupling,
    ModelError,
    NoCoupling,
    PowerKinetic,
    QuadraticKinetic,
    TabulatedKinetic,
    check_assumptions,
    lower_bound_m0,
)


@pytest.fixture
def quad_lin():
    return HamiltonianModel(
        dim=1,
        kinetic=QuadraticKinetic(),
        potential=parse("1 - exp(-x^2)"),
        coupling=LinearCoupling(phi=parse("1"), kappa_lo=1.0, kappa_hi=1.0),
    )


@pytest.fixture
def arctan_model():
    return HamiltonianModel(
        dim=1,
        kinetic=QuadraticKinetic(),
        potential=parse("1 - exp(-x^2)"),
        coupling=ArctanCoupling(shift=math.pi),
    )


def test_eval_h_quadratic_linear(quad_lin):
    # H(0, 2, 3) = 4/2 - 0 + 1*3
    assert quad_lin.eval_h(0.0, 2.0, 3.0) == pytest.approx(5.0)
    assert quad_lin.eval_h(2.0, 0.0, 0.0) == pytest.approx(-(1 - math.exp(-4.0)))


def test_eval_h_arctan_at_origin(arctan_model):
    assert arctan_model.eval_h(0.0, 0.0, 0.0) == pytest.approx(math.pi)


def test_du_h(quad_lin, arctan_model):
    assert quad_lin.du_h(0.3, 1.0, 0.7) == pytest.approx(1.0)
    # (p^2+1)/(1+u^2) + 1 at p=2, u=1
    assert arctan_model.du_h(0.0, 2.0, 1.0) == pytest.approx(5.0 / 2.0 + 1.0)


def test_closed_legendre_values(quad_lin):
    ev = LagrangianEvaluator(quad_lin)
    assert ev.uses_closed_form
    assert ev.legendre(0.0, 1.0, 0.0) == pytest.approx(0.5)
    assert ev.legendre(0.0, 0.0, 2.0) == pytest.approx(-2.0)
    # x enters additively through f
    assert ev.legendre(2.0, 1.0, 0.0) == pytest.approx(0.5 + 1 - math.exp(-4.0))


def test_fenchel_young(quad_lin):
    ev = LagrangianEvaluator(quad_lin)
    rng = np.random.RandomState(11)
    for _ in range(60):
        x, p, v, u = rng.uniform(-3, 3, size=4)
        lhs = ev.legendre(x, v, u) + quad_lin.eval_h(x, p, u)
        assert lhs >= p * v - 1e-12


def test_gridsup_matches_closed_form(quad_lin):
    closed = LagrangianEvaluator(quad_lin, mode="closed")
    grid = LagrangianEvaluator(quad_lin, mode="gridsup", p_spacing=0.01)
    rng = np.random.RandomState(5)
    for _ in range(25):
        x, v, u = rng.uniform(-2.5, 2.5, size=3)
        assert grid.legendre(x, v, u) == pytest.approx(
            closed.legendre(x, v, u), abs=5e-5)


def test_gridsup_power_kinetic():
    model = HamiltonianModel(dim=1, kinetic=PowerKinetic(tau=3.0),
                             potential=parse("0"), coupling=NoCoupling())
    ev = LagrangianEvaluator(model, mode="gridsup", p_spacing=0.01)
    # sup_p [1.7 p - |p|^3/3] = |1.7|^{1.5}/1.5
    assert ev.legendre(0.0, 1.7, 0.0) == pytest.approx(
        abs(1.7) ** 1.5 / 1.5, abs=5e-5)


def test_arctan_legendre_values(arctan_model):
    ev = LagrangianEvaluator(arctan_model)
    assert not ev.uses_closed_form
    # sup_p [-p^2/2 - (p^2+1) pi] = -pi at p = 0
    assert ev.legendre(0.0, 0.0, 0.0) == pytest.approx(-math.pi, abs=1e-12)
    # quadratic in p with maximum at p = 1/(1 + 2 pi)
    want = 1.0 / (2.0 * (1.0 + 2.0 * math.pi)) - math.pi
    assert ev.legendre(0.0, 1.0, 0.0) == pytest.approx(want, abs=5e-5)


def test_arctan_partial_u(arctan_model):
    ev = LagrangianEvaluator(arctan_model)
    # maximizer at v=0 is p=0: dL/du = -1/(1+u^2) - 1 = -2 at u=0
    assert ev.partial_u_l(0.0, 0.0, 0.0) == pytest.approx(-2.0, abs=1e-4)


def test_partial_u_linear_and_none(quad_lin):
    ev = LagrangianEvaluator(quad_lin)
    assert ev.partial_u_l(0.7, 1.0, 0.3) == pytest.approx(-1.0)
    bare = HamiltonianModel(dim=1, kinetic=QuadraticKinetic(),
                            potential=parse("1 - exp(-x^2)"))
    assert LagrangianEvaluator(bare).partial_u_l(0.7, 1.0, 0.3) == 0.0


def test_discount_index_quotient_and_degenerate(quad_lin):
    ev = LagrangianEvaluator(quad_lin)
    assert ev.discount_index(1.0, 0.5, 0.7, 0.2) == pytest.approx(-1.0)
    assert ev.discount_index(1.0, 0.5, 0.3, 0.3) == pytest.approx(-1.0)
    # symmetry in the two levels
    assert ev.discount_index(1.0, 0.5, 0.2, 0.7) == pytest.approx(
        ev.discount_index(1.0, 0.5, 0.7, 0.2))


def test_discount_index_batched(quad_lin):
    ev = LagrangianEvaluator(quad_lin)
    a = np.array([0.7, 0.3, -0.1])
    b = np.array([0.2, 0.3, 0.4])
    out = ev.discount_index(np.ones(3), 0.5 * np.ones(3), a, b)
    np.testing.assert_allclose(out, -np.ones(3), atol=1e-12)


def test_index_nonpositive_for_monotone_models(arctan_model):
    ev = LagrangianEvaluator(arctan_model)
    rng = np.random.RandomState(2)
    for _ in range(20):
        x, v = rng.uniform(-2, 2, size=2)
        a, b = rng.uniform(-1.5, 1.5, size=2)
        assert ev.discount_index(x, v, a, b) <= 1e-10


def test_coupling_table_matches_exact(arctan_model):
    ev = LagrangianEvaluator(arctan_model)
    speeds = np.array([0.0, 0.5, 1.0, 2.0])
    table = ev.coupling_table(speeds, -1.0, 1.0)
    assert table.covers(-1.0, 1.0)
    u = np.array([-0.8, -0.3, 0.0, 0.4, 0.97])
    w = table.values(u)
    assert w.shape == (4, 5)
    for j, s in enumerate(speeds):
        for i, ui in enumerate(u):
            exact = ev.legendre(0.0, s, float(ui)) + ui  # strip -u and f(0)=0
            assert w[j, i] == pytest.approx(exact, abs=5e-5)


def test_tabulated_kinetic_interp_and_extent():
    # table of p^2/2 on [0, 3]
    dp = 0.05
    vals = tuple(0.5 * (dp * k) ** 2 for k in range(61))
    model = HamiltonianModel(dim=1, kinetic=TabulatedKinetic(dp=dp, values=vals),
                             potential=parse("0"))
    assert model.eval_h(0.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-3)
    ev = LagrangianEvaluator(model, p_spacing=0.01)
    assert ev.legendre(0.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ExtentError):
        ev.legendre(0.0, 10.0, 0.0)  # maximizer beyond the table


def test_extent_doubling_and_cap():
    model = HamiltonianModel(dim=1, kinetic=QuadraticKinetic(),
                             potential=parse("0"))
    ev = LagrangianEvaluator(model, mode="gridsup", p_extent=1.0,
                             p_spacing=0.01)
    # maximizer p = v = 3 lies beyond the initial extent; doubling reaches it
    assert ev.legendre(0.0, 3.0, 0.0) == pytest.approx(4.5, abs=5e-5)
    with pytest.raises(ExtentError):
        ev.legendre(0.0, 200.0, 0.0)  # beyond the hard cap


def test_json_roundtrip(quad_lin, arctan_model):
    for model in (quad_lin, arctan_model):
        data = model.to_json()
        back = HamiltonianModel.from_json(data)
        rng = np.random.RandomState(1)
        for _ in range(10):
            x, p, u = rng.uniform(-2, 2, size=3)
            assert back.eval_h(x, p, u) == pytest.approx(
                model.eval_h(x, p, u), abs=1e-14)


def test_json_roundtrip_power_2d():
    model = HamiltonianModel(
        dim=2, kinetic=PowerKinetic(tau=3.0),
        potential=parse("1 - exp(-(x^2 + y^2))"),
        coupling=LinearCoupling(phi=parse("1"), kappa_lo=1.0, kappa_hi=1.0))
    back = HamiltonianModel.from_json(model.to_json())
    assert back.eval_h((0.3, -0.4), (1.0, 2.0), 0.5) == pytest.approx(
        model.eval_h((0.3, -0.4), (1.0, 2.0), 0.5))


def test_model_validation():
    with pytest.raises(ModelError):
        HamiltonianModel(dim=3, kinetic=QuadraticKinetic(), potential=parse("0"))
    with pytest.raises(ModelError):
        HamiltonianModel(dim=1, kinetic=QuadraticKinetic(),
                         potential=parse("1 - exp(-y^2)"))
    with pytest.raises(ModelError):
        PowerKinetic(tau=1.0)


def test_kappa_bounds(quad_lin, arctan_model):
    assert quad_lin.kappa_bounds(6.0) == (1.0, 1.0)
    lo, hi = arctan_model.kappa_bounds(6.0)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(38.0)


def test_assumptions_quadratic_linear(quad_lin):
    report = check_assumptions(quad_lin)
    for name in ("H1", "H2", "H3", "H4", "P1", "P2", "P3"):
        assert report.status(name) == "verified-on-samples", (
            name, report[name].witness)


def test_assumptions_arctan(arctan_model):
    report = check_assumptions(arctan_model)
    assert report.status("H1") == "verified-on-samples"
    assert report.status("H3") == "verified-on-samples"
    # du_H grows like |p|^2: the global bound fails at larger radii
    assert report.status("H4") == "violated"
    assert report["H4"].witness["du_h"] > report["H4"].witness["local_cap"]
    # arctan is concave in u > 0: joint convexity fails
    assert report.status("P2") == "violated"


def test_assumptions_detect_nonmonotone():
    bad = HamiltonianModel(
        dim=1, kinetic=QuadraticKinetic(), potential=parse("1 - exp(-x^2)"),
        coupling=LinearCoupling(phi=parse("0 - 1"), kappa_lo=-1.0,
                                kappa_hi=-1.0))
    report = check_assumptions(bad)
    assert report.status("H1") == "violated"
    assert report.status("H3") == "violated"


def test_assumptions_none_coupling():
    bare = HamiltonianModel(dim=1, kinetic=QuadraticKinetic(),
                            potential=parse("1 - exp(-x^2)"))
    report = check_assumptions(bare)
    assert report.status("H3") == "not-applicable"
    assert report.status("H4") == "not-applicable"


def test_lower_bound_m0(quad_lin):
    xs = np.linspace(-6, 6, 241)[:, None]
    # min_p H(x, p, 0) = -f(x); max over x is -min f = 0 at x = 0
    assert lower_bound_m0(quad_lin, xs) == pytest.approx(0.0, abs=1e-12)


def test_two_dimensional_eval():
    model = HamiltonianModel(
        dim=2, kinetic=QuadraticKinetic(),
        potential=parse("1 - exp(-(x^2 + y^2))"),
        coupling=LinearCoupling(phi=parse("1"), kappa_lo=1.0, kappa_hi=1.0))
    # H(0, (3,4), 2) = 25/2 - 0 + 2
    assert model.eval_h((0.0, 0.0), (3.0, 4.0), 2.0) == pytest.approx(14.5)
    ev = LagrangianEvaluator(model)
    assert ev.legendre((0.0, 0.0), (3.0, 4.0), 0.0) == pytest.approx(12.5)

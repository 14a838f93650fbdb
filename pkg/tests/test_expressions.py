import math

import numpy as np
import pytest

from contact_hj.expressions import ParseError, parse


def test_parse_arithmetic():
    e = parse("1 - exp(-x^2)")
    assert e(x=0.0) == pytest.approx(0.0)
    assert e(x=2.0) == pytest.approx(1 - math.exp(-4.0))


def test_parse_vectorized():
    e = parse("2 + sin(x)")
    x = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(e(x=x), 2 + np.sin(x))


def test_two_variables():
    e = parse("1 - exp(-(x^2 + y^2))")
    assert e.variables == {"x", "y"}
    assert e(x=1.0, y=2.0) == pytest.approx(1 - math.exp(-5.0))


def test_precedence_and_unary():
    assert parse("-2^2")(x=0.0) == pytest.approx(-4.0)  # power binds tighter
    assert parse("2*3 + 4")(x=0.0) == pytest.approx(10.0)
    assert parse("2^3^2")(x=0.0) == pytest.approx(512.0)  # right associative


def test_pi_constant():
    assert parse("pi")() == pytest.approx(math.pi)


def test_roundtrip_through_str():
    texts = ["1 - exp(-x^2)", "2 + sin(x)", "x^3 - 2*x + 1",
             "cos(x)*sin(y) / (1 + x^2)"]
    rng = np.random.RandomState(7)
    pts = rng.uniform(-2, 2, size=(50, 2))
    for t in texts:
        e = parse(t)
        e2 = parse(str(e))
        v1 = e(x=pts[:, 0], y=pts[:, 1])
        v2 = e2(x=pts[:, 0], y=pts[:, 1])
        np.testing.assert_array_equal(np.broadcast_to(v1, (50,)),
                                      np.broadcast_to(v2, (50,)))


def test_diff_matches_finite_difference():
    rng = np.random.RandomState(3)
    for t in ["1 - exp(-x^2)", "2 + sin(x)", "x^3 - 2*x + 1", "x*cos(x)"]:
        e = parse(t)
        d = e.diff("x")
        x = rng.uniform(-2, 2, size=40)
        h = 1e-6
        fd = (e(x=x + h) - e(x=x - h)) / (2 * h)
        np.testing.assert_allclose(np.broadcast_to(d(x=x), x.shape), fd,
                                   atol=1e-7, rtol=1e-6)


def test_diff_two_variables():
    e = parse("x*y + sin(y)")
    assert e.diff("x")(x=0.0, y=3.0) == pytest.approx(3.0)
    assert e.diff("y")(x=2.0, y=0.0) == pytest.approx(3.0)


def test_parse_errors():
    for bad in ["", "x +", "(x", "x ** ** 2", "foo(x)", "x $ 2"]:
        with pytest.raises(ParseError):
            parse(bad)


def test_nonconstant_exponent_diff_rejected():
    with pytest.raises(ParseError):
        parse("x^x").diff("x")

from fractions import Fraction

import pytest

from rgwb.model import (
    ModelError,
    ParseError,
    parse_model,
    parse_polynomial,
    van_der_pol,
    van_der_pol_duffing,
)


def test_builtin_vdp():
    m = van_der_pol()
    assert m.param_names == ("mu",)
    assert m.omega == 2.0 and m.omega_time_dependent
    assert m.nonlinearity == {"mu": {(0, 1): Fraction(1), (2, 1): Fraction(-1)}}
    assert m.is_van_der_pol()
    assert m.max_order == 2


def test_builtin_vdpd():
    m = van_der_pol_duffing()
    assert m.nonlinearity["beta"] == {(3, 0): Fraction(-1)}
    assert not m.is_van_der_pol()
    assert m.time_dependent == {"mu": True, "beta": True, "omega": False}
    assert m.values() == {"mu": 0.01, "beta": 0.005, "omega": 1.0}


@pytest.mark.parametrize("model", [van_der_pol(), van_der_pol_duffing()])
def test_text_round_trip(model):
    again = parse_model(model.to_text())
    assert again == model
    assert parse_model(again.to_text()).to_text() == model.to_text()


def test_decimal_literals_are_exact():
    m = parse_model("param eps = 1\nnonlinearity = 0.5*eps*y^3 - eps*ydot/3\n")
    assert m.nonlinearity["eps"] == {(3, 0): Fraction(1, 2), (0, 1): Fraction(-1, 3)}


def test_polynomial_parser():
    assert parse_polynomial("(1 - y)^2") == {(): 1, (("y", 1),): -2, (("y", 2),): 1}
    assert parse_polynomial("y**2*ydot") == {(("y", 2), ("ydot", 1)): 1}


def test_max_order_lattice():
    m = parse_model("param a = 1\nparam b = 1\nnonlinearity = a*y + b*ydot\nmax_order = 2\n")
    assert len(m.orders) == 5


def test_parse_error_points_at_offending_character():
    text = "name = x\nparam mu = 1\nnonlinearity = mu*(1 - y^^2)\n"
    with pytest.raises(ParseError) as info:
        parse_model(text)
    assert (info.value.line, info.value.column) == (3, 26)
    assert str(info.value).startswith("line 3, column 26")


@pytest.mark.parametrize("text, fragment", [
    ("param mu = 1\nnonlinearity = mu*b*y\n", "unknown symbol 'b'"),
    ("param mu = 1\nnonlinearity = mu^2*y\n", "exactly one parameter"),
    ("param mu = 1\nnonlinearity = y\n", "exactly one parameter"),
    ("param mu = 1\nnonlinearity = mu*y\norders = mu^2\n", "not closed"),
    ("param mu = 1\nnonlinearity = mu*y\norders = mudot\n", "implied by [time_dependent]"),
    ("param mu = 1\nfoo = 3\n", "unknown key"),
    ("param mu = abc\n", "expected a number"),
    ("param mu = 1 [slow]\n", "unknown flag"),
    ("param y = 1\n", "reserved name"),
    ("param mu = 1\nparam mu = 2\n", "duplicate"),
    ("param mu = 1\nnonlinearity = mu*y\nmax_order = 0\n", "max_order"),
    ("just words\n", "expected 'key = value'"),
])
def test_model_errors(text, fragment):
    with pytest.raises(ModelError) as info:
        parse_model(text)
    assert fragment in str(info.value)


def test_with_values():
    m = van_der_pol(mu=0.2, omega=3.0)
    assert m.values() == {"mu": 0.2, "omega": 3.0}
    assert van_der_pol().values()["mu"] == 0.1

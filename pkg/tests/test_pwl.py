from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bnndual.errors import ParseError, ZeroDirection
from bnndual.pwl import Interval, PwlFunction, add, compose, to_csv, upper_dir_derivative

from instances import fractions, pwl_functions

F_TILDE = PwlFunction([0], [-1, 2])


def test_f_tilde_values():
    assert F_TILDE(Fraction(1, 4)) == Fraction(1, 2)
    assert F_TILDE(Fraction(-2)) == 2
    assert F_TILDE(0) == 0


def test_upper_directional_derivative():
    assert upper_dir_derivative(F_TILDE, 1) == 2
    assert upper_dir_derivative(F_TILDE, -1) == 1
    assert upper_dir_derivative(PwlFunction.linear(3), Fraction(-2, 3)) == -2
    with pytest.raises(ZeroDirection):
        upper_dir_derivative(F_TILDE, 0)


def test_add_identity_and_compose_identity():
    assert add(F_TILDE, PwlFunction.zero()) == F_TILDE
    assert compose(PwlFunction.identity(), F_TILDE) == F_TILDE


def test_compose_slope_products():
    h = compose(PwlFunction.linear(3), PwlFunction([1], [1, 2]))
    assert h.breakpoints == (1,) and h.slopes == (3, 6)


def test_constructor_checks():
    with pytest.raises(ValueError):
        PwlFunction([1, 0], [1, 2, 3])
    with pytest.raises(ValueError):
        PwlFunction([0], [1])


def test_json_round_trip_and_float_rejection():
    f = PwlFunction([Fraction(-1, 3), 2], [1, Fraction(-5, 7), 0])
    assert PwlFunction.loads(f.dumps()) == f
    with pytest.raises(ParseError):
        PwlFunction.loads('{"left_slope": 0.5, "pieces": []}')


def test_csv_export():
    lines = to_csv(F_TILDE, [Fraction(-1, 2), 1]).splitlines()
    assert lines == ["b,f,f_decimal", "-1/2,1/2,0.5", "1,2,2"]


def test_interval_basics():
    i = Interval(Fraction(-1), Fraction(2))
    assert 0 in i and 3 not in i and i.clip(5) == 2
    assert str(i) == "[-1, 2]" and str(Interval.point(Fraction(2))) == "{2}"
    with pytest.raises(ValueError):
        Interval(Fraction(1), Fraction(0))


@settings(max_examples=200, deadline=None)
@given(pwl_functions(), fractions)
def test_anchor_and_continuity(f, x):
    assert f(0) == 0
    eps = Fraction(1, 10**9)
    assert abs(f(x + eps) - f(x)) <= f.lipschitz_constant() * eps


@settings(max_examples=200, deadline=None)
@given(pwl_functions(), fractions, fractions)
def test_lipschitz_bound(f, x, y):
    assert abs(f(x) - f(y)) <= f.lipschitz_constant() * abs(x - y)


@settings(max_examples=150, deadline=None)
@given(pwl_functions(), pwl_functions(), fractions)
def test_add_pointwise(f, g, x):
    assert add(f, g)(x) == f(x) + g(x)


@settings(max_examples=150, deadline=None)
@given(pwl_functions(max_breaks=3), pwl_functions(max_breaks=3), fractions)
def test_compose_pointwise(f, g, x):
    assert compose(f, g)(x) == f(g(x))


@settings(max_examples=100, deadline=None)
@given(pwl_functions(), fractions.filter(lambda v: v != 0), st.fractions(min_value=Fraction(1, 10), max_value=10))
def test_fbar_positive_homogeneous(f, x, t):
    assert upper_dir_derivative(f, t * x) == t * upper_dir_derivative(f, x)


@settings(max_examples=100, deadline=None)
@given(pwl_functions())
def test_simplify_preserves_values(f):
    g = f.simplify()
    for x in [p for p in f.breakpoints] + [Fraction(-9), Fraction(9), Fraction(1, 3)]:
        assert g(x) == f(x)


def test_float_evaluation():
    assert F_TILDE(0.25) == pytest.approx(0.5)

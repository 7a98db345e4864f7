import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bnndual.autodiff import (
    Direction, Rule, chain, constant, field, geometric, harmonic, iterate, parse_schedule, select, stationary,
)
from bnndual.pwl import Interval, PwlFunction, compose

from instances import fractions, pwl_functions

F_TILDE = PwlFunction([0], [-1, 2])
ABS = PwlFunction.absolute()


def test_f_tilde_field():
    d = field(F_TILDE)
    assert d(Fraction(1, 3)) == Interval.point(Fraction(2))
    assert d(Fraction(0)) == Interval(Fraction(-1), Fraction(2))
    assert d(Fraction(-5)) == Interval.point(Fraction(-1))


def test_abs_and_linear_fields():
    assert field(ABS)(0) == Interval(Fraction(-1), Fraction(1))
    lin = field(PwlFunction.linear(3))
    assert all(lin(x) == Interval.point(Fraction(3)) for x in (-2, 0, Fraction(7, 3)))


def test_select_rules():
    iv = Interval(Fraction(-1), Fraction(2))
    assert select(iv, Rule.LEAST_NORM) == 0
    assert select(iv, Rule.MIDPOINT) == Fraction(1, 2)
    for rule in Rule:
        assert select(Interval.point(Fraction(2)), rule) == 2
    assert select(Interval(Fraction(1), Fraction(3)), Rule.LEAST_NORM) == 1
    assert select(Interval(Fraction(-3), Fraction(-1)), Rule.LEAST_NORM) == -1


def test_one_sided_rules_follow_segments():
    concave = field(PwlFunction([0], [2, -1]))(0)
    assert select(concave, Rule.LEFT_SLOPE) == 2 and select(concave, Rule.RIGHT_SLOPE) == -1


def test_chain_examples():
    assert chain(PwlFunction.linear(3), F_TILDE)(1) == Interval.point(Fraction(6))
    ident = chain(F_TILDE, PwlFunction.identity())
    for x in (Fraction(-1), Fraction(0), Fraction(1, 2)):
        assert ident(x) == field(F_TILDE)(x)
    assert chain(ABS, ABS)(0) == Interval(Fraction(-1), Fraction(1))


def test_descent_on_f_tilde():
    tr = iterate(F_TILDE, 1, 6, lambda k: Fraction(1, 2 ** (k + 1)), Direction.DESCEND, Rule.RIGHT_SLOPE)
    vs = tr.iterates
    assert vs[:2] == [1, 0]
    for k in range(len(vs) - 1):
        if vs[k] > 0:
            assert vs[k + 1] < vs[k] and tr.values[k + 1] <= tr.values[k]
    assert all(tr.in_field)


def test_stationary_at_origin():
    tr = iterate(F_TILDE, 0, 10, constant(1), Direction.DESCEND, Rule.LEAST_NORM)
    assert tr.iterates == [0, 0] and tr.elements == [0]


@pytest.mark.parametrize("rule", list(Rule))
def test_constant_objective_fixed(rule):
    tr = iterate(PwlFunction.zero(), Fraction(3, 7), 5, harmonic(1), Direction.ASCEND, rule)
    assert set(tr.iterates) == {Fraction(3, 7)}


def test_projection_interval():
    tr = iterate(PwlFunction.linear(1), 0, 5, constant(1), Direction.ASCEND, projection=Interval(Fraction(-1), Fraction(2)))
    assert tr.final == 2


def test_update_rule_exact():
    tr = iterate(F_TILDE, Fraction(-3), 8, geometric(1, Fraction(1, 2)), Direction.ASCEND, Rule.MIDPOINT)
    for k, g in enumerate(tr.elements):
        assert tr.iterates[k + 1] == tr.iterates[k] + tr.steps[k] * g
        assert g in field(F_TILDE)(tr.iterates[k])


def test_vector_iteration():
    def obj(v, rule):
        return v[0] ** 2 + v[1] ** 2, (2 * v[0], 2 * v[1])

    tr = iterate(obj, (1, -1), 3, constant(Fraction(1, 4)), Direction.DESCEND)
    assert tr.iterates[1] == (Fraction(1, 2), Fraction(-1, 2))
    assert tr.in_field[0] is None
    assert tr.to_csv().splitlines()[1] == "0,1;-1,2;-2,1/4,2"


def test_trace_csv_header():
    tr = iterate(F_TILDE, 1, 2, constant(Fraction(1, 4)))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "k,v_k,g_k,alpha_k,objective"
    assert lines[1] == "0,1,2,1/4,2"


def test_iterate_preconditions():
    with pytest.raises(ValueError):
        iterate(F_TILDE, 1, 0, constant(1))
    with pytest.raises(ValueError):
        iterate(F_TILDE, 1, 3, lambda k: Fraction(0))


def test_parse_schedule():
    assert parse_schedule("geometric:1/2:1/2")(2) == Fraction(1, 8)
    assert parse_schedule("harmonic:1")(3) == Fraction(1, 4)
    with pytest.raises(ValueError):
        parse_schedule("cosine:1")


@settings(max_examples=150, deadline=None)
@given(pwl_functions(), fractions)
def test_field_matches_derivative_off_breakpoints(f, x):
    if x in f.breakpoints:
        return
    h = Fraction(1, 10**9)
    left = max([p for p in f.breakpoints if p < x], default=x - 1)
    right = min([p for p in f.breakpoints if p > x], default=x + 1)
    h = min(h, (x - left) / 2, (right - x) / 2)
    d = field(f)(x)
    assert d.degenerate and d.lo == (f(x + h) - f(x)) / h


@settings(max_examples=150, deadline=None)
@given(pwl_functions())
def test_clarke_hull_at_breakpoints(f):
    for p in f.breakpoints:
        eps = Fraction(1, 10**6)
        left = field(f)(p - eps * min(1, min((p - q for q in f.breakpoints if q < p), default=1)))
        right = field(f)(p + eps * min(1, min((q - p for q in f.breakpoints if q > p), default=1)))
        assert field(f)(p) == Interval.hull([left.lo, right.lo])


@settings(max_examples=100, deadline=None)
@given(pwl_functions(max_breaks=3), pwl_functions(max_breaks=3), fractions)
def test_chain_contains_composite_field(outer, inner, x):
    c = chain(outer, inner)(x)
    direct = field(compose(outer, inner))(x)
    assert c.lo <= direct.lo and direct.hi <= c.hi


@settings(max_examples=100, deadline=None)
@given(pwl_functions(), fractions)
def test_least_norm_halts_iff_stationary(f, v0):
    tr = iterate(f, v0, 1, constant(1), rule=Rule.LEAST_NORM)
    assert (tr.elements[0] == 0) == stationary(f, v0)

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bnndual.errors import MultiRow, NotCertified, WeakDualityViolation
from bnndual.model import ConicMip, ralphs_example
from bnndual.pwl import Interval, PwlFunction, add, compose
from bnndual.solve import solve_mip
from bnndual.subadditive import (
    Mode, check_dual_feasible, check_subadditive, dual_constraints, max_subadditivity_violation,
    weak_duality_gap,
)

from instances import pwl_functions

F_TILDE = PwlFunction([0], [-1, 2])
G = PwlFunction([Fraction(1, 2)], [2, -1])  # min(2b, 3/2 - b)
H = PwlFunction([0], [0, Fraction(1, 2)])  # max(b/2, 0)
W4 = Interval(Fraction(-4), Fraction(4))
NONNEG = st.fractions(min_value=0, max_value=4, max_denominator=6)


def test_f_tilde_subadditive():
    assert check_subadditive(F_TILDE, W4).ok


def test_genuine_counterexample_witness():
    v = check_subadditive(PwlFunction([1], [1, 3]), W4)
    assert not v.ok
    x, y = v.witness
    f = PwlFunction([1], [1, 3])
    assert f(x + y) > f(x) + f(y)
    assert f(2) == 4 and f(1) + f(1) == 2


def test_zero_subadditive():
    assert check_subadditive(PwlFunction.zero(), W4).ok


def test_concave_is_not_subadditive_across_zero():
    # G(0) = 0 but G(1) + G(-1) = -3/2
    v = check_subadditive(G, W4)
    assert not v.ok
    assert G(0) > G(1) + G(-1)


def test_example_constraint_set_verbatim():
    got = [str(c) for c in dual_constraints(ralphs_example())]
    assert got == ["f(1) <= 1/2", "f(-3/2) <= 0", "fbar(1) <= 2", "fbar(-1) <= 1", "f(0) = 0"]


def test_f_tilde_infeasible_at_one():
    rep = check_dual_feasible(F_TILDE, ralphs_example())
    assert not rep.feasible
    first = rep.entries[0]
    assert str(first.constraint) == "f(1) <= 1/2" and first.lhs == 2 and not first.satisfied


def test_g_satisfies_columns_but_not_subadditivity():
    rep = check_dual_feasible(G, ralphs_example())
    assert all(e.satisfied for e in rep.entries)
    assert [e.lhs for e in rep.entries] == [Fraction(1, 2), -3, 2, -2, 0]
    assert not rep.subadditivity.ok and not rep.feasible
    with pytest.raises(NotCertified):
        weak_duality_gap(G, ralphs_example(b=1), solve_mip(ralphs_example(b=1)))


@pytest.mark.parametrize("b, gap", [(1, Fraction(0)), (0, Fraction(0))])
def test_tight_dual_gaps(b, gap):
    mip = ralphs_example(b=b)
    assert weak_duality_gap(H, mip, solve_mip(mip)) == gap
    line = PwlFunction.linear(Fraction(1, 2))
    assert weak_duality_gap(line, mip, solve_mip(mip)) == gap


def test_zero_function_gap():
    mip = ralphs_example(b=1)
    assert weak_duality_gap(PwlFunction.zero(), mip, solve_mip(mip)) == Fraction(1, 2)


def test_negative_gap_raises():
    # feasible dual for the model at b = 1 but evaluated where the primal is cheaper
    mip = ConicMip(1, [[]], [[1]], [1], [], [1], ["GreaterEq"], [], [(0, 10)])
    f = PwlFunction.linear(1)
    sol = solve_mip(mip)
    fake = type(sol)(sol.status, sol.x, sol.y, Fraction(1, 2), sol.nodes)
    with pytest.raises(WeakDualityViolation):
        weak_duality_gap(f, mip, fake)


def test_multi_row_rejected():
    mip = ConicMip(2, [[], []], [[1], [1]], [0, 0], [], [1], None, [], [(0, 1)])
    with pytest.raises(MultiRow):
        dual_constraints(mip)


def test_equality_mode_two_sided():
    cons = dual_constraints(ralphs_example(), Mode.EQUALITY)
    assert [str(c) for c in cons] == [
        "f(1) = 1/2", "-f(-1) = 1/2", "f(-3/2) = 0", "-f(3/2) = 0",
        "fbar(1) = 2", "-fbar(-1) = 2", "fbar(-1) = 1", "-fbar(1) = 1", "f(0) = 0",
    ]


def test_monotone_flag_for_ge_rows():
    mip = ConicMip(1, [[1]], [[]], [1], [1], [], ["GreaterEq"], [(0, 3)], [])
    rep = check_dual_feasible(PwlFunction([0], [1, -1]), mip)
    assert rep.monotone is False and not rep.feasible
    assert check_dual_feasible(PwlFunction.linear(1), mip).feasible


def test_report_document():
    doc = check_dual_feasible(H, ralphs_example()).to_document()
    assert doc["feasible"] and doc["subadditive"] and doc["window"] == ["-3", "3"]


@settings(max_examples=150, deadline=None)
@given(pwl_functions(max_breaks=3))
def test_verdict_agrees_with_dense_grid(f):
    v = check_subadditive(f, W4, samples=0)
    grid = [Fraction(k, 4) for k in range(-16, 17)]
    dense_ok = all(f(x + y) <= f(x) + f(y) for x in grid for y in grid if -4 <= x + y <= 8)
    if v.ok:
        assert dense_ok
    if not v.ok:
        x, y = v.witness
        assert f(x + y) > f(x) + f(y)


@settings(max_examples=100, deadline=None)
@given(pwl_functions(max_breaks=3, slope_strategy=NONNEG), NONNEG)
def test_nonnegative_on_positive_axis(f, x):
    if check_subadditive(f, W4, samples=100).ok:
        assert f(x) >= 0


@settings(max_examples=100, deadline=None)
@given(pwl_functions(max_breaks=2, slope_strategy=NONNEG), pwl_functions(max_breaks=2, slope_strategy=NONNEG))
def test_closure_under_add_and_compose(f, g):
    win = Interval(Fraction(-2), Fraction(2))
    if check_subadditive(f, W4, samples=100).ok and check_subadditive(g, W4, samples=100).ok:
        assert check_subadditive(add(f, g), win, samples=100).ok
    # f o g needs f subadditive (and nondecreasing) on the range of g over win
    pts = [win.lo, win.hi] + [p for p in g.breakpoints if p in win]
    vals = [g(p) for p in pts] + [Fraction(0)]
    rng = Interval(min(vals), max(vals))
    if check_subadditive(f, rng, samples=100).ok and check_subadditive(g, win, samples=100).ok:
        assert check_subadditive(compose(f, g), win, samples=100).ok


def test_max_violation_locates_worst_pair():
    ex, (x, y) = max_subadditivity_violation(PwlFunction([1], [1, 3]), W4)
    assert ex > 0

from fractions import Fraction

import pytest

from bnndual.dualfit import (
    FitConfig, MatchSamples, MaximizeAt, SegmentedParam, fit, fit_to_samples, refine, secant_init,
    value_and_grad,
)
from bnndual.errors import MultiRow
from bnndual.model import ConicMip, ralphs_example
from bnndual.pwl import Interval, PwlFunction

from oracles import ralphs_value

TOL = Fraction(1, 10**6)
NEAR = Interval(Fraction(-1, 2), Fraction(1, 2))


def test_segmented_param_drops_empty_segments():
    p = SegmentedParam((1, 5, 2), (0, 0))
    assert p.to_pwl() == PwlFunction([0], [1, 2])
    with pytest.raises(ValueError):
        SegmentedParam((1, 2), ())


def test_split_keeps_function():
    p = SegmentedParam((-1, 2), (0,))
    q = p.split(Fraction(1, 3))
    assert q.k == 3 and q.to_pwl() == p.to_pwl()


def test_value_and_grad_matches_evaluation_and_differences():
    p = SegmentedParam((Fraction(-1), Fraction(1, 2), Fraction(3)), (Fraction(-1), Fraction(2)))
    h = Fraction(1, 10**6)
    for x in (Fraction(-5, 2), Fraction(-1, 3), Fraction(1), Fraction(7, 2)):
        v, g = value_and_grad(p, x)
        assert v == p.to_pwl()(x)
        base = p.vector()
        for i in range(len(base)):
            bumped = list(base)
            bumped[i] += h
            v2 = SegmentedParam.from_vector(bumped, p.k).to_pwl()(x)
            assert (v2 - v) / h == g[i]


def test_secant_initialization():
    samples = [(Fraction(k, 20), ralphs_value(Fraction(k, 20))) for k in range(-10, 11)]
    p = secant_init(samples, NEAR, 2)
    assert p.breakpoints == (0,) and p.slopes == (-1, 2)


def test_match_near_origin_recovers_two_segments():
    res = fit(ralphs_example(), FitConfig(k=2, objective=MatchSamples(NEAR, Fraction(1, 20))))
    f = res.pwl
    assert abs(f.slope_right(0) - 2) <= TOL and abs(f.slope_left(0) + 1) <= TOL
    assert f.breakpoints == (0,)
    assert res.match_error == 0 and res.converged
    # the local fit is not a global certificate
    assert not res.report.feasible


def test_maximize_at_one_attains_primal_value():
    res = fit(ralphs_example(), FitConfig(k=2, objective=MaximizeAt(Fraction(1))))
    assert abs(res.pwl(1) - ralphs_value(1)) <= TOL
    assert res.report.feasible and res.converged
    assert res.lower_bound_ok


def test_single_segment_linear_value_function():
    mip = ConicMip(1, [[]], [[1]], [0], [], [1], ["GreaterEq"], [], [(0, 100)])
    res = fit(mip, FitConfig(k=1, objective=MatchSamples(Interval(Fraction(0), Fraction(2)), Fraction(1, 4))))
    assert res.pwl == PwlFunction.linear(1)


def test_refine_monotone_on_wide_window():
    cfg = FitConfig(k=2, objective=MatchSamples(Interval(Fraction(-2), Fraction(2)), Fraction(1, 8)), steps=80)
    rr = refine(ralphs_example(), cfg, 4)
    assert len(rr.errors) == 3
    assert all(b <= a for a, b in zip(rr.errors, rr.errors[1:]))
    assert rr.errors[-1] <= rr.errors[0]


def test_refine_degenerate_range_equals_fit():
    cfg = FitConfig(k=2, objective=MatchSamples(NEAR, Fraction(1, 10)))
    a = refine(ralphs_example(), cfg, 2).best
    b = fit(ralphs_example(), cfg)
    assert a.pwl == b.pwl and a.trace.iterates == b.trace.iterates


def test_zero_value_function_everywhere():
    mip = ConicMip(1, [[]], [[1]], [0], [], [0], ["GreaterEq"], [], [(0, 10)])
    cfg = FitConfig(k=1, objective=MatchSamples(Interval(Fraction(-1), Fraction(1)), Fraction(1, 4)))
    rr = refine(mip, cfg, 3)
    assert all(e == 0 for e in rr.errors)
    assert all(r.pwl == PwlFunction.zero() for r in rr.fits)


def test_deterministic():
    cfg = FitConfig(k=2, objective=MaximizeAt(Fraction(1)), steps=40, seed=5)
    a, b = fit(ralphs_example(), cfg), fit(ralphs_example(), cfg)
    assert a.trace.to_csv() == b.trace.to_csv() and a.dumps() == b.dumps()


@pytest.mark.parametrize("point", [Fraction(-1), Fraction(1, 4), Fraction(2)])
def test_feasible_fits_are_lower_bounds(point):
    res = fit(ralphs_example(), FitConfig(k=2, objective=MaximizeAt(point), steps=60))
    if res.report.feasible:
        assert all(res.pwl(b) <= z + TOL for b, z in res.samples)


def test_multi_row_rejected():
    mip = ConicMip(2, [[], []], [[1], [1]], [0, 0], [], [1], None, [], [(0, 1)])
    with pytest.raises(MultiRow):
        fit(mip, FitConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(k=0)
    with pytest.raises(ValueError):
        FitConfig(penalty_weight=Fraction(0))
    with pytest.raises(ValueError):
        FitConfig(schedule="bogus:1")


def test_fit_to_samples_subadditive():
    offs = [Fraction(k, 4) for k in range(-4, 5)]
    vals = [abs(t) for t in offs]
    res = fit_to_samples(offs, vals, FitConfig(k=2, steps=30))
    assert res.pwl == PwlFunction.absolute() and res.match_error == 0


def test_samples_csv():
    res = fit(ralphs_example(), FitConfig(k=2, objective=MatchSamples(NEAR, Fraction(1, 2))))
    lines = res.samples_csv().splitlines()
    assert lines[0] == "b,z_star,f,z_star_decimal,f_decimal"
    assert lines[1] == "-1/2,1/2,1/2,0.5,0.5"


@pytest.mark.parametrize("init", [SegmentedParam((0, 0), (0,)), SegmentedParam((1, 1), (-1,))])
def test_maximize_from_cold_start(init):
    res = fit(ralphs_example(), FitConfig(k=2, objective=MaximizeAt(Fraction(1))), init=init)
    assert res.report.feasible
    assert abs(res.pwl(1) - Fraction(1, 2)) <= TOL
    assert len(res.trace.elements) > 1

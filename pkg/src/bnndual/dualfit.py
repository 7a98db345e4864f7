"""Fitting piecewise-linear dual functions by conservative subgradient steps.

A function with ``k`` segments is parametrized by its slopes ``s_1..s_k`` and
breakpoints ``p_1 <= .. <= p_{k-1}``, anchored at ``f(0) = 0``.  The fitted
objective is either the mean absolute error against value-function samples
(``MatchSamples``) or ``-f(b*)`` (``MaximizeAt``), plus fixed-weight hinge
penalties on the dual constraints, on subadditivity over a window and, for
``>=`` rows, on negative slopes.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

from .autodiff import Direction, FieldValue, IterationTrace, Rule, iterate, parse_schedule, select
from .errors import MultiRow
from .model import ConicMip, Sense
from .pwl import Interval, PwlFunction
from .rational import as_fraction, decimal, fmt
from .solve import value_sweep
from .subadditive import (
    DualCheckReport,
    Mode,
    arrangement_vertices,
    check_dual_feasible,
    default_window,
    dual_constraints,
)

_HINGE = Interval(Fraction(0), Fraction(1))
_ABS = Interval(Fraction(-1), Fraction(1))


@dataclass(frozen=True)
class SegmentedParam:
    slopes: tuple
    breakpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(as_fraction(s) for s in self.slopes))
        object.__setattr__(self, "breakpoints", tuple(as_fraction(p) for p in self.breakpoints))
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise ValueError("k segments need k - 1 breakpoints")
        if any(b < a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be nondecreasing")

    @property
    def k(self) -> int:
        return len(self.slopes)

    def vector(self) -> tuple:
        return self.slopes + self.breakpoints

    @classmethod
    def from_vector(cls, v, k: int) -> "SegmentedParam":
        return cls(tuple(v[:k]), tuple(v[k:]))

    def to_pwl(self) -> PwlFunction:
        """The induced function; zero-length segments are dropped."""
        bps, slopes = [], [self.slopes[0]]
        for p, s in zip(self.breakpoints, self.slopes[1:]):
            if bps and p == bps[-1]:
                slopes[-1] = s
            else:
                bps.append(p)
                slopes.append(s)
        return PwlFunction(bps, slopes)

    def split(self, at) -> "SegmentedParam":
        at = as_fraction(at)
        i = bisect_right(self.breakpoints, at)
        return SegmentedParam(
            self.slopes[: i + 1] + self.slopes[i:],
            self.breakpoints[:i] + (at,) + self.breakpoints[i:],
        )

    def to_document(self) -> dict:
        return {"slopes": [fmt(s) for s in self.slopes], "breakpoints": [fmt(p) for p in self.breakpoints]}


@dataclass(frozen=True)
class MatchSamples:
    window: Interval
    grid_step: Fraction = Fraction(1, 20)


@dataclass(frozen=True)
class MaximizeAt:
    point: Fraction
    # grid for the report samples and secant initialization; None -> default window
    window: Optional[Interval] = None
    grid_step: Fraction = Fraction(1, 4)


@dataclass(frozen=True)
class FitConfig:
    k: int = 2
    objective: Union[MatchSamples, MaximizeAt] = MaximizeAt(Fraction(0))
    penalty_weight: Fraction = Fraction(4)
    steps: int = 200
    schedule: str = "geometric:1/4:15/16"
    rule: Rule = Rule.LEAST_NORM
    seed: int = 0
    tolerance: Fraction = Fraction(1, 10**6)
    mode: Mode = Mode.INEQUALITY
    window: Optional[Interval] = None  # subadditivity window used by the penalty

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.penalty_weight <= 0 or self.tolerance <= 0:
            raise ValueError("penalty_weight and tolerance must be positive")
        parse_schedule(self.schedule)


# -- exact values and parameter gradients ----------------------------------------


def _one_sided(left: bool, right: bool, d: Fraction, rule: Rule) -> Fraction:
    """Element of the field of ``p -> d * [p inside an open range]`` at ``p``."""
    if left == right:
        return d if left else Fraction(0)
    lv, rv = (d if left else Fraction(0)), (d if right else Fraction(0))
    return select(FieldValue.sides(lv, rv), rule)


def value_and_grad(param: SegmentedParam, x, rule: Rule = Rule.LEAST_NORM):
    """``f(x)`` and an element of its field with respect to ``(slopes, breakpoints)``."""
    s, p, k = param.slopes, param.breakpoints, param.k
    grad = [Fraction(0)] * (2 * k - 1)
    value = Fraction(0)
    if x == 0:
        return value, grad
    edges = (None,) + p + (None,)
    for i in range(k):
        lo, hi = edges[i], edges[i + 1]
        if x > 0:
            a = Fraction(0) if lo is None else max(lo, Fraction(0))
            b = x if hi is None else min(hi, x)
            ov = max(b - a, Fraction(0))
        else:
            a = x if lo is None else max(lo, x)
            b = Fraction(0) if hi is None else min(hi, Fraction(0))
            ov = -max(b - a, Fraction(0))
        value += s[i] * ov
        grad[i] = ov
    for i, pi in enumerate(p):
        d = s[i] - s[i + 1]
        if x > 0:
            g = _one_sided(0 < pi <= x, 0 <= pi < x, d, rule)
        else:
            g = _one_sided(x < pi <= 0, x <= pi < 0, -d, rule)
        grad[k + i] = g
    return value, grad


def fbar_and_grad(param: SegmentedParam, direction):
    k = param.k
    i = bisect_right(param.breakpoints, 0) if direction > 0 else bisect_left(param.breakpoints, 0)
    grad = [Fraction(0)] * (2 * k - 1)
    grad[i] = direction
    return direction * param.slopes[i], grad


def _axpy(acc, t, g):
    for i, gi in enumerate(g):
        acc[i] += t * gi


class PenalizedObjective:
    """``primary(theta) + W * penalty(theta)`` with a field element for each query."""

    def __init__(self, k, constraints, samples, sub_window, monotone, weight, point=None):
        self.k = k
        self.constraints = list(constraints)
        self.samples = list(samples)  # (b, z) pairs matched in MatchSamples mode
        self.sub_window = sub_window
        self.monotone = monotone
        self.weight = as_fraction(weight)
        self.point = point  # b* in MaximizeAt mode

    def primary(self, param: SegmentedParam, rule: Rule, with_grad: bool = True):
        n = 2 * self.k - 1
        grad = [Fraction(0)] * n
        if self.point is not None:
            v, g = value_and_grad(param, self.point, rule)
            return -v, [-x for x in g]
        if not self.samples:
            return Fraction(0), grad
        total = Fraction(0)
        for b, z in self.samples:
            v, g = value_and_grad(param, b, rule)
            r = v - z
            total += abs(r)
            sign = Fraction(1) if r > 0 else Fraction(-1) if r < 0 else select(_ABS, rule)
            if with_grad and sign:
                _axpy(grad, sign, g)
        m = len(self.samples)
        return total / m, [g / m for g in grad]

    def penalty(self, param: SegmentedParam, rule: Rule = Rule.LEAST_NORM):
        n = 2 * self.k - 1
        grad = [Fraction(0)] * n
        total = Fraction(0)

        def hinge(v, g):
            nonlocal total
            if v > 0:
                total += v
                _axpy(grad, 1, g)
            elif v == 0:
                _axpy(grad, select(_HINGE, rule), g)

        for c in self.constraints:
            if c.func == "f":
                v, g = value_and_grad(param, c.point, rule)
            else:
                v, g = fbar_and_grad(param, c.point)
            if c.negated:
                v, g = -v, [-x for x in g]
            r = v - c.bound
            if c.relation == "<=":
                hinge(r, g)
            else:
                total += abs(r)
                sign = Fraction(1) if r > 0 else Fraction(-1) if r < 0 else select(_ABS, rule)
                _axpy(grad, sign, g)
        if self.sub_window is not None:
            f = param.to_pwl()
            best = None
            for x, y in arrangement_vertices(f, self.sub_window):
                ex = f(x + y) - f(x) - f(y)
                if best is None or ex > best[0]:
                    best = (ex, x, y)
            ex, x, y = best
            if ex >= 0:
                g = value_and_grad(param, x + y, rule)[1]
                _axpy(g, -1, value_and_grad(param, x, rule)[1])
                _axpy(g, -1, value_and_grad(param, y, rule)[1])
                hinge(ex, g)
        if self.monotone:
            for i, s in enumerate(param.slopes):
                e = [Fraction(0)] * n
                e[i] = Fraction(-1)
                hinge(-s, e)
        return total, grad

    def __call__(self, v, rule):
        param = SegmentedParam.from_vector(v, self.k)
        pv, pg = self.primary(param, rule)
        qv, qg = self.penalty(param, rule)
        w = self.weight
        return pv + w * qv, tuple(a + w * b for a, b in zip(pg, qg))

    def projection(self, window: Interval):
        """Sort and clip breakpoints, then snap everything to a dyadic grid.

        The snap keeps denominators bounded; without it they grow with every
        step and exact arithmetic slows down quadratically.
        """
        k = self.k

        def project(v):
            v = [_snap(c) for c in v]
            bps = sorted(window.clip(p) for p in v[k:])
            return tuple(v[:k]) + tuple(bps)

        return project


_GRID = 1 << 48


def _snap(v: Fraction) -> Fraction:
    if (v.denominator & (v.denominator - 1)) == 0 and v.denominator <= _GRID:
        return v
    return Fraction(round(v * _GRID), _GRID)


# -- fitting ------------------------------------------------------------------------


@dataclass
class FitResult:
    pwl: PwlFunction
    param: SegmentedParam
    report: Optional[DualCheckReport]
    trace: IterationTrace
    converged: bool
    penalty: Fraction
    match_error: Optional[Fraction]
    samples: list = field(default_factory=list)  # (b, z*(b)) pairs

    @property
    def lower_bound_ok(self) -> Optional[bool]:
        """Whether ``f(b) <= z*(b)`` on every sample; None without a feasible report."""
        if self.report is None or not self.report.feasible:
            return None
        return all(self.pwl(b) <= z for b, z in self.samples)

    def samples_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["b", "z_star", "f", "z_star_decimal", "f_decimal"])
        for b, z in self.samples:
            v = self.pwl(b)
            writer.writerow([fmt(b), fmt(z), fmt(v), decimal(z), decimal(v)])
        return buf.getvalue()

    def to_document(self) -> dict:
        return {
            "k": self.param.k,
            "parameters": self.param.to_document(),
            "function": self.pwl.to_document(),
            "converged": self.converged,
            "penalty": fmt(self.penalty),
            "match_error": None if self.match_error is None else fmt(self.match_error),
            "iterations": len(self.trace.elements),
            "report": None if self.report is None else self.report.to_document(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True) + "\n"


def _grid(window: Interval, step) -> list:
    step = as_fraction(step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    pts, t = [], window.lo
    while t <= window.hi:
        pts.append(t)
        t += step
    return pts


def _sweep_samples(mip: ConicMip, window: Interval, step) -> list:
    sweep = value_sweep(mip, (1,), [t - mip.b[0] for t in _grid(window, step)])
    return [(mip.b[0] + t, v) for t, v in sweep.feasible()]


def secant_init(samples: Sequence, window: Interval, k: int) -> SegmentedParam:
    """Breakpoints uniform on ``window``; slopes are sample secants per segment."""
    width = window.hi - window.lo
    edges = [window.lo + width * Fraction(i, k) for i in range(k + 1)]
    pts = sorted(samples)
    overall = Fraction(0)
    if len(pts) >= 2:
        overall = (pts[-1][1] - pts[0][1]) / (pts[-1][0] - pts[0][0])
    slopes = []
    for lo, hi in zip(edges, edges[1:]):
        inside = [(b, z) for b, z in pts if lo <= b <= hi]
        if len(inside) >= 2:
            (b0, z0), (b1, z1) = inside[0], inside[-1]
            slopes.append((z1 - z0) / (b1 - b0))
        else:
            slopes.append(overall)
    return SegmentedParam(slopes, edges[1:-1])


def mean_abs_error(f: PwlFunction, samples: Sequence) -> Fraction:
    if not samples:
        return Fraction(0)
    return sum((abs(f(b) - z) for b, z in samples), Fraction(0)) / len(samples)


def _run(problem: PenalizedObjective, init: SegmentedParam, cfg: FitConfig, box: Interval, maximize: bool):
    trace = iterate(
        problem,
        init.vector(),
        cfg.steps,
        parse_schedule(cfg.schedule),
        Direction.DESCEND,
        cfg.rule,
        projection=problem.projection(box),
    )
    best_key, best = None, None
    for v in trace.iterates:
        param = SegmentedParam.from_vector(v, problem.k)
        prim = problem.primary(param, cfg.rule, with_grad=False)[0]
        pen = problem.penalty(param)[0]
        if maximize:
            key = (pen > 0, prim)
        else:
            key = (pen > cfg.tolerance, prim + problem.weight * pen)
        if best_key is None or key < best_key:
            best_key, best = key, (param, pen)
    return trace, best


def fit(mip: ConicMip, cfg: FitConfig, init: Optional[SegmentedParam] = None) -> FitResult:
    """Fit a ``cfg.k``-segment dual function to a one-row model.

    The returned function is the best iterate, preferring iterates whose
    penalty is within tolerance (exactly zero for ``MaximizeAt``).
    ``converged`` is False when the best penalty still exceeds the tolerance.
    """
    if mip.num_rows != 1:
        raise MultiRow(f"fitting needs a one-row model, got {mip.num_rows} rows")
    obj = cfg.objective
    constraints = [c for c in dual_constraints(mip, cfg.mode) if not (c.func == "f" and c.point == 0)]
    monotone = mip.row_sense[0] is Sense.GE
    if isinstance(obj, MatchSamples):
        window = obj.window
        samples = _sweep_samples(mip, window, obj.grid_step)
        # point conditions outside the matched window are not enforced here
        constraints = [c for c in constraints if c.func == "fbar" or c.point in window]
        report_window = cfg.window or default_window(mip, [b for b, _ in samples])
        box = sub_window = cfg.window or window
        problem = PenalizedObjective(cfg.k, constraints, samples, sub_window, monotone, cfg.penalty_weight)
        maximize = False
    else:
        point = as_fraction(obj.point)
        window = obj.window or default_window(mip, [point])
        samples = _sweep_samples(mip, window, obj.grid_step)
        # penalize on the same window the final report checks
        box = report_window = cfg.window or default_window(mip, [b for b, _ in samples])
        problem = PenalizedObjective(
            cfg.k, constraints, [], report_window, monotone, cfg.penalty_weight, point=point
        )
        maximize = True
    if init is None:
        init = secant_init(samples, window, cfg.k)
    if init.k != cfg.k:
        raise ValueError(f"initial parameters have {init.k} segments, config asks for {cfg.k}")
    trace, (param, pen) = _run(problem, init, cfg, box, maximize)
    f = param.to_pwl()
    report = check_dual_feasible(f, mip, cfg.mode, window=report_window, seed=cfg.seed)
    err = mean_abs_error(f, [(b, z) for b, z in samples if b in window])
    return FitResult(f, param, report, trace, pen <= cfg.tolerance, pen, err, samples)


@dataclass
class RefineResult:
    best: FitResult
    fits: list  # one FitResult per k
    errors: list  # best-so-far match error per k

    def to_document(self) -> dict:
        return {
            "best_k": self.best.param.k,
            "errors": [fmt(e) for e in self.errors],
            "best": self.best.to_document(),
        }


def _worst_sample(f: PwlFunction, samples, window: Interval):
    worst = None
    for b, z in samples:
        if b not in window:
            continue
        e = abs(f(b) - z)
        if worst is None or e > worst[0]:
            worst = (e, b)
    return worst


def refine(mip: ConicMip, cfg: FitConfig, k_max: int) -> RefineResult:
    """Fit with ``cfg.k`` segments, then add one segment at a time up to ``k_max``.

    Each new fit starts from the previous fit's parameters split at the sample
    of largest error.  The best-so-far error is nonincreasing by construction.
    """
    if k_max < cfg.k:
        raise ValueError("k_max must be at least cfg.k")
    first = fit(mip, cfg)
    fits, best = [first], first
    errors = [first.match_error]
    window = cfg.objective.window if isinstance(cfg.objective, MatchSamples) else None
    for k in range(cfg.k + 1, k_max + 1):
        prev = fits[-1]
        win = window or Interval(min(b for b, _ in prev.samples), max(b for b, _ in prev.samples))
        worst = _worst_sample(prev.pwl, prev.samples, win)
        at = worst[1] if worst is not None else (win.lo + win.hi) / 2
        init = prev.param.split(at)
        cur = fit(mip, replace(cfg, k=k), init=init)
        fits.append(cur)
        if (cur.converged, -cur.match_error) > (best.converged, -best.match_error):
            best = cur
        errors.append(best.match_error)
    return RefineResult(best, fits, errors)


def fit_to_samples(offsets: Sequence, values: Sequence, cfg: FitConfig) -> FitResult:
    """Fit a subadditive ``k``-segment function to samples of any value function.

    Used along a chosen rhs direction of multi-row models, where no column
    conditions are available; only subadditivity on the sample window is
    penalized.  No dual report is produced.
    """
    samples = sorted((as_fraction(t), as_fraction(v)) for t, v in zip(offsets, values) if v is not None)
    if len(samples) < 2:
        raise ValueError("need at least two feasible samples")
    lo, hi = min(samples[0][0], Fraction(0)), max(samples[-1][0], Fraction(0))
    window = Interval(lo, hi)
    problem = PenalizedObjective(cfg.k, [], samples, window, False, cfg.penalty_weight)
    init = secant_init(samples, window, cfg.k)
    trace, (param, pen) = _run(problem, init, cfg, window, False)
    f = param.to_pwl()
    return FitResult(f, param, None, trace, pen <= cfg.tolerance, pen, mean_abs_error(f, samples), samples)

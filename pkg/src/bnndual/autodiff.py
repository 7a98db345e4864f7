"""Conservative set-valued derivatives of piecewise-linear functions.

For a piecewise-linear ``f`` the field is ``{s_i}`` inside segment ``i`` and
the interval spanned by the two adjacent slopes at a breakpoint.  Selection
rules pick one element deterministically, and :func:`iterate` runs
``v <- v -/+ alpha_k g_k`` with ``g_k`` taken from the field at ``v``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .pwl import Interval, PwlFunction, compose
from .rational import as_fraction, fmt


class Rule(enum.Enum):
    LEFT_SLOPE = "leftslope"
    RIGHT_SLOPE = "rightslope"
    MIDPOINT = "midpoint"
    LEAST_NORM = "leastnorm"


class Direction(enum.Enum):
    ASCEND = "ascend"
    DESCEND = "descend"


@dataclass(frozen=True, eq=False)
class FieldValue(Interval):
    """An interval that also remembers the one-sided derivatives it spans."""

    left: Optional[Fraction] = None
    right: Optional[Fraction] = None

    @classmethod
    def sides(cls, left, right) -> "FieldValue":
        return cls(min(left, right), max(left, right), left, right)


class ConservativeField:
    def __init__(self, source: PwlFunction):
        self.source = source

    def __call__(self, x) -> FieldValue:
        f = self.source
        return FieldValue.sides(f.slope_left(x), f.slope_right(x))

    def kinks(self):
        return self.source.simplify().breakpoints


def field(f: PwlFunction) -> ConservativeField:
    return ConservativeField(f)


class ChainField(ConservativeField):
    """Field of ``outer o inner`` assembled from the two factors' fields.

    At a point where either factor has a kink the value is the hull of all
    products of adjacent slopes, which contains the Clarke derivative.
    """

    def __init__(self, outer: PwlFunction, inner: PwlFunction):
        super().__init__(compose(outer, inner))
        self.outer = outer
        self.inner = inner

    def __call__(self, x) -> FieldValue:
        y = self.inner(x)
        in_l, in_r = self.inner.slope_left(x), self.inner.slope_right(x)
        out_l, out_r = self.outer.slope_left(y), self.outer.slope_right(y)
        products = [a * b for a in (in_l, in_r) for b in (out_l, out_r)]
        # one-sided derivatives: moving left from x moves inner in direction -in_l
        left = in_l * (out_l if in_l > 0 else out_r)
        right = in_r * (out_r if in_r > 0 else out_l)
        return FieldValue(min(products), max(products), left, right)


def chain(outer: PwlFunction, inner: PwlFunction) -> ChainField:
    return ChainField(outer, inner)


def select(value: Interval, rule: Rule = Rule.LEAST_NORM) -> Fraction:
    rule = Rule(rule)
    if value.degenerate:
        return value.lo
    if rule is Rule.LEFT_SLOPE:
        return getattr(value, "left", None) if getattr(value, "left", None) is not None else value.lo
    if rule is Rule.RIGHT_SLOPE:
        return getattr(value, "right", None) if getattr(value, "right", None) is not None else value.hi
    if rule is Rule.MIDPOINT:
        return (value.lo + value.hi) / 2
    if value.lo <= 0 <= value.hi:
        return Fraction(0)
    return value.lo if value.lo > 0 else value.hi


# -- step sizes -----------------------------------------------------------------


def constant(alpha) -> Callable[[int], Fraction]:
    alpha = as_fraction(alpha)
    return lambda k: alpha


def harmonic(alpha) -> Callable[[int], Fraction]:
    alpha = as_fraction(alpha)
    return lambda k: alpha / (k + 1)


def geometric(alpha, ratio) -> Callable[[int], Fraction]:
    alpha, ratio = as_fraction(alpha), as_fraction(ratio)
    if not 0 < ratio <= 1:
        raise ValueError("geometric ratio must lie in (0, 1]")
    return lambda k: alpha * ratio**k


def parse_schedule(text: str):
    """``constant:a``, ``harmonic:a`` or ``geometric:a:r``."""
    kind, *args = text.split(":")
    table = {"constant": constant, "harmonic": harmonic, "geometric": geometric}
    if kind not in table:
        raise ValueError(f"unknown schedule {kind!r}")
    return table[kind](*args)


# -- iteration --------------------------------------------------------------------


@dataclass
class IterationTrace:
    iterates: list
    elements: list
    steps: list
    values: list
    in_field: list  # per element: True/False, or None when not checkable

    @property
    def final(self):
        return self.iterates[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "v_k", "g_k", "alpha_k", "objective"])
        for k, v in enumerate(self.iterates):
            g = self.elements[k] if k < len(self.elements) else None
            a = self.steps[k] if k < len(self.steps) else None
            writer.writerow([k, _cell(v), _cell(g), _cell(a), _cell(self.values[k])])
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return ";".join(fmt(x) for x in v)
    return fmt(v)


VectorObjective = Callable[[tuple, Rule], tuple]


def iterate(
    objective: Union[PwlFunction, VectorObjective],
    v0,
    steps: int,
    schedule: Callable[[int], Fraction],
    sense: Direction = Direction.DESCEND,
    rule: Rule = Rule.LEAST_NORM,
    projection=None,
) -> IterationTrace:
    """Conservative (sub)gradient iteration with exact arithmetic.

    ``objective`` is either a :class:`PwlFunction` (scalar iterate, elements
    drawn from its field) or a callable ``(v, rule) -> (value, element)`` over
    a tuple ``v``.  ``projection`` is an :class:`Interval` for the scalar case
    or a callable applied to each new iterate.  The loop stops early once the
    selected element is zero.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    sign = 1 if Direction(sense) is Direction.ASCEND else -1
    rule = Rule(rule)
    scalar = isinstance(objective, PwlFunction)
    if scalar:
        fld = ConservativeField(objective)

        def oracle(v, r):
            return objective(v), select(fld(v), r)

        v = as_fraction(v0)
    else:
        oracle = objective
        v = tuple(as_fraction(c) for c in v0)

    if isinstance(projection, Interval):
        box = projection
        projection = box.clip

    trace = IterationTrace([v], [], [], [], [])
    for k in range(steps):
        value, g = oracle(v, rule)
        trace.values.append(value)
        trace.elements.append(g)
        trace.in_field.append(g in fld(v) if scalar else None)
        alpha = schedule(k)
        if alpha <= 0:
            raise ValueError(f"step size {alpha} at k={k} is not positive")
        trace.steps.append(alpha)
        if _is_zero(g):
            trace.iterates.append(v)
            trace.values.append(value)
            return trace
        if scalar:
            v = v + sign * alpha * g
        else:
            v = tuple(c + sign * alpha * gc for c, gc in zip(v, g))
        if projection is not None:
            v = projection(v)
        trace.iterates.append(v)
    trace.values.append(oracle(v, rule)[0])
    return trace


def _is_zero(g) -> bool:
    if isinstance(g, (tuple, list)):
        return all(c == 0 for c in g)
    return g == 0


def stationary(f: PwlFunction, x) -> bool:
    return 0 in ConservativeField(f)(x)


def field_values(fld: ConservativeField, points: Sequence):
    return [fld(as_fraction(p)) for p in points]

"""Continuous piecewise-linear functions on the real line, anchored at f(0) = 0.

A function is stored as strictly increasing breakpoints ``p_1 < ... < p_{k-1}``
and one slope per segment, left to right.  Values follow from the anchor by
integrating the slopes, so every instance is continuous with ``f(0) = 0``.
Evaluation is exact for Fraction arguments and also accepts floats.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ParseError, ZeroDirection
from .rational import as_fraction, decimal, fmt


@dataclass(frozen=True, eq=False)
class Interval:
    """Closed interval ``[lo, hi]``; equality looks at the endpoints only."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, v) -> "Interval":
        return cls(v, v)

    @classmethod
    def hull(cls, values: Iterable) -> "Interval":
        values = list(values)
        return cls(min(values), max(values))

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, v) -> bool:
        return self.lo <= v <= self.hi

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return (self.lo, self.hi) == (other.lo, other.hi)

    def __hash__(self):
        return hash((self.lo, self.hi))

    def clip(self, v):
        return min(max(v, self.lo), self.hi)

    def __str__(self):
        if self.degenerate:
            return "{" + fmt(self.lo) + "}"
        return f"[{fmt(self.lo)}, {fmt(self.hi)}]"


class PwlFunction:
    __slots__ = ("breakpoints", "slopes", "_knots")

    def __init__(self, breakpoints: Sequence = (), slopes: Sequence = (0,)):
        bps = tuple(as_fraction(p) for p in breakpoints)
        sl = tuple(as_fraction(s) for s in slopes)
        if len(sl) != len(bps) + 1:
            raise ValueError(f"{len(bps)} breakpoints need {len(bps) + 1} slopes, got {len(sl)}")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        self.breakpoints = bps
        self.slopes = sl
        self._knots = self._knot_values()

    # -- constructors ------------------------------------------------------

    @classmethod
    def linear(cls, slope) -> "PwlFunction":
        return cls((), (slope,))

    @classmethod
    def zero(cls) -> "PwlFunction":
        return cls((), (0,))

    @classmethod
    def identity(cls) -> "PwlFunction":
        return cls((), (1,))

    @classmethod
    def absolute(cls) -> "PwlFunction":
        return cls((0,), (-1, 1))

    # -- evaluation ----------------------------------------------------------

    def _knot_values(self):
        bps, sl = self.breakpoints, self.slopes
        vals = [Fraction(0)] * len(bps)
        first_pos = bisect_left(bps, 0)
        prev, acc = Fraction(0), Fraction(0)
        for i in range(first_pos, len(bps)):
            acc += sl[i] * (bps[i] - prev)
            vals[i] = acc
            prev = bps[i]
        nxt, acc = Fraction(0), Fraction(0)
        for i in range(first_pos - 1, -1, -1):
            acc -= sl[i + 1] * (nxt - bps[i])
            vals[i] = acc
            nxt = bps[i]
        return tuple(vals)

    def __call__(self, x):
        bps = self.breakpoints
        if x >= 0:
            i = bisect_left(bps, x)  # x in (bps[i-1], bps[i]]
            if i > 0 and bps[i - 1] > 0:
                return self._knots[i - 1] + self.slopes[i] * (x - bps[i - 1])
            return self.slopes[i] * x
        i = bisect_right(bps, x)  # x in [bps[i-1], bps[i])
        if i < len(bps) and bps[i] < 0:
            return self._knots[i] + self.slopes[i] * (x - bps[i])
        return self.slopes[i] * x

    def slope_right(self, x) -> Fraction:
        """Slope of the segment immediately to the right of ``x``."""
        return self.slopes[bisect_right(self.breakpoints, x)]

    def slope_left(self, x) -> Fraction:
        return self.slopes[bisect_left(self.breakpoints, x)]

    def lipschitz_constant(self) -> Fraction:
        return max(abs(s) for s in self.slopes)

    @property
    def segments(self) -> int:
        return len(self.slopes)

    def is_concave(self) -> bool:
        return all(b <= a for a, b in zip(self.slopes, self.slopes[1:]))

    def is_convex(self) -> bool:
        return all(b >= a for a, b in zip(self.slopes, self.slopes[1:]))

    def is_nondecreasing(self) -> bool:
        return all(s >= 0 for s in self.slopes)

    # -- canonical form ------------------------------------------------------

    def simplify(self) -> "PwlFunction":
        """Drop breakpoints whose neighbouring slopes agree."""
        bps, sl = [], [self.slopes[0]]
        for p, s in zip(self.breakpoints, self.slopes[1:]):
            if s != sl[-1]:
                bps.append(p)
                sl.append(s)
        return PwlFunction(bps, sl)

    def _canonical(self):
        f = self.simplify()
        return f.breakpoints, f.slopes

    def __eq__(self, other):
        if not isinstance(other, PwlFunction):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def __repr__(self):
        bps = ", ".join(fmt(p) for p in self.breakpoints)
        sl = ", ".join(fmt(s) for s in self.slopes)
        return f"PwlFunction(breakpoints=[{bps}], slopes=[{sl}])"

    def __add__(self, other):
        return add(self, other)

    def scale(self, t) -> "PwlFunction":
        t = as_fraction(t)
        return PwlFunction(self.breakpoints, [t * s for s in self.slopes])

    # -- serialization -------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "left_slope": fmt(self.slopes[0]),
            "pieces": [[fmt(p), fmt(s)] for p, s in zip(self.breakpoints, self.slopes[1:])],
        }

    @classmethod
    def from_document(cls, doc: dict, source=None) -> "PwlFunction":
        try:
            pieces = doc.get("pieces", [])
            return cls([p for p, _ in pieces], [doc["left_slope"]] + [s for _, s in pieces])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad piecewise-linear document: {exc}", source) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_document()) + "\n"

    @classmethod
    def loads(cls, text: str, source=None) -> "PwlFunction":
        try:
            doc = json.loads(text, parse_float=_reject_float)
        except ValueError as exc:
            raise ParseError(str(exc), source) from exc
        return cls.from_document(doc, source)


def _reject_float(text):
    raise ValueError(f"floating-point literal {text} not allowed; write p/q")


def evaluate(f: PwlFunction, b):
    return f(b)


def upper_dir_derivative(f: PwlFunction, x) -> Fraction:
    """``limsup_{t -> 0+} f(t x) / t``, i.e. ``x`` times the slope on that side of 0."""
    x = as_fraction(x)
    if x == 0:
        raise ZeroDirection("direction must be nonzero")
    return x * (f.slope_right(0) if x > 0 else f.slope_left(0))


def _sample_points(bps):
    """One interior point per segment of the partition given by ``bps``."""
    if not bps:
        return [Fraction(0)]
    pts = [bps[0] - 1]
    pts += [(a + b) / 2 for a, b in zip(bps, bps[1:])]
    pts.append(bps[-1] + 1)
    return pts


def add(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    bps = sorted(set(f.breakpoints) | set(g.breakpoints))
    slopes = [f.slope_right(t) + g.slope_right(t) for t in _sample_points(bps)]
    return PwlFunction(bps, slopes).simplify()


def compose(outer: PwlFunction, inner: PwlFunction) -> PwlFunction:
    """``outer o inner``; breakpoints are inner's plus preimages of outer's."""
    cuts = set(inner.breakpoints)
    edges = [None] + list(inner.breakpoints) + [None]
    for seg, s in enumerate(inner.slopes):
        if s == 0:
            continue
        lo, hi = edges[seg], edges[seg + 1]
        anchor = lo if lo is not None else (hi if hi is not None else Fraction(0))
        base = inner(anchor)
        for q in outer.breakpoints:
            t = anchor + (q - base) / s
            if (lo is None or t > lo) and (hi is None or t < hi):
                cuts.add(t)
    bps = sorted(cuts)
    slopes = [outer.slope_right(inner(t)) * inner.slope_right(t) for t in _sample_points(bps)]
    return PwlFunction(bps, slopes).simplify()


def to_csv(f: PwlFunction, points: Iterable, decimals: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["b", "f"] + (["f_decimal"] if decimals else []))
    for b in points:
        v = f(as_fraction(b))
        writer.writerow([fmt(b), fmt(v)] + ([decimal(v)] if decimals else []))
    return buf.getvalue()

"""Subadditive dual functions of one-row MILPs.

For ``min c.x + d.y  s.t.  a.x + g.y (>= | =) b`` a piecewise-linear ``f`` is
dual feasible when ``f(0) = 0``, ``f`` is subadditive, ``f`` is non-decreasing
(only when the row is ``>=``), ``f(a_j) <= c_j`` for every integer column and
``fbar(g_k) <= d_k`` for every continuous column, where ``fbar`` is the upper
directional derivative at the origin.  Every such ``f`` satisfies
``f(b) <= z*(b)``.

``Mode.EQUALITY`` generates the stricter two-sided conditions
``f(a_j) = -f(-a_j) = c_j`` and ``fbar(g_k) = -fbar(-g_k) = d_k`` used when
the columns are sign-free.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional

from .errors import MultiRow, NotCertified, WeakDualityViolation
from .model import ConicMip, Sense
from .pwl import Interval, PwlFunction, upper_dir_derivative
from .rational import as_fraction, fmt


class Mode(enum.Enum):
    INEQUALITY = "inequality"
    EQUALITY = "equality"


# -- subadditivity --------------------------------------------------------------


@dataclass(frozen=True)
class SubadditivityVerdict:
    ok: bool
    witness: Optional[tuple] = None  # (x, y) with f(x + y) > f(x) + f(y)
    method: str = "enumeration"
    worst: Fraction = Fraction(0)  # max of f(x+y) - f(x) - f(y) found

    def __bool__(self):
        return self.ok


def arrangement_vertices(f: PwlFunction, window: Interval):
    """Pairs ``(x, y)`` at which ``f(x) + f(y) - f(x + y)`` can attain its minimum.

    On the box ``window x window`` that difference is affine on every cell cut
    out by the lines ``x = p``, ``y = p`` and ``x + y = p`` (``p`` a breakpoint),
    so checking the cell vertices decides subadditivity on the box exactly.
    """
    lo, hi = window.lo, window.hi
    edges = sorted({lo, hi} | {p for p in f.breakpoints if lo <= p <= hi})
    pairs = set(product(edges, edges))
    for a in edges:
        for p in f.breakpoints:
            other = p - a
            if lo <= other <= hi:
                pairs.add((a, other))
                pairs.add((other, a))
    return sorted(pairs)


def _candidate_points(f: PwlFunction, window: Interval):
    lo, hi = window.lo, window.hi
    pts = {lo, hi, Fraction(0)}
    pts.update(p for p in f.breakpoints)
    pts.update(p + q for p in f.breakpoints for q in f.breakpoints)
    pts = sorted(p for p in pts if lo <= p <= hi)
    mids = [(a + b) / 2 for a, b in zip(pts, pts[1:])]
    return sorted(set(pts) | set(mids))


def subadditivity_excess(f: PwlFunction, x, y):
    return f(x + y) - f(x) - f(y)


def check_subadditive(
    f: PwlFunction, window: Interval, samples: int = 10_000, seed: int = 0
) -> SubadditivityVerdict:
    """Decide ``f(x + y) <= f(x) + f(y)`` for ``x, y`` in ``window``.

    Convex functions whose only kink is at 0 are sublinear, hence
    subadditive everywhere, and return immediately.  Concavity is no shortcut
    on the whole line: a concave ``f`` with ``f(0) = 0`` is subadditive only if
    it is linear.  Otherwise the cell vertices of :func:`arrangement_vertices`,
    a candidate grid of breakpoints, their sums and midpoints, and ``samples``
    seeded random pairs are checked.
    """
    if not window.lo <= 0 <= window.hi:
        raise ValueError("window must contain 0")
    if f.is_convex() and all(p == 0 for p in f.simplify().breakpoints):
        return SubadditivityVerdict(True, method="sublinear")

    worst, witness = None, None

    def probe(x, y):
        nonlocal worst, witness
        ex = subadditivity_excess(f, x, y)
        if worst is None or ex > worst:
            worst, witness = ex, (x, y)
        return ex > 0

    for x, y in arrangement_vertices(f, window):
        if probe(x, y):
            return SubadditivityVerdict(False, witness, "enumeration", worst)
    pts = _candidate_points(f, window)
    for x in pts:
        for y in pts:
            if window.lo <= y <= window.hi and probe(x, y):
                return SubadditivityVerdict(False, witness, "enumeration", worst)
    rng = random.Random(seed)
    grid = 1 << 20
    width = window.hi - window.lo
    for _ in range(samples):
        x = window.lo + width * Fraction(rng.randrange(grid + 1), grid)
        y = window.lo + width * Fraction(rng.randrange(grid + 1), grid)
        if probe(x, y):
            return SubadditivityVerdict(False, witness, "sampling", worst)
    return SubadditivityVerdict(True, None, "enumeration", worst)


def max_subadditivity_violation(f: PwlFunction, window: Interval):
    """``(excess, (x, y))`` maximizing ``f(x+y) - f(x) - f(y)`` over the box."""
    best = None
    for x, y in arrangement_vertices(f, window):
        ex = subadditivity_excess(f, x, y)
        if best is None or ex > best[0]:
            best = (ex, (x, y))
    return best


# -- dual constraints -------------------------------------------------------------


@dataclass(frozen=True)
class DualConstraint:
    """``sign * F(point) (<= | =) bound`` with ``F`` either ``f`` or ``fbar``."""

    func: str  # "f" | "fbar"
    point: Fraction
    relation: str  # "<=" | "="
    bound: Fraction
    negated: bool = False
    column: Optional[int] = field(default=None, compare=False)

    def lhs(self, f: PwlFunction) -> Fraction:
        if self.func == "f":
            v = f(self.point)
        elif self.point == 0:
            v = Fraction(0)
        else:
            v = upper_dir_derivative(f, self.point)
        return -v if self.negated else v

    def holds(self, f: PwlFunction) -> bool:
        v = self.lhs(f)
        return v <= self.bound if self.relation == "<=" else v == self.bound

    def violation(self, f: PwlFunction) -> Fraction:
        v = self.lhs(f) - self.bound
        return max(v, Fraction(0)) if self.relation == "<=" else abs(v)

    def key(self):
        return (self.func, self.point, self.relation, self.bound, self.negated)

    def __str__(self):
        name = "fbar" if self.func == "fbar" else "f"
        core = f"{name}({fmt(self.point)})"
        if self.negated:
            core = "-" + core
        return f"{core} {self.relation} {fmt(self.bound)}"


def _require_scalar(mip: ConicMip):
    if mip.num_rows != 1:
        raise MultiRow(f"scalar dual machinery needs exactly one row, model has {mip.num_rows}")


def dual_constraints(mip: ConicMip, mode: Mode = Mode.INEQUALITY) -> list:
    """Constraint list of the subadditive dual of a one-row model.

    In inequality mode the companion conditions ``-f(-a) <= c`` are omitted:
    they follow from ``f(a) <= c`` together with subadditivity and ``f(0) = 0``.
    """
    _require_scalar(mip)
    mode = Mode(mode)
    out = []
    columns = [("f", a, c) for a, c in zip(mip.A[0], mip.c)] + [
        ("fbar", g, d) for g, d in zip(mip.G[0], mip.d)
    ]
    for j, (func, point, cost) in enumerate(columns):
        if mode is Mode.INEQUALITY:
            out.append(DualConstraint(func, point, "<=", cost, column=j))
        else:
            out.append(DualConstraint(func, point, "=", cost, column=j))
            out.append(DualConstraint(func, -point, "=", cost, negated=True, column=j))
    out.append(DualConstraint("f", Fraction(0), "=", Fraction(0)))
    return out


@dataclass(frozen=True)
class ConstraintEntry:
    constraint: DualConstraint
    lhs: Fraction
    satisfied: bool

    def __str__(self):
        mark = "ok" if self.satisfied else "VIOLATED"
        return f"{self.constraint}  (lhs {fmt(self.lhs)})  {mark}"


@dataclass(frozen=True)
class DualCheckReport:
    entries: tuple
    subadditivity: SubadditivityVerdict
    window: Interval
    monotone: Optional[bool]  # None when the row is an equality
    anchor: bool

    @property
    def feasible(self) -> bool:
        return (
            all(e.satisfied for e in self.entries)
            and self.subadditivity.ok
            and self.anchor
            and self.monotone is not False
        )

    def summary(self) -> str:
        lines = [str(e) for e in self.entries]
        sub = "ok" if self.subadditivity.ok else f"VIOLATED at {tuple(fmt(v) for v in self.subadditivity.witness)}"
        lines.append(f"subadditive on {self.window}: {sub} ({self.subadditivity.method})")
        if self.monotone is not None:
            lines.append(f"non-decreasing: {'ok' if self.monotone else 'VIOLATED'}")
        lines.append(f"dual feasible: {self.feasible}")
        return "\n".join(lines)

    def to_document(self) -> dict:
        return {
            "feasible": self.feasible,
            "constraints": [
                {"constraint": str(e.constraint), "lhs": fmt(e.lhs), "satisfied": e.satisfied}
                for e in self.entries
            ],
            "subadditive": self.subadditivity.ok,
            "subadditivity_witness": None
            if self.subadditivity.witness is None or self.subadditivity.ok
            else [fmt(v) for v in self.subadditivity.witness],
            "window": [fmt(self.window.lo), fmt(self.window.hi)],
            "monotone": self.monotone,
            "anchor": self.anchor,
        }


def default_window(mip: ConicMip, extra=()) -> Interval:
    pts = [abs(v) for v in mip.A[0] + mip.G[0] + mip.b] + [abs(as_fraction(v)) for v in extra]
    w = 2 * max(pts + [Fraction(1)])
    return Interval(-w, w)


def check_dual_feasible(
    f: PwlFunction,
    mip: ConicMip,
    mode: Mode = Mode.INEQUALITY,
    window: Optional[Interval] = None,
    samples: int = 10_000,
    seed: int = 0,
) -> DualCheckReport:
    _require_scalar(mip)
    constraints = dual_constraints(mip, mode)
    entries = tuple(ConstraintEntry(c, c.lhs(f), c.holds(f)) for c in constraints)
    window = default_window(mip) if window is None else window
    verdict = check_subadditive(f, window, samples=samples, seed=seed)
    monotone = f.is_nondecreasing() if mip.row_sense[0] is Sense.GE else None
    return DualCheckReport(entries, verdict, window, monotone, f(Fraction(0)) == 0)


def weak_duality_gap(f: PwlFunction, mip: ConicMip, sol, mode: Mode = Mode.INEQUALITY, report=None) -> Fraction:
    """``z* - f(b)`` for a certified dual function; raises if it is negative."""
    if not getattr(sol, "optimal", False):
        raise NotCertified("primal solution is not optimal")
    if report is None:
        report = check_dual_feasible(f, mip, mode)
    if not report.feasible:
        raise NotCertified("f is not dual feasible for this model")
    gap = sol.objective - f(mip.b[0])
    if gap < 0:
        raise WeakDualityViolation(gap)
    return gap

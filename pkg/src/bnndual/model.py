"""Mixed-integer linear programs over the nonnegative orthant.

A :class:`ConicMip` stores ``min c.x + d.y`` subject to ``A x + G y (>= | =) b``
with ``x`` integral and ``y`` continuous, every column carrying a closed
interval of admissible values.  All coefficients are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ParseError, UnboundedDomain
from .rational import INF, as_bound, as_fraction, fmt


class Sense(enum.Enum):
    GE = "GreaterEq"
    EQ = "Eq"

    @classmethod
    def parse(cls, text) -> "Sense":
        if isinstance(text, Sense):
            return text
        key = str(text).strip().lower()
        if key in (">=", "ge", "greatereq", "geq"):
            return cls.GE
        if key in ("=", "==", "eq", "equal"):
            return cls.EQ
        raise ValueError(f"unknown row sense {text!r}")


def _matrix(rows) -> tuple:
    return tuple(tuple(as_fraction(v) for v in row) for row in rows)


def _vector(values) -> tuple:
    return tuple(as_fraction(v) for v in values)


def _bounds(pairs) -> tuple:
    return tuple((as_bound(lo), as_bound(hi)) for lo, hi in pairs)


@dataclass(frozen=True)
class ConicMip:
    """``min c.x + d.y  s.t.  A x + G y (sense) b``, ``x`` integer, ``y`` real.

    Construction normalizes entries to Fractions but does not enforce shape
    invariants; call :func:`validate` for a report.
    """

    num_rows: int
    A: tuple
    G: tuple
    b: tuple
    c: tuple
    d: tuple
    row_sense: tuple = None
    int_bounds: tuple = None
    cont_bounds: tuple = None
    objective_sense: str = "min"

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "A", _matrix(self.A))
        set_(self, "G", _matrix(self.G))
        set_(self, "b", _vector(self.b))
        set_(self, "c", _vector(self.c))
        set_(self, "d", _vector(self.d))
        if self.row_sense is None:
            set_(self, "row_sense", (Sense.GE,) * self.num_rows)
        else:
            set_(self, "row_sense", tuple(Sense.parse(s) for s in self.row_sense))
        if self.int_bounds is None:
            set_(self, "int_bounds", ((Fraction(0), INF),) * len(self.c))
        else:
            set_(self, "int_bounds", _bounds(self.int_bounds))
        if self.cont_bounds is None:
            set_(self, "cont_bounds", ((Fraction(0), INF),) * len(self.d))
        else:
            set_(self, "cont_bounds", _bounds(self.cont_bounds))
        if self.objective_sense != "min":
            raise ValueError("only minimization models are represented; negate c, d at parse time")

    @property
    def n_int(self) -> int:
        return len(self.c)

    @property
    def n_cont(self) -> int:
        return len(self.d)

    def column(self, j: int) -> tuple:
        """Column ``j`` of ``[A | G]`` (integer columns first)."""
        if j < self.n_int:
            return tuple(row[j] for row in self.A)
        return tuple(row[j - self.n_int] for row in self.G)

    def with_rhs(self, b) -> "ConicMip":
        return _replace(self, b=_vector(b))

    def with_bounds(self, int_bounds=None, cont_bounds=None) -> "ConicMip":
        return _replace(
            self,
            int_bounds=self.int_bounds if int_bounds is None else int_bounds,
            cont_bounds=self.cont_bounds if cont_bounds is None else cont_bounds,
        )

    def has_finite_bounds(self) -> bool:
        return all(
            not math.isinf(lo) and not math.isinf(hi)
            for lo, hi in self.int_bounds + self.cont_bounds
        )

    def row_activity(self, x, y) -> tuple:
        return tuple(
            sum((a * v for a, v in zip(self.A[i], x)), Fraction(0))
            + sum((g * v for g, v in zip(self.G[i], y)), Fraction(0))
            for i in range(self.num_rows)
        )

    def is_feasible_point(self, x, y, integral: bool = True) -> bool:
        """Exact substitution check of rows and bounds."""
        if len(x) != self.n_int or len(y) != self.n_cont:
            return False
        for v, (lo, hi) in zip(list(x) + list(y), self.int_bounds + self.cont_bounds):
            if v < lo or v > hi:
                return False
        if integral and any(Fraction(v).denominator != 1 for v in x):
            return False
        for act, sense, rhs in zip(self.row_activity(x, y), self.row_sense, self.b):
            if sense is Sense.EQ and act != rhs:
                return False
            if sense is Sense.GE and act < rhs:
                return False
        return True

    def objective_value(self, x, y) -> Fraction:
        return sum((cj * v for cj, v in zip(self.c, x)), Fraction(0)) + sum(
            (dk * v for dk, v in zip(self.d, y)), Fraction(0)
        )


def _replace(mip: ConicMip, **changes) -> ConicMip:
    kwargs = dict(
        num_rows=mip.num_rows,
        A=mip.A,
        G=mip.G,
        b=mip.b,
        c=mip.c,
        d=mip.d,
        row_sense=mip.row_sense,
        int_bounds=mip.int_bounds,
        cont_bounds=mip.cont_bounds,
    )
    kwargs.update(changes)
    return ConicMip(**kwargs)


@dataclass(frozen=True)
class Violation:
    kind: str  # "dimension" | "bound"
    message: str


def validate(mip: ConicMip) -> list[Violation]:
    """Return every dimension or bound violation; empty iff the model is well formed."""
    out = []
    m, n1, n2 = mip.num_rows, mip.n_int, mip.n_cont

    def dim(msg):
        out.append(Violation("dimension", msg))

    if m < 0:
        dim(f"num_rows = {m} is negative")
    if len(mip.A) != m:
        dim(f"A has {len(mip.A)} rows, expected {m}")
    for i, row in enumerate(mip.A):
        if len(row) != n1:
            dim(f"A row {i} has {len(row)} entries, expected {n1}")
    if len(mip.G) != m:
        dim(f"G has {len(mip.G)} rows, expected {m}")
    for i, row in enumerate(mip.G):
        if len(row) != n2:
            dim(f"G row {i} has {len(row)} entries, expected {n2}")
    if len(mip.b) != m:
        dim(f"b has {len(mip.b)} entries, expected {m}")
    if len(mip.row_sense) != m:
        dim(f"{len(mip.row_sense)} row senses for {m} rows")
    if len(mip.int_bounds) != n1:
        dim(f"{len(mip.int_bounds)} integer bounds for {n1} integer columns")
    if len(mip.cont_bounds) != n2:
        dim(f"{len(mip.cont_bounds)} continuous bounds for {n2} continuous columns")

    for label, bounds in (("integer", mip.int_bounds), ("continuous", mip.cont_bounds)):
        for j, (lo, hi) in enumerate(bounds):
            if math.isinf(lo):
                out.append(Violation("bound", f"{label} column {j}: lower bound must be finite"))
            elif lo > hi:
                out.append(Violation("bound", f"{label} column {j}: lower {fmt(lo)} > upper {fmt(hi)}"))
    return out


def continuous_relaxation(mip: ConicMip) -> ConicMip:
    """Drop integrality: integer columns join the continuous block, bounds kept."""
    if mip.n_int == 0:
        return mip
    G = tuple(tuple(a) + tuple(g) for a, g in zip(mip.A, mip.G))
    return ConicMip(
        num_rows=mip.num_rows,
        A=tuple(() for _ in range(mip.num_rows)),
        G=G,
        b=mip.b,
        c=(),
        d=mip.c + mip.d,
        row_sense=mip.row_sense,
        int_bounds=(),
        cont_bounds=mip.int_bounds + mip.cont_bounds,
    )


def relaxation_dual(mip: ConicMip) -> ConicMip:
    """Dual LP of the continuous relaxation, as an LP model (feasibility part).

    Variables: one multiplier per row (split for equality rows), one per finite
    lower bound and one per finite upper bound; one equality row per primal
    column expressing ``A^T pi + mu - nu = cost``.  The dual objective is not
    needed for the feasibility question and is set to zero.
    """
    relaxed = continuous_relaxation(mip)
    n = relaxed.n_cont
    columns: list[list[Fraction]] = []  # each entry: coefficients over the n dual rows

    for i in range(relaxed.num_rows):
        col = [relaxed.G[i][j] for j in range(n)]
        columns.append(col)
        if relaxed.row_sense[i] is Sense.EQ:
            columns.append([-v for v in col])
    for j, (lo, hi) in enumerate(relaxed.cont_bounds):
        if not math.isinf(lo):
            columns.append([Fraction(int(k == j)) for k in range(n)])
        if not math.isinf(hi):
            columns.append([Fraction(-int(k == j)) for k in range(n)])

    G = tuple(tuple(col[k] for col in columns) for k in range(n))
    return ConicMip(
        num_rows=n,
        A=tuple(() for _ in range(n)),
        G=G,
        b=relaxed.d,
        c=(),
        d=(Fraction(0),) * len(columns),
        row_sense=(Sense.EQ,) * n,
        int_bounds=(),
        cont_bounds=((Fraction(0), INF),) * len(columns),
    )


@dataclass(frozen=True)
class NiceReport:
    primal_feasible: bool
    relaxation_dual_feasible: bool
    objective_pwl: bool
    witness: Optional[object] = field(default=None, compare=False)
    dual_witness: Optional[object] = field(default=None, compare=False)

    @property
    def is_nice(self) -> bool:
        return self.primal_feasible and self.relaxation_dual_feasible and self.objective_pwl


def check_nice(mip: ConicMip) -> NiceReport:
    """Certify feasibility, relaxation-dual feasibility and the objective flag.

    The primal is decided by branch-and-bound on a zero objective; the dual by
    a phase-1 solve of :func:`relaxation_dual`.  The objective flag is always
    true because only linear objectives can be represented.
    """
    from .solve import Status, solve_lp, solve_mip

    if not mip.has_finite_bounds():
        raise UnboundedDomain("niceness certification needs finite bounds on every column")
    feas_model = _replace(mip, c=(0,) * mip.n_int, d=(0,) * mip.n_cont)
    primal = solve_mip(feas_model)
    dual = solve_lp(relaxation_dual(mip), require_finite=False)
    return NiceReport(
        primal_feasible=primal.status is Status.OPTIMAL,
        relaxation_dual_feasible=dual.status is Status.OPTIMAL,
        objective_pwl=True,
        witness=primal if primal.status is Status.OPTIMAL else None,
        dual_witness=dual if dual.status is Status.OPTIMAL else None,
    )


def ralphs_example(b=0, int_cap=10, cont_cap=64) -> ConicMip:
    """One-row example ``min 2Y1 + Y2 + X1/2  s.t.  X1 - 3/2 X2 + Y1 - Y2 = b``.

    ``X`` is integral in ``[0, int_cap]``; ``Y`` continuous in ``[0, cont_cap]``.
    The default caps leave the value function untouched for ``|b| <= 16``.
    """
    return ConicMip(
        num_rows=1,
        A=[[1, Fraction(-3, 2)]],
        G=[[1, -1]],
        b=[b],
        c=[Fraction(1, 2), 0],
        d=[2, 1],
        row_sense=[Sense.EQ],
        int_bounds=[(0, int_cap), (0, int_cap)],
        cont_bounds=[(0, cont_cap), (0, cont_cap)],
    )


# -- text format ---------------------------------------------------------------


def _reject_float(text):
    raise ValueError(f"floating-point literal {text} not allowed; write p/q")


def to_document(mip: ConicMip) -> dict:
    return {
        "num_rows": mip.num_rows,
        "senses": [s.value for s in mip.row_sense],
        "A": [[fmt(v) for v in row] for row in mip.A],
        "G": [[fmt(v) for v in row] for row in mip.G],
        "b": [fmt(v) for v in mip.b],
        "c": [fmt(v) for v in mip.c],
        "d": [fmt(v) for v in mip.d],
        "int_bounds": [[fmt(lo), fmt(hi)] for lo, hi in mip.int_bounds],
        "cont_bounds": [[fmt(lo), fmt(hi)] for lo, hi in mip.cont_bounds],
    }


def from_document(doc: dict, source=None) -> ConicMip:
    try:
        maximize = str(doc.get("objective_sense", "min")).lower() in ("max", "maximize")
        c = [as_fraction(v) for v in doc.get("c", [])]
        d = [as_fraction(v) for v in doc.get("d", [])]
        if maximize:
            c = [-v for v in c]
            d = [-v for v in d]
        num_rows = doc["num_rows"]
        if not isinstance(num_rows, int):
            raise ValueError("num_rows must be an integer")
        return ConicMip(
            num_rows=num_rows,
            A=doc.get("A", [[] for _ in range(num_rows)]),
            G=doc.get("G", [[] for _ in range(num_rows)]),
            b=doc["b"],
            c=c,
            d=d,
            row_sense=doc.get("senses"),
            int_bounds=doc.get("int_bounds"),
            cont_bounds=doc.get("cont_bounds"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad model document: {exc}", source) from exc


def loads(text: str, source=None) -> ConicMip:
    try:
        doc = json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, source, exc.lineno) from exc
    except ValueError as exc:
        raise ParseError(str(exc), source) from exc
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object", source)
    return from_document(doc, source)


def dumps(mip: ConicMip, extra: Optional[dict] = None) -> str:
    doc = to_document(mip)
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1) + "\n"


def load(path) -> ConicMip:
    with open(path) as fh:
        return loads(fh.read(), source=str(path))


def columns_of(mip: ConicMip) -> Sequence[tuple]:
    return [mip.column(j) for j in range(mip.n_int + mip.n_cont)]

"""Exact LP/MILP solving and value-function sweeps along a rhs direction."""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ._simplex import LpState, LpStatus
from .errors import BnnDualError, NotRelaxed, UnboundedDomain
from .model import ConicMip, Sense
from .rational import as_fraction, decimal, fmt


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


_FROM_LP = {
    LpStatus.OPTIMAL: Status.OPTIMAL,
    LpStatus.INFEASIBLE: Status.INFEASIBLE,
    LpStatus.UNBOUNDED: Status.UNBOUNDED,
}


@dataclass(frozen=True)
class MipSolution:
    status: Status
    x: tuple = ()
    y: tuple = ()
    objective: Optional[Fraction] = None
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _upper(v):
    return None if math.isinf(v) else v


def _state(mip: ConicMip, int_bounds) -> LpState:
    rows = [list(a) + list(g) for a, g in zip(mip.A, mip.G)]
    bounds = list(int_bounds) + list(mip.cont_bounds)
    return LpState(
        rows,
        [s is Sense.EQ for s in mip.row_sense],
        mip.b,
        list(mip.c) + list(mip.d),
        [lo for lo, _ in bounds],
        [_upper(hi) for _, hi in bounds],
    )


def _check_bounds(mip: ConicMip, require_finite: bool):
    for lo, hi in mip.int_bounds + mip.cont_bounds:
        if math.isinf(lo):
            raise UnboundedDomain("lower bounds must be finite")
    if require_finite and not mip.has_finite_bounds():
        raise UnboundedDomain("every column needs a finite upper bound")


def solve_lp(lp: ConicMip, require_finite: bool = True) -> MipSolution:
    """Solve a model without integer columns exactly.

    ``require_finite=False`` admits ``[lo, inf)`` columns, in which case an
    ``Unbounded`` status can be returned.
    """
    if lp.n_int:
        raise NotRelaxed(f"model has {lp.n_int} integer columns; relax it first")
    _check_bounds(lp, require_finite)
    state = _state(lp, ())
    status = _FROM_LP[state.solve()]
    if status is not Status.OPTIMAL:
        return MipSolution(status)
    y = tuple(_frac(v) for v in state.values())
    return MipSolution(Status.OPTIMAL, (), y, _frac(state.objective()), nodes=1)


def _most_fractional(values, n_int):
    best, best_dist = None, None
    half = Fraction(1, 2)
    for j in range(n_int):
        v = values[j]
        if v.denominator == 1:
            continue
        frac = _frac(v - math.floor(v))
        dist = abs(frac - half)
        if best is None or dist < best_dist:
            best, best_dist = j, dist
    return best


def solve_mip(mip: ConicMip) -> MipSolution:
    """Depth-first branch-and-bound with most-fractional branching.

    Children are reoptimized by the dual simplex from the parent basis.  The
    down branch is explored first; ties in fractionality go to the lowest index.
    """
    _check_bounds(mip, require_finite=True)
    n1 = mip.n_int
    int_bounds = []
    for lo, hi in mip.int_bounds:
        lo, hi = math.ceil(lo), math.floor(hi)
        if lo > hi:
            return MipSolution(Status.INFEASIBLE)
        int_bounds.append((Fraction(lo), Fraction(hi)))

    root = _state(mip, int_bounds)
    status = root.solve()
    if status is not LpStatus.OPTIMAL:
        return MipSolution(_FROM_LP[status], nodes=1)

    incumbent, best_values = None, None
    nodes = 1
    # stack entries: (parent state, column, new lower, new upper) or a solved root
    stack = [(root, None, None, None)]
    while stack:
        parent, j, lo, hi = stack.pop()
        if j is None:
            state = parent
        else:
            if incumbent is not None and parent.objective() >= incumbent:
                continue
            state = parent.copy()
            state.set_bounds(j, lo, hi)
            nodes += 1
            if state.reoptimize() is not LpStatus.OPTIMAL:
                continue
        obj = state.objective()
        if incumbent is not None and obj >= incumbent:
            continue
        values = state.values()
        k = _most_fractional(values, n1)
        if k is None:
            incumbent, best_values = obj, list(values)
            continue
        v = values[k]
        floor_v = math.floor(v)
        k_lo, k_hi = state.lower[k], state.upper[k]
        stack.append((state, k, floor_v + 1, k_hi))
        stack.append((state, k, k_lo, floor_v))

    if incumbent is None:
        return MipSolution(Status.INFEASIBLE, nodes=nodes)
    x = tuple(int(best_values[j]) for j in range(n1))
    y = tuple(_frac(v) for v in best_values[n1:])
    sol = MipSolution(Status.OPTIMAL, x, y, _frac(incumbent), nodes=nodes)
    if not mip.is_feasible_point(x, y) or mip.objective_value(x, y) != sol.objective:
        raise BnnDualError("internal error: branch-and-bound returned an infeasible point")
    return sol


# -- value function sweeps ----------------------------------------------------


@dataclass(frozen=True)
class ValueFunctionSamples:
    base_rhs: tuple
    direction: tuple
    offsets: tuple
    values: tuple  # Fraction, or None where the sample is not Optimal
    statuses: tuple  # "Optimal" | "Infeasible" | "Unbounded" | "Error: ..."

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.offsets, self.offsets[1:])):
            raise ValueError("offsets must be strictly increasing")
        if not (len(self.offsets) == len(self.values) == len(self.statuses)):
            raise ValueError("offsets, values and statuses must align")

    def feasible(self):
        """Pairs ``(offset, value)`` for the optimal samples."""
        return [(t, v) for t, v in zip(self.offsets, self.values) if v is not None]

    def to_csv(self, decimals: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["offset", "value", "status"] + (["value_decimal"] if decimals else [])
        writer.writerow(header)
        for t, v, s in zip(self.offsets, self.values, self.statuses):
            row = [fmt(t), "" if v is None else fmt(v), s]
            if decimals:
                row.append("" if v is None else decimal(v))
            writer.writerow(row)
        return buf.getvalue()


def _sample(args):
    mip, rhs = args
    try:
        sol = solve_mip(mip.with_rhs(rhs))
    except BnnDualError as exc:
        return None, f"Error: {exc}"
    return sol.objective, sol.status.value


def value_sweep(
    mip: ConicMip, direction: Sequence, offsets: Sequence, workers: int = 1
) -> ValueFunctionSamples:
    """Solve ``mip`` with rhs ``b + t * direction`` for every offset ``t``.

    Each offset is solved on its own.  Failures are recorded in ``statuses``
    rather than raised, so a partially infeasible sweep still returns data.
    """
    direction = tuple(as_fraction(v) for v in direction)
    if len(direction) != mip.num_rows:
        raise ValueError(f"direction has {len(direction)} entries for {mip.num_rows} rows")
    offsets = tuple(sorted(as_fraction(t) for t in offsets))
    jobs = [(mip, tuple(b + t * e for b, e in zip(mip.b, direction))) for t in offsets]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample, jobs))
    else:
        results = [_sample(job) for job in jobs]
    return ValueFunctionSamples(
        base_rhs=mip.b,
        direction=direction,
        offsets=offsets,
        values=tuple(v for v, _ in results),
        statuses=tuple(s for _, s in results),
    )

"""Exact bounded-variable simplex over gmpy2 rationals.

Each row ``i`` reads ``sum_j a_ij x_j - r_i = b_i`` with a logical ``r_i`` in
``[0, inf)`` for ``>=`` rows and ``[0, 0]`` for equality rows.  The logicals form
the starting basis, structural columns start at the bound that makes the
reduced cost dual feasible, and the dual simplex restores primal feasibility.
Columns whose cost is negative with no finite upper bound get a zero cost for
that first pass; the true costs are then restored and the primal simplex
finishes.  Pivoting follows Bland's smallest-index rule in both directions.

The state is copyable so branch-and-bound can tighten a bound and reoptimize a
child from its parent's optimal basis.
"""

from __future__ import annotations

import enum

from gmpy2 import mpq

ZERO = mpq(0)


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _q(v):
    if v is None:
        return None
    return mpq(int(v.numerator), int(v.denominator))


class LpState:
    """Dense simplex tableau with explicit values for every column."""

    def __init__(self, rows, senses_eq, rhs, cost, lower, upper):
        # rows: list of coefficient lists over the n structural columns
        m = len(rows)
        n = len(cost)
        self.m, self.n = m, n
        self.cost = [_q(c) for c in cost] + [ZERO] * m
        self.lower = [_q(v) for v in lower] + [ZERO] * m
        self.upper = [_q(v) for v in upper] + [ZERO if eq else None for eq in senses_eq]
        self.T = []
        for i, row in enumerate(rows):
            t = [-_q(a) for a in row] + [ZERO] * m
            t[n + i] = mpq(1)
            self.T.append(t)
        self.head = [n + i for i in range(m)]
        self.is_basic = [False] * n + [True] * m

        self.x = [ZERO] * (n + m)
        for j in range(n):
            lo, hi, c = self.lower[j], self.upper[j], self.cost[j]
            self.x[j] = hi if (c < 0 and hi is not None) else lo
        for i, row in enumerate(rows):
            act = sum((_q(a) * self.x[j] for j, a in enumerate(row) if a), ZERO)
            self.x[n + i] = act - _q(rhs[i])
        self.d = None
        self.pivots = 0

    def copy(self) -> "LpState":
        new = LpState.__new__(LpState)
        new.m, new.n = self.m, self.n
        new.cost = self.cost
        new.lower = list(self.lower)
        new.upper = list(self.upper)
        new.T = [list(r) for r in self.T]
        new.head = list(self.head)
        new.is_basic = list(self.is_basic)
        new.x = list(self.x)
        new.d = list(self.d) if self.d is not None else None
        new.pivots = 0
        return new

    # -- helpers -------------------------------------------------------------

    def _reduced_costs(self, cost):
        d = list(cost)
        for i, p in enumerate(self.head):
            cp = cost[p]
            if cp:
                row = self.T[i]
                for k in range(len(d)):
                    if row[k]:
                        d[k] -= cp * row[k]
        return d

    def _can_up(self, j):
        hi = self.upper[j]
        return hi is None or self.x[j] < hi

    def _can_down(self, j):
        return self.x[j] > self.lower[j]

    def _move(self, j, delta):
        if not delta:
            return
        x = self.x
        for i, p in enumerate(self.head):
            t = self.T[i][j]
            if t:
                x[p] -= t * delta
        x[j] += delta

    def _pivot(self, r, j):
        T = self.T
        row = T[r]
        piv = row[j]
        if piv != 1:
            inv = 1 / piv
            for k in range(len(row)):
                if row[k]:
                    row[k] *= inv
        nz = [k for k in range(len(row)) if row[k]]
        for i in range(self.m):
            if i == r:
                continue
            other = T[i]
            f = other[j]
            if f:
                for k in nz:
                    other[k] -= f * row[k]
        f = self.d[j]
        if f:
            for k in nz:
                self.d[k] -= f * row[k]
        leaving = self.head[r]
        self.is_basic[leaving] = False
        self.is_basic[j] = True
        self.head[r] = j
        self.pivots += 1

    # -- algorithms ----------------------------------------------------------

    def dual_simplex(self) -> bool:
        """Restore primal feasibility from a dual feasible basis; False if infeasible."""
        x, lower, upper = self.x, self.lower, self.upper
        while True:
            r = None
            best = None
            for i, p in enumerate(self.head):
                hi = upper[p]
                if x[p] < lower[p] or (hi is not None and x[p] > hi):
                    if best is None or p < best:
                        best, r = p, i
            if r is None:
                return True
            p = best
            below = x[p] < lower[p]
            target = lower[p] if below else upper[p]
            row = self.T[r]
            enter, ratio = None, None
            for j in range(self.n + self.m):
                if self.is_basic[j]:
                    continue
                t = row[j]
                if not t:
                    continue
                up, down = self._can_up(j), self._can_down(j)
                if below:
                    ok = (up and t < 0) or (down and t > 0)
                else:
                    ok = (up and t > 0) or (down and t < 0)
                if not ok:
                    continue
                q = abs(self.d[j] / t)
                if ratio is None or q < ratio:
                    enter, ratio = j, q
            if enter is None:
                return False
            delta = (x[p] - target) / row[enter]
            self._move(enter, delta)
            x[p] = target
            self._pivot(r, enter)

    def primal_simplex(self) -> bool:
        """Optimize from a primal feasible basis; False if unbounded."""
        x, lower, upper = self.x, self.lower, self.upper
        while True:
            enter = None
            for j in range(self.n + self.m):
                if self.is_basic[j]:
                    continue
                dj = self.d[j]
                if (dj < 0 and self._can_up(j)) or (dj > 0 and self._can_down(j)):
                    enter = j
                    break
            if enter is None:
                return True
            j = enter
            direction = 1 if self.d[j] < 0 else -1
            theta = None
            leave_row, leave_idx = None, None
            if upper[j] is not None:
                theta = upper[j] - lower[j]
                leave_idx = j
            for i, p in enumerate(self.head):
                t = self.T[i][j]
                if not t:
                    continue
                rate = -t * direction  # change of x_p per unit step
                if rate < 0:
                    lim = (x[p] - lower[p]) / (-rate)
                elif upper[p] is not None:
                    lim = (upper[p] - x[p]) / rate
                else:
                    continue
                if theta is None or lim < theta or (lim == theta and p < leave_idx):
                    theta, leave_row, leave_idx = lim, i, p
            if theta is None:
                return False
            self._move(j, direction * theta)
            if leave_idx == j:
                # bound flip, no basis change
                x[j] = upper[j] if direction > 0 else lower[j]
                continue
            p = self.head[leave_row]
            rate = -self.T[leave_row][j] * direction
            x[p] = lower[p] if rate < 0 else upper[p]
            self._pivot(leave_row, j)

    def solve(self) -> LpStatus:
        shifted = list(self.cost)
        changed = False
        for j in range(self.n):
            if self.cost[j] < 0 and self.upper[j] is None:
                shifted[j] = ZERO
                changed = True
        self.d = self._reduced_costs(shifted)
        if not self.dual_simplex():
            return LpStatus.INFEASIBLE
        if changed:
            self.d = self._reduced_costs(self.cost)
        if not self.primal_simplex():
            return LpStatus.UNBOUNDED
        return LpStatus.OPTIMAL

    def set_bounds(self, j, lo, hi):
        """Tighten column ``j`` to ``[lo, hi]`` keeping the basis dual feasible."""
        lo, hi = _q(lo), _q(hi)
        self.lower[j], self.upper[j] = lo, hi
        if not self.is_basic[j]:
            # nonbasic columns stay at the bound that matches their reduced cost
            dj = self.d[j]
            if dj > 0 or hi is None:
                target = lo
            elif dj < 0:
                target = hi
            else:
                target = min(max(self.x[j], lo), hi)
            self._move(j, target - self.x[j])

    def reoptimize(self) -> LpStatus:
        if not self.dual_simplex():
            return LpStatus.INFEASIBLE
        if not self.primal_simplex():
            return LpStatus.UNBOUNDED
        return LpStatus.OPTIMAL

    def values(self):
        return self.x[: self.n]

    def objective(self):
        return sum((c * v for c, v in zip(self.cost[: self.n], self.x[: self.n]) if c), ZERO)

"""Dense bounded-variable primal simplex with Bland's rule.

Solves  max c^T x  subject to  rows @ x <= rhs,  0 <= x <= 1,  by stacking
slack variables and running a two-phase simplex.  Bland's smallest-index
rule is used for both the entering and the leaving choice, which rules out
cycling.  Everything is dense and the basis system is re-solved from scratch
each iteration: the feasible regions here are small and exactness matters
more than speed, in particular so that totally unimodular rows yield exactly
integral vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InfeasibleError, NumericError

_AT_LOWER = 0
_AT_UPPER = 1

_REDUCED_COST_TOL = 1e-9
_PIVOT_TOL = 1e-11
_FEAS_TOL = 1e-7
_MAX_ITER = 20000


@dataclass(frozen=True)
class LpProblem:
    """A linear program over the unit box: max objective @ x, rows @ x <= rhs."""

    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        A = np.asarray(self.rows, dtype=float)
        if A.size == 0:
            A = A.reshape(0, c.size)
        if A.ndim != 2 or A.shape[1] != c.size:
            raise DimensionError("constraint rows do not match the objective length")
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise DimensionError("right-hand side does not match the number of rows")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "rows", A)
        object.__setattr__(self, "rhs", b)


class _Tableau:
    """Simplex state over the full variable list (structurals, slacks,
    artificials).  Basic values are recomputed from the basis each iteration
    rather than updated incrementally."""

    def __init__(self, A, b, lo, hi, basis, status):
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.basis = basis        # one variable index per row
        self.status = status      # nonbasic bound flags, indexed by variable

    def nonbasic_values(self):
        x = np.where(self.status == _AT_UPPER, self.hi, self.lo)
        x[~np.isfinite(x)] = 0.0  # unbounded-above variables sit at their lower bound
        return x

    def point(self):
        x = self.nonbasic_values()
        mask = np.ones(self.A.shape[1], dtype=bool)
        mask[self.basis] = False
        B = self.A[:, self.basis]
        rest = self.A[:, mask] @ x[mask]
        x[self.basis] = np.linalg.solve(B, self.b - rest)
        return x

    def optimize(self, c, movable):
        """Run primal iterations until no eligible entering variable exists.

        ``movable`` masks variables allowed to enter the basis (used to keep
        phase-1 artificials out of phase 2).
        """
        n = self.A.shape[1]
        for _ in range(_MAX_ITER):
            x = self.point()
            B = self.A[:, self.basis]
            y = np.linalg.solve(B.T, c[self.basis])
            reduced = c - y @ self.A

            entering = -1
            direction = 0.0
            basic_mask = np.zeros(n, dtype=bool)
            basic_mask[self.basis] = True
            for j in range(n):
                if basic_mask[j] or not movable[j]:
                    continue
                if self.status[j] == _AT_LOWER and reduced[j] > _REDUCED_COST_TOL:
                    entering, direction = j, 1.0
                    break
                if self.status[j] == _AT_UPPER and reduced[j] < -_REDUCED_COST_TOL:
                    entering, direction = j, -1.0
                    break
            if entering < 0:
                return x

            w = np.linalg.solve(B, self.A[:, entering])
            span = self.hi[entering] - self.lo[entering]
            t_best = span if np.isfinite(span) else np.inf
            leave_row = -1
            hit_upper = False
            for i in range(len(self.basis)):
                delta = direction * w[i]
                bi = self.basis[i]
                if delta > _PIVOT_TOL:
                    t_i = (x[bi] - self.lo[bi]) / delta
                    goes_up = False
                elif delta < -_PIVOT_TOL:
                    if not np.isfinite(self.hi[bi]):
                        continue
                    t_i = (self.hi[bi] - x[bi]) / (-delta)
                    goes_up = True
                else:
                    continue
                t_i = max(t_i, 0.0)
                # Bland tie-break: keep the smallest basic variable index.
                if t_i < t_best - _PIVOT_TOL or (
                    t_i < t_best + _PIVOT_TOL
                    and (leave_row < 0 or bi < self.basis[leave_row])
                ):
                    t_best = min(t_best, t_i)
                    leave_row = i
                    hit_upper = goes_up

            if not np.isfinite(t_best):
                raise NumericError("unbounded simplex direction on a boxed problem")

            if leave_row < 0:
                # Entering variable runs to its opposite bound; basis unchanged.
                self.status[entering] = (
                    _AT_UPPER if self.status[entering] == _AT_LOWER else _AT_LOWER
                )
                continue

            leaving = self.basis[leave_row]
            self.basis[leave_row] = entering
            self.status[leaving] = _AT_UPPER if hit_upper else _AT_LOWER
        raise NumericError("simplex iteration guard exceeded")


def solve_boxed_lp(problem: LpProblem):
    """Solve the boxed LP; returns (x, value).

    Raises :class:`InfeasibleError` when no point satisfies the rows inside
    the unit box.
    """
    c0 = problem.objective
    rows = problem.rows
    rhs = problem.rhs
    m = c0.size
    l = rows.shape[0]

    if l == 0:
        x = (c0 > 0.0).astype(float)
        return x, float(c0 @ x)

    neg = rhs < -_PIVOT_TOL
    n_art = int(np.count_nonzero(neg))
    n = m + l + n_art

    A = np.zeros((l, n))
    A[:, :m] = rows
    A[:, m : m + l] = np.eye(l)
    lo = np.zeros(n)
    hi = np.concatenate([np.ones(m), np.full(l + n_art, np.inf)])

    basis = list(range(m, m + l))
    status = np.full(n, _AT_LOWER, dtype=int)

    art = []
    col = m + l
    for i in np.flatnonzero(neg):
        A[i, col] = -1.0
        basis[i] = col
        art.append(col)
        col += 1

    tab = _Tableau(A, rhs.copy(), lo, hi, basis, status)

    if n_art:
        c1 = np.zeros(n)
        c1[art] = -1.0
        movable = np.ones(n, dtype=bool)
        x = tab.optimize(c1, movable)
        if float(np.sum(x[art])) > _FEAS_TOL * (1.0 + float(np.abs(rhs).max())):
            raise InfeasibleError("no point satisfies the rows inside the unit box")
        # Pin the artificials at zero; degenerate basic ones may remain.
        tab.hi[art] = 0.0

    c = np.zeros(n)
    c[:m] = c0
    movable = np.ones(n, dtype=bool)
    movable[m + l :] = False
    x = tab.optimize(c, movable)

    sol = np.clip(x[:m], 0.0, 1.0)
    slack_violation = rows @ sol - rhs
    if np.any(slack_violation > _FEAS_TOL * (1.0 + np.abs(rhs).max(initial=1.0))):
        raise NumericError("simplex returned an infeasible point")
    return sol, float(c0 @ sol)

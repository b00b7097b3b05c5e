"""Solvers for the linearized 0-1 program, plus exact and greedy baselines.

Once a payoff gradient is available the decision problem collapses to
max g^T alpha over the constraint set, which no longer involves the
dynamical system at all; the solvers here take only the gradient (or a plain
objective callable) and the constraints.

Constraint kinds:

* count band    : k_min <= number of ones <= k_max
* TU rows       : integer rows @ alpha <= integer rhs with a totally
                  unimodular row matrix, solved exactly through the boxed LP
                  relaxation (the optimal vertex is integral)
* knapsack      : nonnegative weights, one capacity, 0.5-approximate greedy
* explicit      : a literal list of admissible vectors
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    ConstraintError,
    EnumerationRefusedError,
    InfeasibleError,
    TuViolationError,
)
from .gradient import Gradient
from .simplex import LpProblem, solve_boxed_lp

_TU_CHECK_LIMIT = 8          # exhaustive determinant check up to this size
_BRUTE_FORCE_LIMIT = 24
_ENUM_CHUNK = 1 << 16


def is_totally_unimodular(Q, max_minors: int = 200000) -> bool:
    """Exhaustively test total unimodularity by enumerating square submatrix
    determinants.  Intended for small matrices; raises when the number of
    minors exceeds ``max_minors``."""
    A = np.asarray(Q, dtype=float)
    if not np.allclose(A, np.round(A), atol=1e-9):
        return False
    A = np.round(A)
    l, m = A.shape
    total = 0
    from math import comb

    for k in range(1, min(l, m) + 1):
        total += comb(l, k) * comb(m, k)
    if total > max_minors:
        raise EnumerationRefusedError(
            f"{total} square submatrices exceed the enumeration limit {max_minors}"
        )
    for k in range(1, min(l, m) + 1):
        for rows in itertools.combinations(range(l), k):
            sub_rows = A[list(rows), :]
            for cols in itertools.combinations(range(m), k):
                det = np.linalg.det(sub_rows[:, list(cols)])
                if abs(det - round(det)) > 1e-6 or round(det) not in (-1, 0, 1):
                    return False
    return True


@dataclass(frozen=True)
class L0Band:
    """k_min <= ||alpha||_0 <= k_max."""

    k_min: int
    k_max: int

    def __post_init__(self):
        if not (0 <= self.k_min <= self.k_max):
            raise ConstraintError("count band needs 0 <= k_min <= k_max")


@dataclass(frozen=True)
class TuRows:
    """Integer inequality rows asserted totally unimodular by the caller.

    The assertion is verified exhaustively for matrices up to 8 x 8 and
    trusted above that; a false assertion surfaces later as a fractional LP
    vertex (TuViolationError).
    """

    rows: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.rows, dtype=float)
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.size:
            raise ConstraintError("rows and rhs shapes do not match")
        if not np.allclose(A, np.round(A), atol=1e-9):
            raise ConstraintError("TU rows must be integer")
        if not np.allclose(b, np.round(b), atol=1e-9):
            raise ConstraintError("TU right-hand side must be integer")
        object.__setattr__(self, "rows", np.round(A))
        object.__setattr__(self, "rhs", np.round(b))
        if A.shape[0] <= _TU_CHECK_LIMIT and A.shape[1] <= _TU_CHECK_LIMIT:
            if not is_totally_unimodular(self.rows):
                raise ConstraintError("row matrix is not totally unimodular")


@dataclass(frozen=True)
class Knapsack:
    """weights @ alpha <= capacity with nonnegative weights."""

    weights: np.ndarray
    capacity: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if np.any(w < 0):
            raise ConstraintError("knapsack weights must be nonnegative")
        if self.capacity < 0:
            raise ConstraintError("knapsack capacity must be nonnegative")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class ExplicitSet:
    """A literal collection of admissible binary vectors."""

    vectors: tuple

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=float).reshape(-1) for v in self.vectors)
        if not vecs:
            raise ConstraintError("explicit constraint set is empty")
        object.__setattr__(self, "vectors", vecs)

    def _key_set(self):
        return {v.astype(np.uint8).tobytes() for v in self.vectors}


ConstraintSet = Union[L0Band, TuRows, Knapsack, ExplicitSet]


def is_feasible(constraints: ConstraintSet, alpha) -> bool:
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if isinstance(constraints, L0Band):
        s = int(a.sum())
        return constraints.k_min <= s <= constraints.k_max
    if isinstance(constraints, TuRows):
        return bool(np.all(constraints.rows @ a <= constraints.rhs + 1e-9))
    if isinstance(constraints, Knapsack):
        return float(constraints.weights @ a) <= constraints.capacity + 1e-9
    if isinstance(constraints, ExplicitSet):
        return a.astype(np.uint8).tobytes() in constraints._key_set()
    raise ConstraintError(f"unknown constraint set {type(constraints).__name__}")


def feasible_mask(constraints: ConstraintSet, A: np.ndarray) -> np.ndarray:
    """Vectorized feasibility over a (N, m) matrix of binary rows."""
    if isinstance(constraints, L0Band):
        s = A.sum(axis=1)
        return (s >= constraints.k_min) & (s <= constraints.k_max)
    if isinstance(constraints, TuRows):
        return np.all(A @ constraints.rows.T <= constraints.rhs + 1e-9, axis=1)
    if isinstance(constraints, Knapsack):
        return A @ constraints.weights <= constraints.capacity + 1e-9
    if isinstance(constraints, ExplicitSet):
        keys = constraints._key_set()
        rows = np.ascontiguousarray(A.astype(np.uint8))
        return np.fromiter((r.tobytes() in keys for r in rows), bool, count=rows.shape[0])
    raise ConstraintError(f"unknown constraint set {type(constraints).__name__}")


def solve_l0(grad: Gradient, k_min: int, k_max: int) -> np.ndarray:
    """Exact one-shot solver for the count-band linearized problem.

    Turns on the k_min largest-derivative entries unconditionally, then keeps
    filling through rank k_max while the sorted entry is strictly positive.
    Ties sort stably, lower index first.
    """
    g = grad.entries
    m = g.size
    if not (0 <= k_min <= k_max <= m):
        raise ConstraintError("count band needs 0 <= k_min <= k_max <= m")
    order = np.argsort(-g, kind="stable")
    alpha = np.zeros(m)
    alpha[order[:k_min]] = 1.0
    for rank in range(k_min, k_max):
        if g[order[rank]] > 0.0:
            alpha[order[rank]] = 1.0
        else:
            break
    return alpha


def solve_tu(grad: Gradient, Q, r) -> np.ndarray:
    """Exact solver for integer TU inequality rows via the boxed LP
    relaxation; the optimal vertex must be integral and is snapped.

    A vertex further than 1e-7 from {0,1} means the caller's TU assertion was
    false and raises TuViolationError.
    """
    con = TuRows(np.asarray(Q), np.asarray(r))
    x, _ = solve_boxed_lp(LpProblem(grad.entries, con.rows, con.rhs))
    rounded = np.round(x)
    if np.any(np.abs(x - rounded) > 1e-7):
        raise TuViolationError(
            "LP relaxation returned a fractional vertex; the row matrix is not TU"
        )
    return np.clip(rounded, 0.0, 1.0)


def solve_knapsack(grad: Gradient, weights, capacity: float) -> np.ndarray:
    """Ratio-greedy 0.5-approximation for the knapsack-constrained problem.

    Entries with nonpositive derivative are fixed to zero first.  Items are
    packed in decreasing value/weight order; the packed set is compared
    against the best single fitting item and the better one is returned, so
    the value is at least half the knapsack optimum.
    """
    con = Knapsack(np.asarray(weights), float(capacity))
    w = con.weights
    v = grad.entries
    m = v.size
    if w.size != m:
        raise ConstraintError("weights length does not match the gradient")

    candidates = [i for i in range(m) if v[i] > 0.0 and w[i] <= con.capacity]
    alpha = np.zeros(m)
    if not candidates:
        return alpha

    ratio = np.where(w > 0, v / np.where(w > 0, w, 1.0), np.inf)
    order = sorted(candidates, key=lambda i: (-ratio[i], i))
    remaining = con.capacity
    packed_value = 0.0
    for i in order:
        if w[i] <= remaining:
            alpha[i] = 1.0
            remaining -= w[i]
            packed_value += v[i]

    best_single = max(candidates, key=lambda i: (v[i], -i))
    if v[best_single] > packed_value:
        alpha = np.zeros(m)
        alpha[best_single] = 1.0
    return alpha


def _binary_chunk(start: int, stop: int, m: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)[:, None]
    shifts = m - 1 - np.arange(m, dtype=np.int64)
    return ((codes >> shifts) & 1).astype(float)


def solve_bruteforce(
    objective: Callable[[np.ndarray], float],
    constraints: Optional[ConstraintSet],
    m: int,
    batch_objective: Optional[Callable[[np.ndarray], np.ndarray]] = None,
):
    """Exact maximizer by exhaustive enumeration; the oracle everything else
    is tested against.

    Enumerates in lexicographic order so ties resolve toward the
    lexicographically smallest vector.  ``batch_objective``, when given, maps
    an (N, m) matrix of binary rows to N payoffs and replaces the per-vector
    callable.  Returns (alpha, value); raises InfeasibleError when nothing is
    feasible and EnumerationRefusedError above m = 24.
    """
    if m > _BRUTE_FORCE_LIMIT:
        raise EnumerationRefusedError(f"refusing exhaustive search for m = {m} > {_BRUTE_FORCE_LIMIT}")
    best_val = -np.inf
    best_alpha = None
    total = 1 << m
    for start in range(0, total, _ENUM_CHUNK):
        stop = min(start + _ENUM_CHUNK, total)
        A = _binary_chunk(start, stop, m)
        mask = (
            np.ones(A.shape[0], dtype=bool)
            if constraints is None
            else feasible_mask(constraints, A)
        )
        if not mask.any():
            continue
        feas = A[mask]
        if batch_objective is not None:
            vals = np.asarray(batch_objective(feas), dtype=float)
        else:
            vals = np.fromiter((objective(row) for row in feas), float, count=feas.shape[0])
        k = int(np.argmax(vals))
        # argmax returns the first maximizer, preserving lexicographic order
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_alpha = feas[k].copy()
    if best_alpha is None:
        raise InfeasibleError("no binary vector satisfies the constraints")
    return best_alpha, best_val


def _can_add(constraints: Optional[ConstraintSet], alpha: np.ndarray, i: int) -> bool:
    cand = alpha.copy()
    cand[i] = 1.0
    if constraints is None:
        return True
    if isinstance(constraints, L0Band):
        # The lower bound constrains the final answer, not partial sets.
        return int(cand.sum()) <= constraints.k_max
    return is_feasible(constraints, cand)


def solve_greedy(
    objective: Callable[[np.ndarray], float],
    constraints: Optional[ConstraintSet],
    m: int,
) -> np.ndarray:
    """Greedy baseline on the true payoff: repeatedly turn on the feasible
    entry with the largest payoff increment.

    Stops when no increment is positive, except that a count band's k_min is
    filled first regardless of sign.  Costs O(m^2) objective evaluations.
    """
    alpha = np.zeros(m)
    current = float(objective(alpha))
    k_min = constraints.k_min if isinstance(constraints, L0Band) else 0
    while True:
        best_i = -1
        best_val = -np.inf
        for i in range(m):
            if alpha[i] == 1.0 or not _can_add(constraints, alpha, i):
                continue
            cand = alpha.copy()
            cand[i] = 1.0
            val = float(objective(cand))
            if val > best_val:
                best_val, best_i = val, i
        if best_i < 0:
            break
        must_grow = int(alpha.sum()) < k_min
        if best_val - current <= 0.0 and not must_grow:
            break
        alpha[best_i] = 1.0
        current = best_val
    if isinstance(constraints, L0Band) and int(alpha.sum()) < k_min:
        raise InfeasibleError("greedy could not reach the count band's lower bound")
    return alpha

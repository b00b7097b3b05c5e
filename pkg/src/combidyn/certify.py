"""A-posteriori suboptimality certificates and exhaustive structure checks.

The certificate: linearize the payoff at a feasible base point, solve the
resulting 0-1 linear program exactly to get alpha_star, and form

    rho = (J(alpha_star) - J(base)) / (g^T (alpha_star - base)).

Whenever the linearization over-estimates every payoff gain (the concavity
inequality checked by :func:`check_concavity_inequality`), the post-processed
coefficient rho_post = max(rho, 0) satisfies

    rho_post * (J(opt) - J(base)) <= J(alpha_post) - J(base)

with alpha_post the better of alpha_star and the base point.  A zero
linearized gain certifies the base point itself as optimal.

The certificate requires alpha_star to be an exact maximizer of the
linearized objective over the feasible set (count-band and TU solvers are
exact; the greedy knapsack solver is not and does not qualify).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, EnumerationRefusedError
from .gradient import Gradient
from .system import SystemSpec, TimeGrid, as_binary, evaluate_payoff, integrate

_ZERO_GAIN_TOL = 1e-12
_CONCAVITY_LIMIT = 20
_SET_FUNCTION_LIMIT = 14


@dataclass(frozen=True)
class CertifiedSolution:
    """An approximate solution together with its suboptimality certificate.

    ``optimal`` marks the degenerate case of zero linearized gain, where the
    base point is certified optimal; ``rho`` is None there and ``rho_post``
    reports 1.0 (the bound holds with coefficient one since the normalized
    optimum is zero).
    """

    alpha_star: np.ndarray
    kind: str
    payoff: float
    rho: Optional[float]
    optimal: bool
    rho_post: float
    alpha_post: np.ndarray
    payoff_post: float
    base_payoff: float

    def __post_init__(self):
        if self.rho_post < 0.0:
            raise ValueError("rho_post must be nonnegative")


def certify(
    spec: SystemSpec,
    alpha_bar,
    grad: Gradient,
    alpha_star,
    grid: TimeGrid,
    scheme: str = "euler",
) -> CertifiedSolution:
    """Certify an exact linearized-program solution against the base point.

    Payoffs are normalized by subtracting the cached base payoff; the spec
    itself is never mutated.  One extra integration (for alpha_star) is the
    only dynamical-system work.
    """
    abar = as_binary(alpha_bar, spec.decision_dim)
    astar = as_binary(alpha_star, spec.decision_dim)
    if grad.entries.size != spec.decision_dim:
        raise DimensionError("gradient length does not match the system")
    if not np.array_equal(grad.base_point, abar):
        raise DimensionError("gradient was computed at a different base point")

    j_base = grad.base_payoff
    j_star = evaluate_payoff(spec, integrate(spec, astar, grid, scheme), astar)
    gain = float(grad.entries @ (astar - abar))

    if abs(gain) < _ZERO_GAIN_TOL:
        better = astar if j_star >= j_base else abar
        j_better = max(j_star, j_base)
        return CertifiedSolution(
            alpha_star=astar,
            kind=grad.kind,
            payoff=j_star,
            rho=None,
            optimal=True,
            rho_post=1.0,
            alpha_post=better,
            payoff_post=j_better,
            base_payoff=j_base,
        )

    rho = (j_star - j_base) / gain
    if j_star >= j_base:
        alpha_post, payoff_post = astar, j_star
    else:
        alpha_post, payoff_post = abar, j_base
    return CertifiedSolution(
        alpha_star=astar,
        kind=grad.kind,
        payoff=j_star,
        rho=rho,
        optimal=False,
        rho_post=max(rho, 0.0),
        alpha_post=alpha_post,
        payoff_post=payoff_post,
        base_payoff=j_base,
    )


@dataclass(frozen=True)
class ConcavityReport:
    holds: bool
    worst_alpha: np.ndarray
    worst_violation: float
    checked: int


def check_concavity_inequality(
    spec: SystemSpec,
    alpha_bar,
    grad: Gradient,
    grid: TimeGrid,
    scheme: str = "euler",
    payoff_fn: Optional[Callable[[np.ndarray], float]] = None,
) -> ConcavityReport:
    """Exhaustively verify  g^T (alpha - base) >= J(alpha) - J(base)  over all
    binary vectors, the condition under which the certificate is valid.

    Costs one integration per binary point (2^m total, guarded at m = 20);
    ``payoff_fn`` may replace the integrations when the caller has a faster
    exact evaluation of the same discrete payoff.  The tolerance is relative
    to the payoff magnitude so integration roundoff does not flag spurious
    violations.
    """
    m = spec.decision_dim
    if m > _CONCAVITY_LIMIT:
        raise EnumerationRefusedError(
            f"refusing 2^{m} payoff evaluations (limit m = {_CONCAVITY_LIMIT})"
        )
    abar = as_binary(alpha_bar, spec.decision_dim)
    if payoff_fn is None:
        payoff_fn = lambda a: evaluate_payoff(spec, integrate(spec, a, grid, scheme), a)

    worst_violation = -np.inf
    worst_alpha = abar
    holds = True
    for code in range(1 << m):
        alpha = np.array([(code >> (m - 1 - j)) & 1 for j in range(m)], dtype=float)
        j_alpha = float(payoff_fn(alpha))
        lhs = float(grad.entries @ (alpha - abar))
        violation = (j_alpha - grad.base_payoff) - lhs
        if violation > worst_violation:
            worst_violation = violation
            worst_alpha = alpha
        if violation > 1e-7 * (1.0 + abs(j_alpha)):
            holds = False
    return ConcavityReport(
        holds=holds, worst_alpha=worst_alpha, worst_violation=worst_violation, checked=1 << m
    )


def _payoff_table(payoff: Callable[[np.ndarray], float], m: int) -> np.ndarray:
    """Payoff at every subset, indexed by the little-endian bit code."""
    table = np.empty(1 << m)
    for code in range(1 << m):
        alpha = np.array([(code >> j) & 1 for j in range(m)], dtype=float)
        table[code] = float(payoff(alpha))
    return table


@dataclass(frozen=True)
class SetFunctionReport:
    """Outcome of an exhaustive set-function check with its worst witness."""

    holds: bool
    worst_gap: float
    witness: np.ndarray


def _code_to_alpha(code: int, m: int) -> np.ndarray:
    return np.array([(code >> j) & 1 for j in range(m)], dtype=float)


def submodularity_report(payoff: Callable[[np.ndarray], float], m: int) -> SetFunctionReport:
    """Diminishing returns over all set pairs: adding an element to a smaller
    set helps at least as much as adding it to a larger one.  Equivalent to
    all pairwise second differences being nonpositive, which is what is
    enumerated here; the witness is the base set of the worst positive
    second difference."""
    if m > _SET_FUNCTION_LIMIT:
        raise EnumerationRefusedError(
            f"refusing 2^{m} payoff evaluations (limit m = {_SET_FUNCTION_LIMIT})"
        )
    table = _payoff_table(payoff, m)
    tol = 1e-9 * (1.0 + float(np.abs(table).max()))
    codes = np.arange(1 << m)
    worst = -np.inf
    worst_code = 0
    for s in range(m):
        bs = 1 << s
        free_s = (codes & bs) == 0
        for u in range(s + 1, m):
            bu = 1 << u
            base = codes[free_s & ((codes & bu) == 0)]
            second = table[base | bs | bu] - table[base | bs] - table[base | bu] + table[base]
            k = int(np.argmax(second))
            if second[k] > worst:
                worst = float(second[k])
                worst_code = int(base[k])
    return SetFunctionReport(
        holds=bool(worst <= tol), worst_gap=worst, witness=_code_to_alpha(worst_code, m)
    )


def check_submodular(payoff: Callable[[np.ndarray], float], m: int) -> bool:
    return submodularity_report(payoff, m).holds


def monotonicity_report(payoff: Callable[[np.ndarray], float], m: int) -> SetFunctionReport:
    """Adding elements never decreases the payoff (checked over single-element
    additions, which suffices along subset chains)."""
    if m > _SET_FUNCTION_LIMIT:
        raise EnumerationRefusedError(
            f"refusing 2^{m} payoff evaluations (limit m = {_SET_FUNCTION_LIMIT})"
        )
    table = _payoff_table(payoff, m)
    tol = 1e-9 * (1.0 + float(np.abs(table).max()))
    codes = np.arange(1 << m)
    worst = -np.inf
    worst_code = 0
    for s in range(m):
        bs = 1 << s
        base = codes[(codes & bs) == 0]
        drop = table[base] - table[base | bs]
        k = int(np.argmax(drop))
        if drop[k] > worst:
            worst = float(drop[k])
            worst_code = int(base[k])
    return SetFunctionReport(
        holds=bool(worst <= tol), worst_gap=worst, witness=_code_to_alpha(worst_code, m)
    )


def check_monotone(payoff: Callable[[np.ndarray], float], m: int) -> bool:
    return monotonicity_report(payoff, m).holds

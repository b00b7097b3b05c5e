"""Derivatives of the trajectory payoff with respect to the binary decision.

Two derivative concepts are provided:

* ``standard``: relax the decision into the unit box and differentiate as
  usual.  Computed with one forward and one costate solve, then a quadrature
  of  jac_f_alpha^T lam + jac_r_alpha^T  along the path.  Needs the system to
  be relaxable.

* ``nonstandard``: vary the vector field and running payoff by convex
  combination instead of varying the decision.  Entry i weighs the field and
  payoff difference between the base decision and its single-bit flip by the
  costate; the flip direction respects the box (bit 0 flips up, bit 1 flips
  down, with the quotient's sign matching).  Needs no smoothness in the
  decision and never evaluates off binary points.

Both cost one forward + one costate solve plus O(m) work per knot.  For
decision-affine systems the two derivatives coincide.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotRelaxableError
from .adjoint import solve_adjoint
from .system import (
    SystemSpec,
    TimeGrid,
    as_binary,
    evaluate_payoff,
    evaluate_variational_payoff,
    integrate,
    integrate_variational,
    payoff_functional,
    trapezoid_weights,
    unit_direction,
)

DERIVATIVE_KINDS = ("standard", "nonstandard")

# Step for the central-difference fallback when analytic decision-Jacobians
# are absent from a relaxable spec.
_JAC_FD_STEP = 1e-5


@dataclass(frozen=True)
class Gradient:
    """A payoff derivative at a binary base point.

    ``base_payoff`` caches the payoff at the base point so certificate
    computations need no re-integration.
    """

    kind: str
    base_point: np.ndarray
    entries: np.ndarray
    base_payoff: float

    def __post_init__(self):
        if self.kind not in DERIVATIVE_KINDS:
            raise ValueError(f"kind must be one of {DERIVATIVE_KINDS}")
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float))
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("gradient entries must be finite")


def _fd_jac_alpha(fn, x, alpha, t, m, out_dim):
    """Central differences of fn(x, ., t) in the decision argument."""
    cols = np.empty((out_dim, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = _JAC_FD_STEP
        hi = np.asarray(fn(x, alpha + e, t), dtype=float)
        lo = np.asarray(fn(x, alpha - e, t), dtype=float)
        cols[:, i] = (hi - lo) / (2.0 * _JAC_FD_STEP)
    return cols


def standard_derivative(
    spec: SystemSpec, alpha_bar, grid: TimeGrid, scheme: str = "euler"
) -> Gradient:
    """Relaxation-based derivative via the costate quadrature.

    Uses the spec's analytic decision-Jacobians when present, otherwise a
    pointwise central-difference fallback along the stored trajectory.
    """
    if not spec.relaxable:
        raise NotRelaxableError(
            "the relaxation-based derivative needs a system defined on the unit box"
        )
    abar = as_binary(alpha_bar, spec.decision_dim)
    forward = integrate(spec, abar, grid, scheme)
    costate = solve_adjoint(spec, abar, forward, scheme)

    m = spec.decision_dim
    f, r = spec.vector_field, spec.running_payoff
    jfa, jra = spec.jac_f_alpha, spec.jac_r_alpha
    times = grid.times
    X, L = forward.values, costate.values

    integrand = np.empty((grid.num_points, m))
    for k in range(grid.num_points):
        x, lam, t = X[k], L[k], times[k]
        if jfa is not None:
            Fa = np.asarray(jfa(x, abar, t), dtype=float)
        else:
            Fa = _fd_jac_alpha(f, x, abar, t, m, spec.state_dim)
        if jra is not None:
            Ra = np.asarray(jra(x, abar, t), dtype=float).reshape(-1)
        else:
            Ra = _fd_jac_alpha(lambda xx, aa, tt: [r(xx, aa, tt)], x, abar, t, m, 1)[0]
        if Fa.shape != (spec.state_dim, m) or Ra.size != m:
            raise DimensionError("decision-Jacobian contract returned a wrong shape")
        integrand[k] = Fa.T @ lam + Ra

    entries = trapezoid_weights(grid) @ integrand
    base_payoff = evaluate_payoff(spec, forward, abar)
    return Gradient("standard", abar, entries, base_payoff)


def costate_pairing(spec: SystemSpec, alpha_bar, alpha_to, forward, costate) -> float:
    """Quadrature of (f(x, to) - f(x, bar))^T lam + r(x, to) - r(x, bar).

    This is the value the variational difference quotient converges to as
    the blend weight goes to zero, for an arbitrary target decision; the
    convex-combination derivative is its single-bit-flip specialization.
    """
    abar = as_binary(alpha_bar, spec.decision_dim)
    ato = as_binary(alpha_to, spec.decision_dim)
    f, r = spec.vector_field, spec.running_payoff
    times = forward.grid.times
    X, L = forward.values, costate.values
    vals = np.empty(forward.grid.num_points)
    for k in range(forward.grid.num_points):
        x, lam, t = X[k], L[k], times[k]
        df = np.asarray(f(x, ato, t), dtype=float) - np.asarray(f(x, abar, t), dtype=float)
        vals[k] = float(df @ lam) + float(r(x, ato, t)) - float(r(x, abar, t))
    return float(trapezoid_weights(forward.grid) @ vals)


def nonstandard_derivative(
    spec: SystemSpec, alpha_bar, grid: TimeGrid, scheme: str = "euler"
) -> Gradient:
    """Convex-combination derivative via the costate quadrature.

    Entry i integrates the field/payoff difference between the base decision
    and its bit-i flip, weighted by the costate; downward flips enter with a
    minus sign so the entry is always the sensitivity of turning bit i on.
    """
    abar = as_binary(alpha_bar, spec.decision_dim)
    forward = integrate(spec, abar, grid, scheme)
    costate = solve_adjoint(spec, abar, forward, scheme)

    m = spec.decision_dim
    f, r = spec.vector_field, spec.running_payoff
    times = grid.times
    X, L = forward.values, costate.values
    n_pts = grid.num_points

    f_base = np.empty((n_pts, spec.state_dim))
    r_base = np.empty(n_pts)
    for k in range(n_pts):
        f_base[k] = f(X[k], abar, times[k])
        r_base[k] = r(X[k], abar, times[k])

    w = trapezoid_weights(grid)
    entries = np.empty(m)
    vals = np.empty(n_pts)
    for i in range(m):
        sign = 1.0 if abar[i] == 0.0 else -1.0
        a_to = abar.copy()
        a_to[i] = 1.0 - abar[i]
        for k in range(n_pts):
            x, lam, t = X[k], L[k], times[k]
            df = np.asarray(f(x, a_to, t), dtype=float) - f_base[k]
            vals[k] = float(df @ lam) + float(r(x, a_to, t)) - r_base[k]
        entries[i] = sign * float(w @ vals)

    base_payoff = evaluate_payoff(spec, forward, abar)
    return Gradient("nonstandard", abar, entries, base_payoff)


def reformulate(spec: SystemSpec) -> SystemSpec:
    """Decision-affine surrogate built from the m+1 basis evaluations.

    The surrogate field is  f(., 0) + sum_i alpha_i (f(., e_i) - f(., 0))
    and likewise for the running payoff.  It agrees with the original at all
    binary points whenever the original is additive across decision entries,
    is always relaxable, and carries exact decision-Jacobians (the basis
    differences).  The relaxation-based derivative of the surrogate equals
    the convex-combination derivative of the original under additivity.
    """
    m = spec.decision_dim
    zero = np.zeros(m)
    units = [unit_direction(i, m) for i in range(m)]
    f, r = spec.vector_field, spec.running_payoff
    jfx, jrx = spec.jac_f_x, spec.jac_r_x

    def f_columns(x, t):
        f0 = np.asarray(f(x, zero, t), dtype=float)
        cols = np.empty((f0.size, m))
        for i in range(m):
            cols[:, i] = np.asarray(f(x, units[i], t), dtype=float) - f0
        return f0, cols

    def r_columns(x, t):
        r0 = float(r(x, zero, t))
        cols = np.fromiter((float(r(x, units[i], t)) - r0 for i in range(m)), float, count=m)
        return r0, cols

    def f_hat(x, a, t):
        f0, cols = f_columns(x, t)
        return f0 + cols @ np.asarray(a, dtype=float)

    def r_hat(x, a, t):
        r0, cols = r_columns(x, t)
        return r0 + float(cols @ np.asarray(a, dtype=float))

    def jac_f_x_hat(x, a, t):
        a = np.asarray(a, dtype=float)
        J0 = np.asarray(jfx(x, zero, t), dtype=float)
        out = J0.copy()
        for i in range(m):
            if a[i] != 0.0:
                out += a[i] * (np.asarray(jfx(x, units[i], t), dtype=float) - J0)
        return out

    def jac_r_x_hat(x, a, t):
        a = np.asarray(a, dtype=float)
        J0 = np.asarray(jrx(x, zero, t), dtype=float).reshape(-1)
        out = J0.copy()
        for i in range(m):
            if a[i] != 0.0:
                out += a[i] * (np.asarray(jrx(x, units[i], t), dtype=float).reshape(-1) - J0)
        return out

    return SystemSpec(
        state_dim=spec.state_dim,
        decision_dim=m,
        initial_state=spec.initial_state,
        horizon=spec.horizon,
        vector_field=f_hat,
        running_payoff=r_hat,
        terminal_payoff=spec.terminal_payoff,
        jac_f_x=jac_f_x_hat,
        jac_r_x=jac_r_x_hat,
        jac_q_x=spec.jac_q_x,
        jac_f_alpha=lambda x, a, t: f_columns(x, t)[1],
        jac_r_alpha=lambda x, a, t: r_columns(x, t)[1],
        relaxable=True,
    )


def finite_difference_standard(
    spec: SystemSpec, alpha_bar, i: int, h_fd: float, grid: TimeGrid, scheme: str = "euler"
) -> float:
    """Central-difference oracle for the relaxation-based derivative:
    [J(bar + h e_i) - J(bar - h e_i)] / (2 h) with full relaxed integrations."""
    if not spec.relaxable:
        raise NotRelaxableError("finite differences in the decision need a relaxable system")
    abar = as_binary(alpha_bar, spec.decision_dim)
    e = np.zeros(spec.decision_dim)
    e[i] = h_fd
    hi = abar + e
    lo = abar - e
    j_hi = evaluate_payoff(spec, integrate(spec, hi, grid, scheme), hi)
    j_lo = evaluate_payoff(spec, integrate(spec, lo, grid, scheme), lo)
    return (j_hi - j_lo) / (2.0 * h_fd)


def variational_quotient(
    spec: SystemSpec, alpha_bar, alpha_to, eps: float, grid: TimeGrid, scheme: str = "euler"
) -> float:
    """One-sided difference quotient through the blended system:
    [ blended payoff at eps  -  payoff at the base ] / eps."""
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    traj = integrate_variational(spec, alpha_bar, alpha_to, eps, grid, scheme)
    val = evaluate_variational_payoff(spec, traj, alpha_bar, alpha_to, eps)
    base_traj = integrate(spec, as_binary(alpha_bar, spec.decision_dim), grid, scheme)
    base = payoff_functional(spec, base_traj, as_binary(alpha_bar, spec.decision_dim))
    return (val - base) / eps


def finite_difference_nonstandard(
    spec: SystemSpec, alpha_bar, i: int, eps: float, grid: TimeGrid, scheme: str = "euler"
) -> float:
    """Difference-quotient oracle for the convex-combination derivative.

    Flips bit i toward the admissible side and applies the downward-flip
    sign convention, so the value converges to the corresponding adjoint
    entry as eps goes to zero.
    """
    abar = as_binary(alpha_bar, spec.decision_dim)
    a_to = abar.copy()
    a_to[i] = 1.0 - abar[i]
    sign = 1.0 if abar[i] == 0.0 else -1.0
    return sign * variational_quotient(spec, abar, a_to, eps, grid, scheme)

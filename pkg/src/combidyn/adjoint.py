"""Backward costate integration along a stored forward trajectory.

The costate lam solves

    -lam'(t) = jac_f_x(x(t), alpha, t)^T lam(t) + jac_r_x(x(t), alpha, t)^T
    lam(T)   = jac_q_x(x(T))^T

and weighs how state perturbations at time t propagate into the trajectory
payoff.  The pass reads the state from the stored forward grid (no dense
output, no re-integration) and mirrors the forward scheme in time; rk4
midpoint stages take the state as the mean of the two adjacent stored
samples, which keeps the pass second order or better.
"""

from __future__ import annotations

import numpy as np

from .errors import AdjointDivergedError, DimensionError
from .system import SystemSpec, Trajectory, AdjointTrajectory, _check_grid, _check_scheme


def hamiltonian(spec: SystemSpec, state, costate, alpha, t: float = 0.0) -> float:
    """lam^T f(x, alpha, t) + r(x, alpha, t)."""
    x = np.asarray(state, dtype=float).reshape(-1)
    lam = np.asarray(costate, dtype=float).reshape(-1)
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if x.size != spec.state_dim or lam.size != spec.state_dim:
        raise DimensionError("state and costate must both have the system's state dimension")
    if a.size != spec.decision_dim:
        raise DimensionError(
            f"decision vector has length {a.size}, expected {spec.decision_dim}"
        )
    return float(lam @ spec.vector_field(x, a, t)) + float(spec.running_payoff(x, a, t))


def solve_adjoint(
    spec: SystemSpec, alpha, forward: Trajectory, scheme: str = "euler"
) -> AdjointTrajectory:
    """Integrate the costate backward from t = T over the forward grid.

    ``forward`` must be the trajectory produced by ``integrate`` for the same
    (spec, alpha); the terminal condition is exact at the last knot.
    """
    _check_scheme(scheme)
    _check_grid(spec, forward.grid)
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.size != spec.decision_dim:
        raise DimensionError(
            f"decision vector has length {a.size}, expected {spec.decision_dim}"
        )
    X = forward.values
    if X.shape[1] != spec.state_dim:
        raise DimensionError("forward trajectory does not match the system's state dimension")

    jfx = spec.jac_f_x
    jrx = spec.jac_r_x
    times = forward.grid.times
    h = forward.grid.step
    n_pts = forward.grid.num_points

    def rate(x, lam, t):
        # d lam / d tau with tau = T - t, i.e. the right-hand side of the
        # costate law read backward in time.
        return np.asarray(jfx(x, a, t), dtype=float).T @ lam + np.asarray(
            jrx(x, a, t), dtype=float
        ).reshape(-1)

    out = np.empty_like(X)
    lam = np.asarray(spec.jac_q_x(X[-1]), dtype=float).reshape(-1)
    if lam.size != spec.state_dim:
        raise DimensionError("terminal payoff gradient has the wrong length")
    out[-1] = lam

    if scheme == "euler":
        for k in range(n_pts - 2, -1, -1):
            lam = lam + h * rate(X[k + 1], lam, times[k + 1])
            if not np.all(np.isfinite(lam)):
                raise AdjointDivergedError(k)
            out[k] = lam
    else:  # rk4 mirrored in time
        half = 0.5 * h
        sixth = h / 6.0
        for k in range(n_pts - 2, -1, -1):
            x_hi = X[k + 1]
            x_lo = X[k]
            x_mid = 0.5 * (x_lo + x_hi)
            t_hi = times[k + 1]
            k1 = rate(x_hi, lam, t_hi)
            k2 = rate(x_mid, lam + half * k1, t_hi - half)
            k3 = rate(x_mid, lam + half * k2, t_hi - half)
            k4 = rate(x_lo, lam + h * k3, times[k])
            lam = lam + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            if not np.all(np.isfinite(lam)):
                raise AdjointDivergedError(k)
            out[k] = lam

    out.flags.writeable = False
    return AdjointTrajectory(grid=forward.grid, values=out)

"""Cubic bilinear flow i z' = -z'' + V z + u Q |z|^2 z, feedback and probes.

The cubic kick is diagonal in grid space and the drift is diagonal in the
eigenbasis, so the state is carried in the *complete* discrete eigenbasis
of the grid (truncation = n_points): both Strang factors are then exactly
unitary and the coefficient norm is conserved to rounding.  A truncated
kick-project step would instead leak a little norm out of the retained
span on every micro-step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import CubicBlowupError, InputError, NumericalError
from .lyapunov import (STEP_TOL, ClosedLoopRecord, _gain, _hypothesis_warnings,
                       _lyapunov)
from .propagator import DEFAULT_DT
from .spectral import _fix_signs, dirichlet_scale

BLOWUP_THRESHOLD = 1e6


@dataclass(frozen=True)
class CubicTables:
    """Complete-grid eigendata for the cubic propagator.

    ``modes`` is l2-orthonormal (polar-polished so the transform pair is an
    exact isometry); quadrature-normalized eigenfunctions are
    modes / sqrt(spacing).
    """

    grid: object
    q_samples: np.ndarray
    dt: float
    eigenvalues: np.ndarray
    modes: np.ndarray
    drift_half: np.ndarray
    norm_scale: np.ndarray
    blowup_threshold: float


def make_cubic_tables(grid, potentials, dt=DEFAULT_DT,
                      blowup_threshold=BLOWUP_THRESHOLD):
    if not (np.isfinite(dt) and dt > 0):
        raise InputError(f"dt must be a positive real, got {dt}")
    h = grid.spacing
    diag = 2.0 / h ** 2 + potentials.v_samples
    off = np.full(grid.n_points - 1, -1.0 / h ** 2)
    lam, vec = eigh_tridiagonal(diag, off)
    # polar polish: nearest orthogonal matrix, so W^T W = I to rounding
    u, _, vt = np.linalg.svd(vec, full_matrices=False)
    modes = _fix_signs(u @ vt)
    return CubicTables(
        grid=grid,
        q_samples=np.asarray(potentials.q_samples, dtype=float),
        dt=dt,
        eigenvalues=lam,
        modes=modes,
        drift_half=np.exp(-0.5j * lam * dt),
        norm_scale=dirichlet_scale(grid, grid.n_points),
        blowup_threshold=blowup_threshold,
    )


def embed_state(coeffs, tables):
    """Zero-pad a truncated coefficient vector into the complete basis."""
    c = np.asarray(coeffs, dtype=complex)
    n = tables.grid.n_points
    if c.shape[0] > n:
        raise InputError(f"state has {c.shape[0]} modes, grid supports {n}")
    if c.shape[0] == n:
        return c.copy()
    return np.concatenate([c, np.zeros(n - c.shape[0], dtype=complex)])


def _cubic_run(c, values, tables, t_offset=0.0):
    """Strang loop: half drift (coefficients), cubic kick (grid), half drift."""
    w = tables.modes
    drift = tables.drift_half
    inv_h = 1.0 / tables.grid.spacing
    q_dt = tables.q_samples * tables.dt
    h2_cap = tables.blowup_threshold
    mu2 = tables.norm_scale ** 2
    for k in range(values.shape[0]):
        c = drift * c
        z = w @ c
        z = z * np.exp(-1j * (values[k] * inv_h) * q_dt * (z.real ** 2 + z.imag ** 2))
        c = w.T @ z
        c = drift * c
        if not np.isfinite(c[0]):
            raise NumericalError(f"non-finite state at t = {t_offset + (k + 1) * tables.dt}")
        h2 = np.sqrt(np.sum(mu2 * (c.real ** 2 + c.imag ** 2)))
        if h2 > h2_cap:
            raise CubicBlowupError(
                f"H^2 surrogate norm {h2:.3g} crossed the blow-up threshold",
                time=t_offset + (k + 1) * tables.dt, norm=float(h2))
    return c


def propagate_cubic(state, control, tables):
    """Terminal state of the cubic flow; returns complete-basis coefficients."""
    if abs(control.dt - tables.dt) > 1e-15 * tables.dt:
        raise InputError("control dt does not match the cubic tables")
    c = embed_state(state, tables)
    if control.values.shape[0] == 0:
        return c
    return _cubic_run(c, control.values, tables)


def cubic_lyapunov_value(state, tables, alpha, target=1):
    """V_target over the complete basis."""
    c = embed_state(state, tables)
    return _lyapunov(c, tables.eigenvalues, alpha, target - 1)


def nonlinear_feedback_gain(state, tables, alpha, target=1, delta=1.0):
    """Feedback -delta * Im(...) with the cubic pairing Q |z|^2 z.

    The literal law has delta = 1; the gain is exposed for the closed loop.
    """
    c = embed_state(state, tables)
    w = _cubic_coupled(c, tables)
    return _gain(c, w, tables.eigenvalues, alpha, delta, target - 1)


def _cubic_coupled(c, tables):
    """Coefficients of Q |z|^2 z for complete-basis coefficients c."""
    z = tables.modes @ c
    inv_h = 1.0 / tables.grid.spacing
    zq = tables.q_samples * (z.real ** 2 + z.imag ** 2) * inv_h * z
    return tables.modes.T @ zq


def cubic_closed_loop(state0, tables, params, horizon):
    """Sample-and-hold loop for the cubic flow (same ladder as the linear one).

    A blow-up inside a hold flags the record and stops the run.
    """
    c = embed_state(state0, tables)
    if abs(np.linalg.norm(c) - 1.0) > 1e-8:
        raise InputError("closed loop expects a unit-norm initial state")
    steps = int(round(params.hold / tables.dt))
    if steps < 1 or abs(steps * tables.dt - params.hold) > 1e-9 * params.hold:
        raise InputError(f"hold {params.hold} is not a positive multiple of dt {tables.dt}")
    n_holds = int(round(horizon / params.hold))
    lam = tables.eigenvalues
    alpha = params.alpha
    i0 = params.target - 1
    delta = params.delta
    v = _lyapunov(c, lam, alpha, i0)
    warnings = list(_hypothesis_warnings(c, i0, v))

    rows_t, rows_v, rows_u, rows_p, rows_n0, rows_n2 = [], [], [], [], [], []

    def record(t, c, v, u):
        rows_t.append(t)
        rows_v.append(v)
        rows_u.append(u)
        rows_p.append(abs(c[i0]) ** 2)
        rows_n0.append(float(np.linalg.norm(c)))
        rows_n2.append(float(np.sqrt(np.sum(tables.norm_scale ** 2 * np.abs(c) ** 2))))

    t = 0.0
    stopped_early = False
    blowup = False
    for _ in range(n_holds):
        if v <= params.stop_threshold:
            stopped_early = True
            break
        try:
            u, c_next, v_next, delta = _cubic_hold_step(
                c, v, steps, tables, lam, alpha, delta, i0, params, t)
        except CubicBlowupError as exc:
            warnings.append(str(exc))
            blowup = True
            break
        record(t, c, v, u)
        c, v = c_next, v_next
        t += params.hold
    u_final = _gain(c, _cubic_coupled(c, tables), lam, alpha, delta, i0, params.u_max)
    record(t, c, v, u_final)
    return ClosedLoopRecord(
        times=np.array(rows_t),
        lyapunov=np.array(rows_v),
        control=np.array(rows_u),
        target_population=np.array(rows_p),
        norm_l2=np.array(rows_n0),
        norm_h2=np.array(rows_n2),
        final_state=c,
        hold=params.hold,
        dt=tables.dt,
        delta_final=delta,
        warnings=tuple(warnings),
        stopped_early=stopped_early,
        blowup=blowup,
    )


def _cubic_hold_step(c, v, steps, tables, lam, alpha, delta_work, i0, params, t):
    w = _cubic_coupled(c, tables)
    budget = v + STEP_TOL * (1.0 + v)
    trial = min(2.0 * delta_work, params.delta)
    floor = params.delta * 2.0 ** -10
    while True:
        u = _gain(c, w, lam, alpha, trial, i0, params.u_max)
        c_next = _cubic_run(c, np.full(steps, u), tables, t_offset=t)
        v_next = _lyapunov(c_next, lam, alpha, i0)
        if v_next <= budget or not params.adapt_delta:
            return u, c_next, v_next, trial
        trial *= 0.5
        if trial < floor:
            c_next = _cubic_run(c, np.zeros(steps), tables, t_offset=t)
            return 0.0, c_next, _lyapunov(c_next, lam, alpha, i0), delta_work


def linearized_response(p, l, control, tables, gap_tol=1e-9):
    """Closed-form first-order response <y(1), e_l> to a control on [0, 1].

    Evaluates -i e^{-i lam_l} <Q e_p^3, e_l> * int_0^1 e^{-i(lam_p - lam_l)s}
    u(s) ds with the pairing by grid quadrature and the oscillatory integral
    exact on each piecewise-constant segment.
    """
    lam = tables.eigenvalues
    n = lam.shape[0]
    if not (1 <= p <= n and 1 <= l <= n):
        raise InputError(f"mode indices ({p}, {l}) outside 1..{n}")
    if p == l:
        raise InputError("source and probe modes must differ")
    omega = lam[p - 1] - lam[l - 1]
    if abs(omega) <= gap_tol:
        raise NumericalError(f"resonance-degenerate pair: lam_p - lam_l = {omega:.3g}")
    if abs(control.duration - 1.0) > 1e-9:
        raise InputError("linearized response is defined for controls on [0, 1]")
    h = tables.grid.spacing
    e_p = tables.modes[:, p - 1] / np.sqrt(h)
    e_l = tables.modes[:, l - 1] / np.sqrt(h)
    pairing = h * np.sum(tables.q_samples * e_p ** 3 * e_l)
    edges = np.exp(-1j * omega * tables.dt * np.arange(control.values.shape[0] + 1))
    segments = (edges[1:] - edges[:-1]) / (-1j * omega)
    integral = np.sum(control.values * segments)
    return complex(-1j * np.exp(-1j * lam[l - 1]) * pairing * integral)

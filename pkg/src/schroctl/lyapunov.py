"""Lyapunov functional, feedback law, and the sample-and-hold closed loop.

The functional V_i(z) = alpha * sum_{j != i} lam_j^2 |c_j|^2 + 1 - |c_i|^2
vanishes exactly on the phase circle of mode i and is non-increasing along
the feedback flow.  The control is recomputed every ``hold`` seconds and
held constant in between; whenever a hold step would raise V beyond the
per-step tolerance the gain delta is halved (free drift leaves V exactly
invariant, so the adaptation always terminates).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError, NumericalError
from .propagator import ControlSignal, _strang_run, propagate, sample_control
from .spectral import sobolev_norm

STEP_TOL = 1e-8          # allowed per-step V increase, scaled by 1 + V
UNPOPULATED = 1e-12      # |<z, e_i>| below this counts as orthogonal
DELTA_FLOOR = 2.0 ** -10  # relative gain below which a hold coasts instead


@dataclass
class FeedbackParams:
    """Weights of the feedback law and of the sample-and-hold loop."""

    alpha: float = 0.1
    delta: float = 0.5
    target: int = 1
    hold: float = 1e-2
    u_max: float | None = None
    adapt_delta: bool = True
    stop_threshold: float = 1e-4

    def __post_init__(self):
        if self.alpha <= 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if self.delta <= 0:
            raise InputError(f"delta must be positive, got {self.delta}")
        if self.target < 1:
            raise InputError(f"target mode must be >= 1, got {self.target}")
        if self.hold <= 0:
            raise InputError(f"hold must be positive, got {self.hold}")
        if self.u_max is not None and self.u_max <= 0:
            raise InputError("u_max must be positive when set")


def _lyapunov(coeffs, eigenvalues, alpha, i0):
    mag = np.abs(coeffs) ** 2
    weighted = eigenvalues ** 2 * mag
    return float(alpha * (weighted.sum() - weighted[i0]) + 1.0 - mag[i0])


def _gain(coeffs, coupled, eigenvalues, alpha, delta, i0, u_max=None):
    terms = eigenvalues ** 2 * coupled * np.conj(coeffs)
    bracket = alpha * (terms.sum() - terms[i0]) - coupled[i0] * np.conj(coeffs[i0])
    u = -delta * bracket.imag
    if u_max is not None and abs(u) > u_max:
        u = np.sign(u) * u_max
    return float(u)


def lyapunov_value(state, basis, alpha, target=1):
    """V_target(z); zero exactly on the phase circle of the target mode."""
    c = np.asarray(state, dtype=complex)
    if not 1 <= target <= basis.truncation:
        raise InputError(f"target mode {target} outside 1..{basis.truncation}")
    return _lyapunov(c, basis.eigenvalues, alpha, target - 1)


def feedback_gain(state, basis, params):
    """Feedback value u(z) for the linear equation (real by construction)."""
    c = np.asarray(state, dtype=complex)
    if not 1 <= params.target <= basis.truncation:
        raise InputError(f"target mode {params.target} outside 1..{basis.truncation}")
    w = basis.coupling @ c
    return _gain(c, w, basis.eigenvalues, params.alpha, params.delta,
                 params.target - 1, params.u_max)


@dataclass
class ClosedLoopRecord:
    """Sampled closed-loop trajectory, one row per hold boundary.

    ``control[k]`` is the value applied on [times[k], times[k+1]); the last
    row carries the feedback value at the final state, never applied.
    """

    times: np.ndarray
    lyapunov: np.ndarray
    control: np.ndarray
    target_population: np.ndarray
    norm_l2: np.ndarray
    norm_h2: np.ndarray
    final_state: np.ndarray
    hold: float
    dt: float
    delta_final: float
    warnings: tuple = ()
    stopped_early: bool = False
    blowup: bool = False

    CSV_HEADER = "t,lyapunov,control,pop_target,norm_l2,norm_h2"

    def control_signal(self):
        steps = int(round(self.hold / self.dt))
        return ControlSignal(self.dt, np.repeat(self.control[:-1], steps))

    def applied_integral_u2(self):
        """Integral of u^2 dt over the run (piecewise-constant exact)."""
        return float(np.sum(self.control[:-1] ** 2) * self.hold)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.CSV_HEADER + "\n")
            for row in zip(self.times, self.lyapunov, self.control,
                           self.target_population, self.norm_l2, self.norm_h2):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _hypothesis_warnings(c, i0, v0):
    warnings = []
    if abs(c[i0]) <= UNPOPULATED:
        warnings.append("target mode unpopulated: <z0, e_i> = 0 within tolerance")
    if not 0.0 < v0 < 1.0:
        warnings.append(f"lyapunov value {v0:.6g} outside (0, 1)")
    return warnings


def closed_loop(state0, tables, params, horizon):
    """Integrate the sample-and-hold feedback loop for ``horizon`` seconds.

    Terminates early once V drops to ``params.stop_threshold``.  Hypothesis
    violations (unpopulated target, V outside (0,1)) are recorded as
    warnings, not errors.
    """
    basis = tables.basis
    steps = _hold_steps(params.hold, tables.dt)
    c = np.asarray(state0, dtype=complex)
    if abs(np.linalg.norm(c) - 1.0) > 1e-8:
        raise InputError("closed loop expects a unit-norm initial state")
    i0 = params.target - 1
    if not 0 <= i0 < basis.truncation:
        raise InputError(f"target mode {params.target} outside 1..{basis.truncation}")
    n_holds = int(round(horizon / params.hold))
    if abs(n_holds * params.hold - horizon) > 1e-9 * max(1.0, horizon):
        raise InputError("horizon must be a multiple of the hold interval")

    lam = basis.eigenvalues
    alpha = params.alpha
    delta = params.delta
    v = _lyapunov(c, lam, alpha, i0)
    warnings = _hypothesis_warnings(c, i0, v)

    rows_t, rows_v, rows_u, rows_p, rows_n0, rows_n2 = [], [], [], [], [], []

    def record(t, c, v, u):
        rows_t.append(t)
        rows_v.append(v)
        rows_u.append(u)
        rows_p.append(abs(c[i0]) ** 2)
        rows_n0.append(float(np.linalg.norm(c)))
        rows_n2.append(float(sobolev_norm(c, 2.0, basis)))

    t = 0.0
    stopped_early = False
    for _ in range(n_holds):
        if v <= params.stop_threshold:
            stopped_early = True
            break
        u, c_next, v_next, delta = _hold_step(c, v, steps, tables, lam,
                                              alpha, delta, i0, params)
        record(t, c, v, u)
        c, v = c_next, v_next
        t += params.hold
    u_final = _gain(c, basis.coupling @ c, lam, alpha, delta, i0, params.u_max)
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
    )


def _hold_steps(hold, dt):
    steps = int(round(hold / dt))
    if steps < 1 or abs(steps * dt - hold) > 1e-9 * hold:
        raise InputError(f"hold {hold} is not a positive multiple of dt {dt}")
    return steps


def _hold_step(c, v, steps, tables, lam, alpha, delta_work, i0, params):
    """One sample-and-hold step with a warm-started gain ladder.

    Retries from twice the last accepted gain (capped at the configured
    delta) and halves on overshoot; below a deep floor the sampled gain is
    sign-decorrelated over the hold, so the step coasts with zero control
    (free drift leaves V exactly invariant) and keeps the working gain.
    """
    w = tables.basis.coupling @ c
    budget = v + STEP_TOL * (1.0 + v)
    trial = min(2.0 * delta_work, params.delta)
    floor = params.delta * DELTA_FLOOR
    while True:
        u = _gain(c, w, lam, alpha, trial, i0, params.u_max)
        c_next = _strang_run(c, np.full(steps, u), tables)
        v_next = _lyapunov(c_next, lam, alpha, i0)
        if v_next <= budget or not params.adapt_delta:
            return u, c_next, v_next, trial
        trial *= 0.5
        if trial < floor:
            c_next = _strang_run(c, np.zeros(steps), tables)
            return 0.0, c_next, _lyapunov(c_next, lam, alpha, i0), delta_work


def excite_from_orthogonal(state0, tables, params, budget, level=1e-6):
    """Populate an unpopulated target mode with a short resonant pulse.

    The pulse u(t) = a cos((lam_p - lam_i) t) with a < budget drives the
    dominant occupied mode p toward the target through the coupling B_ip;
    the duration doubles (integer seconds) until |<z, e_i>| > level.
    """
    if budget <= 0:
        raise InputError(f"amplitude budget must be positive, got {budget}")
    basis = tables.basis
    c = np.asarray(state0, dtype=complex)
    i0 = params.target - 1
    if abs(c[i0]) > UNPOPULATED:
        raise InputError("state already couples to the target mode; nothing to excite")
    row = basis.coupling[i0]
    occupied = np.flatnonzero((np.abs(c) > 1e-6) & (np.abs(row) > 1e-10))
    occupied = occupied[occupied != i0]
    if occupied.size == 0:
        raise NumericalError(
            "no coupling path: B_ip vanishes for every occupied mode p")
    p0 = occupied[np.argmax(np.abs(row[occupied] * c[occupied]))]
    omega = basis.eigenvalues[p0] - basis.eigenvalues[i0]
    amp = 0.5 * budget
    duration = 1.0
    for _ in range(8):
        pulse = sample_control(lambda t: amp * np.cos(omega * t), duration, tables.dt)
        z = propagate(c, pulse, tables)
        if abs(z[i0]) > level:
            return pulse, z
        duration *= 2.0
    raise NumericalError("resonant pulse failed to populate the target mode")

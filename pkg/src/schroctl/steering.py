"""Approximate steering between unit states at integer times.

The route: stabilize the start state onto the target eigenstate, stabilize
the conjugated goal state onto the same eigenstate, time-reverse the second
control, and concatenate.  Because the discrete propagator conjugate-
reverses factor by factor, the reversed leg retraces exactly, and the
isometry of the flow turns the two eps/2 legs into an eps guarantee.
Every steering result is verified by direct propagation before returning.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BudgetError, InputError, NumericalError, StabilizationTimeout
from .lyapunov import UNPOPULATED, closed_loop, excite_from_orthogonal
from .propagator import ControlSignal, conjugate, empty_control, propagate, reverse_control

ALIGN_MAX_UNITS = 100_000
PULSE_LEVEL = 0.05       # population pumped into the target mode before the loop


@dataclass(frozen=True)
class StabilizationResult:
    control: ControlSignal
    state: np.ndarray
    distance: float
    phase: complex
    units: int


@dataclass(frozen=True)
class SteeringResult:
    control: ControlSignal
    achieved: float
    k0: int
    k1: int
    sup_u: float


def distance_to_mode(state, target):
    """Full distance || z - e_target || (phase included); target is 1-based."""
    c = np.asarray(state, dtype=complex)
    d2 = np.sum(np.abs(c) ** 2) - np.abs(c[target - 1]) ** 2 + np.abs(c[target - 1] - 1.0) ** 2
    return float(np.sqrt(max(d2, 0.0)))


def _phase_free_distance(state, target):
    c = np.asarray(state, dtype=complex)
    rest = np.sum(np.abs(c) ** 2) - np.abs(c[target - 1]) ** 2
    return float(np.sqrt(max(rest + (1.0 - np.abs(c[target - 1])) ** 2, 0.0)))


def _alignment_search(state, eigenvalue, target, threshold, n_max=ALIGN_MAX_UNITS):
    """Smallest integer drift time bringing the full distance under threshold."""
    c = np.asarray(state, dtype=complex)
    i0 = target - 1
    rest = float(np.sum(np.abs(c) ** 2) - np.abs(c[i0]) ** 2)
    n = np.arange(n_max + 1)
    rotated = c[i0] * np.exp(-1j * eigenvalue * n)
    dist = np.sqrt(rest + np.abs(rotated - 1.0) ** 2)
    hits = np.flatnonzero(dist < threshold)
    if hits.size == 0:
        return None
    return int(hits[0])


def stabilize_to_eigenstate(state0, tables, params, eps_half, max_time,
                            pulse_budget=1.0):
    """Drive ``state0`` within ``eps_half`` of the target eigenstate (phase 1).

    Runs the closed loop in one-second epochs, checking the distance at
    integer times; once the phase-free distance is small enough, a free
    drift over integer seconds rotates the residual phase into place.
    Raises StabilizationTimeout (carrying the best distance) if ``max_time``
    integer seconds do not suffice.
    """
    if eps_half <= 0:
        raise InputError(f"eps_half must be positive, got {eps_half}")
    basis = tables.basis
    target = params.target
    c = np.asarray(state0, dtype=complex)
    if distance_to_mode(c, target) < eps_half:
        return StabilizationResult(empty_control(tables.dt), c.copy(),
                                   distance_to_mode(c, target),
                                   _mode_phase(c, target), 0)

    pieces = []
    units = 0
    if abs(c[target - 1]) <= UNPOPULATED:
        pulse, c = excite_from_orthogonal(c, tables, params, pulse_budget,
                                          level=PULSE_LEVEL)
        pieces.append(pulse)
        units += int(round(pulse.duration))

    loop_params = replace(params, stop_threshold=0.0)
    best = distance_to_mode(c, target)
    while units < max_time:
        rec = closed_loop(c, tables, loop_params, horizon=1.0)
        loop_params = replace(loop_params, delta=rec.delta_final)
        c = rec.final_state
        pieces.append(rec.control_signal())
        units += 1
        full = distance_to_mode(c, target)
        best = min(best, full)
        if full < eps_half:
            return _finish(pieces, c, target, units, tables)
        if _phase_free_distance(c, target) < 0.6 * eps_half:
            n = _alignment_search(c, basis.eigenvalues[target - 1], target,
                                  0.98 * eps_half)
            if n is None:
                continue  # resonant phase grid; one more feedback epoch perturbs it
            if units + n > max_time:
                break
            c = c * np.exp(-1j * basis.eigenvalues * n)
            pieces.append(ControlSignal(tables.dt,
                                        np.zeros(n * int(round(1.0 / tables.dt)))))
            units += n
            return _finish(pieces, c, target, units, tables)
    raise StabilizationTimeout(
        f"stabilization did not reach {eps_half} within {max_time} units",
        best_distance=best, elapsed=units)


def _mode_phase(state, target):
    a = state[target - 1]
    return complex(a / abs(a)) if abs(a) > 0 else complex(1.0)


def _finish(pieces, state, target, units, tables):
    control = empty_control(tables.dt)
    for p in pieces:
        control = control.concat(p)
    return StabilizationResult(control, state, distance_to_mode(state, target),
                               _mode_phase(state, target), units)


def steer(z0, z1, tables, params, eps, budget=None, max_time=600,
          max_rescales=8):
    """Control taking ``z0`` to within ``eps`` of ``z1``, verified by propagation.

    With an amplitude budget, the feedback gain is rescaled downward until
    the concatenated control satisfies sup |u| < budget.
    """
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    if budget is not None and budget <= 0:
        raise InputError(f"amplitude budget must be positive, got {budget}")
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    for z in (z0, z1):
        if abs(np.linalg.norm(z) - 1.0) > 1e-8:
            raise InputError("steer expects unit-norm endpoint states")

    direct = float(np.linalg.norm(z0 - z1))
    if direct < eps:
        return SteeringResult(empty_control(tables.dt), direct, 0, 0, 0.0)

    scale = 1.0
    pulse_budget = budget if budget is not None else 1.0
    for _ in range(max_rescales):
        pa = replace(params, delta=params.delta * scale)
        res0 = stabilize_to_eigenstate(z0, tables, pa, 0.5 * eps, max_time,
                                       pulse_budget=pulse_budget)
        res1 = stabilize_to_eigenstate(conjugate(z1), tables, pa, 0.5 * eps,
                                       max_time, pulse_budget=pulse_budget)
        u_hat = res0.control.concat(
            reverse_control(res1.control, res1.control.duration))
        sup_u = float(np.max(np.abs(u_hat.values))) if u_hat.values.size else 0.0
        if budget is not None and sup_u >= budget:
            scale *= 0.5 * budget / max(sup_u, budget)
            if pa.delta < 1e-4 * params.delta:
                raise BudgetError(
                    f"sup|u| = {sup_u:.3g} still exceeds budget {budget} "
                    f"at the minimum gain")
            continue
        achieved = float(np.linalg.norm(propagate(z0, u_hat, tables) - z1))
        if achieved < eps:
            k0 = int(round(res0.control.duration))
            k1 = int(round(res1.control.duration))
            return SteeringResult(u_hat, achieved, k0, k1, sup_u)
        raise NumericalError(
            f"steering verification failed: achieved {achieved:.3g} >= eps {eps}")
    raise BudgetError(f"amplitude budget {budget} unachievable after rescaling")

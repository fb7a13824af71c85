"""Unitary integration of i c' = Lam c + u(t) B c in the truncated eigenbasis.

Each micro-step applies the Strang composition
exp(-i Lam dt/2) exp(-i u B dt) exp(-i Lam dt/2) with both exponentials
exact: the drift is diagonal and the coupling factor uses a precomputed
orthogonal eigendecomposition B = G D G^T.  Every factor is unitary, so
the l2 norm of the coefficients is conserved to rounding regardless of
step size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

DEFAULT_DT = 1e-3


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant real control: values[k] acts on [k*dt, (k+1)*dt)."""

    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"dt must be a positive real, got {self.dt}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise InputError("control values must be a 1-D vector")
        if not np.isfinite(vals).all():
            raise InputError("control values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def duration(self):
        return self.values.shape[0] * self.dt

    def concat(self, other):
        if abs(other.dt - self.dt) > 1e-15 * self.dt:
            raise InputError("cannot concatenate controls with different dt")
        return ControlSignal(self.dt, np.concatenate([self.values, other.values]))


def empty_control(dt=DEFAULT_DT):
    return ControlSignal(dt, np.zeros(0))


def constant_control(value, duration, dt=DEFAULT_DT):
    steps = int(round(duration / dt))
    return ControlSignal(dt, np.full(steps, float(value)))


def sample_control(func, duration, dt=DEFAULT_DT):
    """Sample a continuous control at micro-step midpoints (second order)."""
    steps = int(round(duration / dt))
    t_mid = (np.arange(steps) + 0.5) * dt
    return ControlSignal(dt, np.asarray(func(t_mid), dtype=float))


@dataclass(frozen=True)
class PropagatorTables:
    """Immutable per-(basis, dt) data: drift phases and B = G D G^T."""

    basis: object
    dt: float
    drift_half: np.ndarray
    coupling_eigvals: np.ndarray
    coupling_eigvecs: np.ndarray


def make_tables(basis, dt=DEFAULT_DT):
    if not (np.isfinite(dt) and dt > 0):
        raise InputError(f"dt must be a positive real, got {dt}")
    d, g = np.linalg.eigh(basis.coupling)
    return PropagatorTables(
        basis=basis,
        dt=dt,
        drift_half=np.exp(-0.5j * basis.eigenvalues * dt),
        coupling_eigvals=d,
        coupling_eigvecs=g,
    )


def _strang_run(coeffs, values, tables, record_every=0):
    """Core micro-step loop; coeffs (M,) or (M, P), values (S,) or (S, P)."""
    c = np.asarray(coeffs, dtype=complex)
    batched = c.ndim == 2
    drift = tables.drift_half[:, None] if batched else tables.drift_half
    g = tables.coupling_eigvecs
    d = tables.coupling_eigvals
    phase = -1j * tables.dt
    per_path = values.ndim == 2
    samples = [] if record_every else None
    for k in range(values.shape[0]):
        c = drift * c
        y = g.T @ c
        if per_path:
            kick = np.exp(phase * np.outer(d, values[k]))
        else:
            kick = np.exp(phase * values[k] * d)
            if batched:
                kick = kick[:, None]
        c = g @ (y * kick)
        c = drift * c
        if record_every and (k + 1) % record_every == 0:
            samples.append(c.copy())
    if record_every:
        return c, samples
    return c


def propagate(state, control, tables):
    """Terminal state after driving ``state`` with ``control``."""
    if abs(control.dt - tables.dt) > 1e-15 * tables.dt:
        raise InputError("control dt does not match the propagator tables")
    c = np.asarray(state, dtype=complex)
    if c.shape[0] != tables.basis.truncation:
        raise InputError(f"state has {c.shape[0]} modes, basis {tables.basis.truncation}")
    if control.values.shape[0] == 0:
        return c.copy()
    return _strang_run(c, control.values, tables)


def propagate_sampled(state, control, tables, every):
    """Propagate and also return states every ``every`` micro-steps.

    Returns (final state, times, coefficient rows).
    """
    if every < 1:
        raise InputError("sampling cadence must be >= 1")
    c, samples = _strang_run(np.asarray(state, dtype=complex),
                             control.values, tables, record_every=every)
    steps = control.values.shape[0]
    times = tables.dt * every * np.arange(1, len(samples) + 1)
    if steps % every:  # final state not on the cadence; report it anyway
        times = np.append(times, steps * tables.dt)
        samples.append(c.copy())
    return c, times, np.array(samples)


def reverse_control(control, k):
    """Time-reversed signal w(k - t); ``k`` must equal the duration."""
    if abs(k - control.duration) > 1e-9 * max(1.0, abs(k)):
        raise InputError(f"reversal time {k} does not match duration {control.duration}")
    return ControlSignal(control.dt, control.values[::-1].copy())


def conjugate(state):
    """Componentwise complex conjugate (eigenfunctions are real)."""
    return np.conj(np.asarray(state, dtype=complex))

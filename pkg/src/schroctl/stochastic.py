"""Random forcing, Markov-chain trajectories, entrance times, and growth stats.

The forcing amplitude on each unit interval is an independent draw
eta_k(t) = sum_j b_j xi_jk g_j(t) over an orthonormal basis of L^2[0,1];
trajectories restricted to integer times form a homogeneous Markov chain.
Every path owns a private RNG stream derived from (base_seed, PATH_STREAM,
path index), so ensembles are reproducible path by path and adding paths
never perturbs existing ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .propagator import ControlSignal, _strang_run
from .spectral import sobolev_norm

PATH_STREAM = 1          # stream id for per-path noise draws
LOGISTIC_SCALE = math.sqrt(3.0) / math.pi   # unit-variance logistic

NOISE_FAMILIES = ("gaussian", "logistic")
BASIS_FAMILIES = ("fourier",)


@dataclass(frozen=True)
class RandomAmplitudeModel:
    """Coefficients and distribution of the per-interval random amplitude."""

    b: np.ndarray
    basis_family: str = "fourier"
    noise_family: str = "gaussian"

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise InputError("b must be a non-empty vector")
        if not (np.isfinite(b).all() and (b > 0).all()):
            raise InputError("all b_j must be positive and finite")
        if self.basis_family not in BASIS_FAMILIES:
            raise InputError(f"unknown basis family {self.basis_family!r}")
        if self.noise_family not in NOISE_FAMILIES:
            raise InputError(f"unknown noise family {self.noise_family!r}")
        object.__setattr__(self, "b", b)

    @property
    def j_trunc(self):
        return self.b.shape[0]


def default_model(j_trunc=16, noise_family="gaussian"):
    """b_j = j^-2: square-summable, energy concentrated at low frequencies."""
    j = np.arange(1, j_trunc + 1, dtype=float)
    return RandomAmplitudeModel(j ** -2.0, noise_family=noise_family)


def flat_model(j_trunc=16, amplitude=1.0, noise_family="gaussian"):
    """b_j = const: spreads energy up to Fourier mode j_trunc // 2."""
    return RandomAmplitudeModel(np.full(j_trunc, float(amplitude)),
                                noise_family=noise_family)


@dataclass(frozen=True)
class StoppingConfig:
    """First-entrance target: the H^{-order} ball of the given radius."""

    radius: float
    order: float
    max_steps: int

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError(f"radius must be positive, got {self.radius}")
        if self.order <= 0:
            raise InputError(f"order must be positive, got {self.order}")
        if self.max_steps < 0:
            raise InputError(f"max_steps must be >= 0, got {self.max_steps}")


def path_rng(base_seed, path_index):
    """Private PCG64 stream for one path; streams never collide.

    ``base_seed`` may be an int or a tuple of ints (component streams);
    the stream key is (*base, PATH_STREAM, path_index).
    """
    base = tuple(base_seed) if isinstance(base_seed, (tuple, list)) else (base_seed,)
    key = tuple(int(x) for x in base) + (PATH_STREAM, int(path_index))
    return np.random.default_rng(np.random.SeedSequence(key))


def fourier_rows(j_trunc, t):
    """g_1 = 1, g_2m = sqrt2 cos(2 pi m t), g_2m+1 = sqrt2 sin(2 pi m t)."""
    rows = np.empty((j_trunc, t.shape[0]))
    rows[0] = 1.0
    for j in range(2, j_trunc + 1):
        m = j // 2
        if j % 2 == 0:
            rows[j - 1] = math.sqrt(2.0) * np.cos(2.0 * np.pi * m * t)
        else:
            rows[j - 1] = math.sqrt(2.0) * np.sin(2.0 * np.pi * m * t)
    return rows


def sample_xi(model, rng, size):
    """Unit-variance noise draws from the configured family."""
    if model.noise_family == "gaussian":
        return rng.standard_normal(size)
    return rng.logistic(scale=LOGISTIC_SCALE, size=size)


def _unit_steps(dt):
    steps = int(round(1.0 / dt))
    if abs(steps * dt - 1.0) > 1e-9:
        raise InputError(f"dt {dt} does not divide the unit interval")
    return steps


def sample_eta(model, rng, dt):
    """One random amplitude on [0, 1], midpoint-sampled on the micro grid."""
    steps = _unit_steps(dt)
    t_mid = (np.arange(steps) + 0.5) * dt
    xi = sample_xi(model, rng, model.j_trunc)
    values = (model.b * xi) @ fourier_rows(model.j_trunc, t_mid)
    return ControlSignal(dt, values)


def _eta_block(model, rngs, dt):
    """Stacked eta values, one column per path, one fresh draw per path."""
    steps = _unit_steps(dt)
    t_mid = (np.arange(steps) + 0.5) * dt
    g = fourier_rows(model.j_trunc, t_mid)
    out = np.empty((steps, len(rngs)))
    for col, rng in enumerate(rngs):
        xi = sample_xi(model, rng, model.j_trunc)
        out[:, col] = (model.b * xi) @ g
    return out


@dataclass(frozen=True)
class ChainTrajectory:
    """Integer-time states of one randomly forced path, with the logged noise."""

    states: np.ndarray           # (K+1, M)
    etas: tuple                  # K ControlSignals, etas[k] acts on [k, k+1)

    def sobolev_track(self, s, basis):
        return sobolev_norm(self.states, s, basis)


def simulate_chain(z0, model, steps, tables, rng):
    """z_{k+1} = U_1(z_k, eta_k) with a fresh draw per unit interval."""
    c = np.asarray(z0, dtype=complex)
    if abs(np.linalg.norm(c) - 1.0) > 1e-8:
        raise InputError("chain expects a unit-norm initial state")
    states = [c.copy()]
    etas = []
    for _ in range(steps):
        eta = sample_eta(model, rng, tables.dt)
        c = _strang_run(c, eta.values, tables)
        states.append(c.copy())
        etas.append(eta)
    return ChainTrajectory(np.array(states), tuple(etas))


def first_entrance_time(z0, model, stopping, tables, rng):
    """First integer k <= max_steps with ||z_k||_{-s} < r, else None (censored)."""
    basis = tables.basis
    c = np.asarray(z0, dtype=complex)
    if float(sobolev_norm(c, -stopping.order, basis)) < stopping.radius:
        return 0
    for k in range(1, stopping.max_steps + 1):
        eta = sample_eta(model, rng, tables.dt)
        c = _strang_run(c, eta.values, tables)
        if float(sobolev_norm(c, -stopping.order, basis)) < stopping.radius:
            return k
    return None


def entrance_ensemble(z0, model, stopping, tables, paths, base_seed):
    """Entrance times for independent paths; -1 marks a censored path.

    Paths that have entered the ball are dropped from the propagation
    batch; their generators stop advancing, which leaves the remaining
    paths' draws untouched.
    """
    basis = tables.basis
    c0 = np.asarray(z0, dtype=complex)
    taus = np.full(paths, -1, dtype=int)
    if float(sobolev_norm(c0, -stopping.order, basis)) < stopping.radius:
        taus[:] = 0
        return taus
    rngs = [path_rng(base_seed, i) for i in range(paths)]
    active = np.arange(paths)
    c = np.tile(c0[:, None], (1, paths))
    for k in range(1, stopping.max_steps + 1):
        block = _eta_block(model, [rngs[i] for i in active], tables.dt)
        c = _strang_run(c, block, tables)
        norms = sobolev_norm(c.T, -stopping.order, basis)
        entered = norms < stopping.radius
        taus[active[entered]] = k
        keep = ~entered
        active = active[keep]
        if active.size == 0:
            break
        c = c[:, keep]
    return taus


@dataclass(frozen=True)
class TailReport:
    """Empirical survival curve of the entrance time over path blocks."""

    block: int
    n_values: np.ndarray
    p_hat: np.ndarray
    stderr: np.ndarray
    log_slope: float | None
    log_slope_stderr: float | None
    paths: int
    censored: int
    max_steps: int
    degenerate: bool
    entrance_times: np.ndarray = None   # per path, -1 for censored

    def to_json_dict(self):
        return {
            "block": self.block,
            "paths": self.paths,
            "censored": self.censored,
            "max_steps": self.max_steps,
            "degenerate": self.degenerate,
            "log_slope": self.log_slope,
            "log_slope_stderr": self.log_slope_stderr,
            "tail": [
                {"n": int(n), "p_hat": float(p), "stderr": float(se)}
                for n, p, se in zip(self.n_values, self.p_hat, self.stderr)
            ],
        }


def tail_statistics(z0, model, stopping, n_max, block, paths, base_seed, tables):
    """Survival probabilities P{tau > n * block} with a log-linear fit.

    Censored paths count as surviving every block up to the horizon, so
    ``n_max * block`` must not exceed ``stopping.max_steps``.
    """
    if paths < 2:
        raise InputError("tail statistics need at least 2 paths")
    if n_max * block > stopping.max_steps:
        raise InputError("n_max * block exceeds the censoring horizon")
    taus = entrance_ensemble(z0, model, stopping, tables, paths, base_seed)
    censored = int(np.sum(taus < 0))
    n_values = np.arange(n_max + 1)
    survived = np.where(taus < 0, stopping.max_steps + 1, taus)
    p_hat = np.array([(survived > n * block).mean() for n in n_values])
    stderr = np.sqrt(p_hat * (1.0 - p_hat) / paths)

    positive = p_hat > 0
    slope = slope_se = None
    degenerate = censored == paths or positive.sum() < 3
    if not degenerate:
        x = n_values[positive].astype(float)
        y = np.log(p_hat[positive])
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        dof = max(x.size - 2, 1)
        denom = np.sum((x - x.mean()) ** 2)
        slope_se = float(np.sqrt(np.sum(resid ** 2) / dof / denom))
        slope = float(slope)
    return TailReport(block, n_values, p_hat, stderr, slope, slope_se,
                      paths, censored, stopping.max_steps, degenerate, taus)


@dataclass(frozen=True)
class GrowthReport:
    """Running-extrema statistics of the Sobolev norms across paths."""

    order: float
    checkpoints: np.ndarray
    median_peak: np.ndarray      # median over paths of max_{m<=k} ||z_m||_s
    median_floor: np.ndarray     # median over paths of min_{m<=k} ||z_m||_{-s}
    paths: int
    steps: int
    peak_tracks: np.ndarray | None = None
    floor_tracks: np.ndarray | None = None

    def to_json_dict(self):
        return {
            "order": self.order,
            "paths": self.paths,
            "steps": self.steps,
            "checkpoints": [int(k) for k in self.checkpoints],
            "median_peak": [float(x) for x in self.median_peak],
            "median_floor": [float(x) for x in self.median_floor],
        }


def growth_report(z0, model, steps, order, paths, base_seed, tables,
                  keep_tracks=False):
    """Medians of per-path running max ||z||_s and running min ||z||_{-s}."""
    if order <= 0:
        raise InputError(f"order must be positive, got {order}")
    if steps < 10:
        raise InputError("growth report needs at least 10 steps")
    basis = tables.basis
    c0 = np.asarray(z0, dtype=complex)
    rngs = [path_rng(base_seed, i) for i in range(paths)]
    c = np.tile(c0[:, None], (1, paths))
    up = np.empty((paths, steps + 1))
    lo = np.empty((paths, steps + 1))
    up[:, 0] = sobolev_norm(c.T, order, basis)
    lo[:, 0] = sobolev_norm(c.T, -order, basis)
    for k in range(1, steps + 1):
        block = _eta_block(model, rngs, tables.dt)
        c = _strang_run(c, block, tables)
        s_now = sobolev_norm(c.T, order, basis)
        l_now = sobolev_norm(c.T, -order, basis)
        up[:, k] = np.maximum(up[:, k - 1], s_now)
        lo[:, k] = np.minimum(lo[:, k - 1], l_now)
    checkpoints = np.array([max(steps // 10, 1), steps // 2, steps])
    med_up = np.array([float(np.median(up[:, k])) for k in checkpoints])
    med_lo = np.array([float(np.median(lo[:, k])) for k in checkpoints])
    return GrowthReport(order, checkpoints, med_up, med_lo, paths, steps,
                        up if keep_tracks else None,
                        lo if keep_tracks else None)

import numpy as np
import pytest

from schroctl import (ControlSignal, FeedbackParams, InputError,
                      NumericalError, basis_state, closed_loop,
                      excite_from_orthogonal, feedback_gain, lyapunov_value,
                      make_tables, propagate, random_unit_state, sobolev_norm)
from schroctl.lyapunov import STEP_TOL

# fitted once over 200 unit states at alpha = 0.1 (max observed 0.0244)
COERCIVITY_C = 0.05


def test_value_at_target_eigenstate(generic_basis):
    assert lyapunov_value(basis_state(12, 1), generic_basis, 0.1) == 0.0
    # invariant under the phase circle
    phase = np.exp(0.73j) * basis_state(12, 1)
    assert lyapunov_value(phase, generic_basis, 0.1) <= 1e-15


def test_value_at_other_eigenstate(generic_basis):
    lam = generic_basis.eigenvalues
    for k in (2, 5):
        got = lyapunov_value(basis_state(12, k), generic_basis, 0.1)
        assert got == pytest.approx(0.1 * lam[k - 1] ** 2 + 1.0, rel=1e-12)


def test_coercivity_bound(generic_basis):
    rng = np.random.default_rng(1234)
    for _ in range(100):
        z = random_unit_state(rng, 12)
        v = lyapunov_value(z, generic_basis, 0.1)
        assert COERCIVITY_C * (1.0 + v) >= float(sobolev_norm(z, 2.0, generic_basis))


def test_gain_zero_at_equilibrium(generic_basis):
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1)
    assert feedback_gain(basis_state(12, 1), generic_basis, params) == 0.0
    for phase in (1j, np.exp(2.1j)):
        assert feedback_gain(phase * basis_state(12, 1), generic_basis, params) == 0.0


def test_gain_crude_bound(generic_basis):
    rng = np.random.default_rng(3)
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1)
    lam_max = generic_basis.eigenvalues[-1]
    b_norm = np.linalg.norm(generic_basis.coupling, 2)
    bound = params.delta * (params.alpha * lam_max ** 2 * b_norm + b_norm)
    for _ in range(50):
        z = random_unit_state(rng, 12)
        assert abs(feedback_gain(z, generic_basis, params)) <= bound


def test_gain_finite_difference_ratio(generic_basis):
    # (V(z(h)) - V(z)) / h -> -(2/delta) u^2 at first order in h
    rng = np.random.default_rng(5)
    z = random_unit_state(rng, 12, smooth=True, scale=generic_basis.norm_scale)
    params = FeedbackParams(alpha=0.1, delta=0.05)
    u0 = feedback_gain(z, generic_basis, params)
    v0 = lyapunov_value(z, generic_basis, 0.1)
    errs = []
    for h in (1e-3, 5e-4, 2.5e-4):
        tables = make_tables(generic_basis, h)
        zh = propagate(z, ControlSignal(h, np.array([u0])), tables)
        quot = (lyapunov_value(zh, generic_basis, 0.1) - v0) / h
        errs.append(abs(quot + (2.0 / params.delta) * u0 ** 2))
    assert 1.6 <= errs[0] / errs[1] <= 2.4
    assert 1.6 <= errs[1] / errs[2] <= 2.4


def test_closed_loop_stationary_at_target(generic_tables):
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1, hold=1e-2,
                            stop_threshold=-1.0)
    rec = closed_loop(basis_state(12, 1), generic_tables, params, horizon=0.5)
    assert np.all(rec.control == 0.0)
    assert np.all(rec.lyapunov <= 1e-12)
    assert np.all(np.abs(rec.target_population - 1.0) <= 1e-12)


def test_closed_loop_decreases_generic_state(generic_tables):
    rng = np.random.default_rng(12345)
    z0 = random_unit_state(rng, 12, smooth=True,
                           scale=generic_tables.basis.norm_scale)
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1, hold=1e-3)
    rec = closed_loop(z0, generic_tables, params, horizon=20.0)
    assert rec.lyapunov[-1] < rec.lyapunov[0]
    steps = np.diff(rec.lyapunov) - STEP_TOL * (1.0 + rec.lyapunov[:-1])
    assert np.max(steps) <= 0.0
    assert np.abs(rec.norm_l2 - 1.0).max() <= 1e-8


def test_dissipation_audit_shrinks_with_hold(generic_tables):
    z0 = np.zeros(12, complex)
    z0[[0, 1, 2]] = [0.8, 0.5, np.sqrt(1 - 0.64 - 0.25)]
    dt = 2.5e-4
    basis = generic_tables.basis
    tables = make_tables(basis, dt)
    residuals = []
    for hold_steps in (16, 8, 4):
        params = FeedbackParams(alpha=0.1, delta=0.05, hold=hold_steps * dt,
                                adapt_delta=False, stop_threshold=0.0)
        rec = closed_loop(z0, tables, params, horizon=2.0)
        residuals.append(abs((rec.lyapunov[-1] - rec.lyapunov[0])
                             + (2.0 / 0.05) * rec.applied_integral_u2()))
    assert residuals[1] / residuals[0] <= 0.6
    assert residuals[2] / residuals[1] <= 0.6


def test_gauge_covariance(generic_tables):
    rng = np.random.default_rng(21)
    z0 = random_unit_state(rng, 12, smooth=True,
                           scale=generic_tables.basis.norm_scale)
    params = FeedbackParams(alpha=0.1, delta=0.5, hold=1e-3)
    rec_a = closed_loop(z0, generic_tables, params, horizon=2.0)
    rec_b = closed_loop(np.exp(1.37j) * z0, generic_tables, params, horizon=2.0)
    assert np.allclose(rec_a.lyapunov, rec_b.lyapunov, atol=1e-8)
    assert np.allclose(rec_a.control, rec_b.control, atol=1e-8)
    assert np.allclose(rec_a.target_population, rec_b.target_population, atol=1e-8)


def test_zero_dynamics_on_degenerate_pair(v0_basis):
    # V = 0, Q = x: B_13 = 0, so the feedback vanishes along free drift
    # from (e_1 + e_3)/sqrt(2)
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1)
    z0 = (basis_state(10, 1) + basis_state(10, 3)) / np.sqrt(2)
    lam = v0_basis.eigenvalues
    for t in np.linspace(0.0, 2.0, 64):
        drifted = np.exp(-1j * lam * t) * z0
        assert abs(feedback_gain(drifted, v0_basis, params)) <= 1e-8


def test_zero_dynamics_excluded_on_generic_pair(generic_basis):
    params = FeedbackParams(alpha=0.1, delta=0.5, target=1)
    rng = np.random.default_rng(31)
    z0 = random_unit_state(rng, 12, smooth=True, scale=generic_basis.norm_scale)
    lam = generic_basis.eigenvalues
    gaps = np.abs(np.subtract.outer(lam, lam))
    min_gap = gaps[gaps > 0].min()
    times = np.linspace(0.0, 2 * np.pi / min_gap, 256)
    peak = max(abs(feedback_gain(np.exp(-1j * lam * t) * z0, generic_basis, params))
               for t in times)
    assert peak > 1e-6


def test_excite_from_orthogonal(generic_tables):
    params = FeedbackParams(target=1)
    pulse, state = excite_from_orthogonal(basis_state(12, 2), generic_tables,
                                          params, budget=1.0)
    assert abs(state[0]) > 1e-6
    assert np.abs(pulse.values).max() < 1.0
    assert abs(np.linalg.norm(state) - 1.0) <= 1e-10


def test_excite_guards(generic_tables):
    params = FeedbackParams(target=1)
    populated = basis_state(12, 1)
    with pytest.raises(InputError):
        excite_from_orthogonal(populated, generic_tables, params, budget=1.0)
    with pytest.raises(InputError):
        excite_from_orthogonal(basis_state(12, 2), generic_tables, params, budget=0.0)


def test_excite_no_coupling_path(v0_basis):
    # V = 0, Q = x: B_13 = 0 (structurally), so e_3 cannot reach mode 1
    # through a first-order resonant pulse
    tables = make_tables(v0_basis, 1e-3)
    params = FeedbackParams(target=1)
    with pytest.raises(NumericalError):
        excite_from_orthogonal(basis_state(10, 3), tables, params, budget=1.0)


def test_hypothesis_warnings(generic_tables):
    params = FeedbackParams(alpha=0.1, delta=0.5, hold=1e-3)
    rec = closed_loop(basis_state(12, 2), generic_tables, params, horizon=0.01)
    assert any("unpopulated" in w for w in rec.warnings)
    assert any("outside (0, 1)" in w for w in rec.warnings)


def test_record_csv_round_trip(tmp_path, generic_tables):
    rng = np.random.default_rng(2)
    z0 = random_unit_state(rng, 12, smooth=True,
                           scale=generic_tables.basis.norm_scale)
    params = FeedbackParams(alpha=0.1, delta=0.5, hold=1e-3)
    rec = closed_loop(z0, generic_tables, params, horizon=0.05)
    path = tmp_path / "traj.csv"
    rec.write_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,lyapunov,control,pop_target,norm_l2,norm_h2"
    cells = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    assert np.array_equal(cells[:, 1], rec.lyapunov)  # full round-trip precision

import numpy as np
import pytest
import scipy.linalg as sla

from lieobs.dynamics import (
    InputSignal,
    IntegratorConfig,
    block_companion,
    integrate,
    integrate_step,
    linearization_spectrum,
    norm_columns,
    plant_rhs,
    run_batch,
    simulate,
    simulate_batch,
    simulate_commutator_pair,
)
from lieobs.exceptions import ScenarioInvalid, StepFailure
from lieobs.groups import GroupFamily, exp_so3, is_in_group, random_algebra, skew3
from lieobs.linalg import mat_exp, operator_norm
from lieobs.observers import ChainState, ObserverGains
from lieobs.scenario import lfso_scenario, lpso_scenario


def test_sinusoid_input_values():
    u = InputSignal.sinusoid()
    np.testing.assert_array_equal(u(0.0), skew3([0.0, 1.0, 0.0]))
    np.testing.assert_allclose(u(np.pi / 2), skew3([1.0, 0.0, 2.0]), atol=1e-15)


def test_tabulated_input_interpolates_and_clamps():
    A, B = skew3([1, 0, 0]), skew3([0, 0, 2])
    u = InputSignal("tabulated", 3, table=[(0.0, A), (2.0, B)])
    np.testing.assert_allclose(u(1.0), 0.5 * (A + B))
    np.testing.assert_array_equal(u(-1.0), A)
    np.testing.assert_array_equal(u(5.0), B)


@pytest.mark.parametrize("kwargs", [
    dict(kind="bogus"),
    dict(kind="constant"),
    dict(kind="paper_sinusoid", n=2),
    dict(kind="tabulated", table=[(1.0, np.zeros((3, 3))), (0.5, np.zeros((3, 3)))]),
])
def test_input_rejects(kwargs):
    with pytest.raises(ValueError):
        InputSignal(**kwargs)


def test_integrator_config_rejects():
    with pytest.raises(ValueError):
        IntegratorConfig("rk45")
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)


def test_plant_chain_rhs(rng):
    X = exp_so3(skew3(rng.standard_normal(3)))
    w, u = skew3(rng.standard_normal(3)), skew3(rng.standard_normal(3))
    out = plant_rhs(ChainState(X, (w,)), u)
    np.testing.assert_allclose(out[0], X @ w)
    np.testing.assert_allclose(out[1], u)
    np.testing.assert_allclose(plant_rhs(ChainState(X), u)[0], X @ u)


@pytest.mark.parametrize("scheme", ["rkmk4", "lie_euler"])
def test_constant_body_velocity_is_exact(rng, scheme):
    # dX/dt = X A has solution X0 exp(t A); both Lie-group schemes reproduce it exactly
    A = random_algebra("SL(3)", rng, None, 1.0)
    X0 = mat_exp(random_algebra("SL(3)", rng, None, 0.5))
    _, states = integrate(ChainState(X0), lambda t, s: [s.X @ A], 0.0, 1.0, IntegratorConfig(scheme, 0.05))
    np.testing.assert_allclose(states[-1].X, X0 @ sla.expm(A), rtol=1e-12, atol=1e-12)


def test_rkmk4_time_varying_rotation_stays_on_group():
    u = InputSignal.sinusoid()
    _, states = integrate(ChainState(np.eye(3)), lambda t, s: [s.X @ u(t)], 0.0, 5.0,
                          IntegratorConfig("rkmk4", 0.01), "SO(3)", output_every=100)
    assert all(is_in_group(s.X, "SO(3)", 1e-12) for s in states)


def test_rk4_project_reprojects():
    u = InputSignal.sinusoid()
    cfg = IntegratorConfig("rk4_project", 0.05, reproject_tol=1e-9)
    _, states = integrate(ChainState(np.eye(3)), lambda t, s: [s.X @ u(t)], 0.0, 5.0, cfg, "SO(3)")
    assert all(is_in_group(s.X, "SO(3)", 1e-9) for s in states)


def test_rkmk4_matches_dense_reference():
    u = InputSignal.sinusoid()

    def rhs(t, s):
        return [s.X @ u(t)]

    _, coarse = integrate(ChainState(np.eye(3)), rhs, 0.0, 2.0, IntegratorConfig("rkmk4", 0.02), "SO(3)")
    _, fine = integrate(ChainState(np.eye(3)), rhs, 0.0, 2.0, IntegratorConfig("rkmk4", 0.002), "SO(3)")
    assert operator_norm(coarse[-1].X - fine[-1].X) < 1e-7


def test_step_failure_wraps_rhs_errors():
    def rhs(t, s):
        raise ArithmeticError("boom")

    with pytest.raises(StepFailure) as info:
        integrate_step(ChainState(np.eye(3)), rhs, 0.25, IntegratorConfig())
    assert info.value.time == 0.25


def test_norm_columns():
    assert norm_columns(1) == ["err_state", "err_El", "err_Er", "err_el", "err_er"]
    assert norm_columns(3)[-2:] == ["err_x2", "err_x3"]


def test_noiseless_lfso_first_record_and_decay():
    sc = lfso_scenario("lfso_passive", t_end=1.0)
    traj = simulate(sc)
    assert traj.norms["err_El"][0] == pytest.approx(1.6675, abs=5e-4)
    # matched pairing: ||e_r|| follows exp(-t) exactly
    e = traj.norms["err_er"]
    np.testing.assert_allclose(e / e[0], np.exp(-traj.t), rtol=1e-9)
    recs = traj.records()
    assert len(recs) == len(traj.t) and recs[0].t == 0.0
    np.testing.assert_allclose(recs[0].Y, recs[0].plant.X)


def test_noisy_batch_is_seed_deterministic():
    sc = lfso_scenario("lfso_direct", sigma=0.4, seed=1, t_end=0.2)
    a = simulate_batch(sc, seeds=[1, 2, 3])
    b = simulate_batch(sc, seeds=[3, 1])
    np.testing.assert_array_equal(a.member(0).norms["err_state"], b.member(1).norms["err_state"])
    np.testing.assert_array_equal(a.member(2).norms["err_state"], b.member(0).norms["err_state"])
    assert not np.array_equal(a.member(0).norms["err_state"], a.member(1).norms["err_state"])
    # the measured output is the plant times a rotation of the stated spread
    N = np.swapaxes(a.plant_X, -1, -2) @ a.Y
    assert np.all(is_in_group(N.reshape(-1, 3, 3), "SO(3)", 1e-12))


def test_batch_validation():
    sc = lfso_scenario("lfso_passive")
    args = (sc.observer, sc.gains, sc.family, sc.plant_state(), sc.estimate_state(), sc.input)
    with pytest.raises(ScenarioInvalid):
        run_batch(*args, sigma=0.1)
    with pytest.raises(ScenarioInvalid):
        run_batch(*args, output_period=0.0015, t_end=0.003)
    with pytest.raises(ScenarioInvalid):
        run_batch(*args, t_end=0.015)
    with pytest.raises(ScenarioInvalid):
        run_batch(sc.observer, sc.gains, GroupFamily("GL", 3), sc.plant_state(), sc.estimate_state(),
                  sc.input, sigma=0.1, seeds=[1], t_end=0.01)


def test_branch_cut_failure_is_recorded():
    # estimate half a turn away from the plant: the innovation log is undefined
    sc = lfso_scenario("lfso_passive", t_end=0.05)
    est = ChainState(sc.plant_state().X @ exp_so3(skew3([0, 0, np.pi - 1e-9])))
    ok = sc.estimate_state()
    both = ChainState(np.stack([est.X, ok.X]))
    batch = simulate_batch(sc, estimate_ics=both)
    assert batch.failure_time[0] == 0.0
    assert np.isnan(batch.failure_time[1])
    assert np.isfinite(batch.norms["err_state"][0, 0])
    assert np.isnan(batch.norms["err_el"][0, 0])  # log undefined at the recorded sample
    assert np.all(np.isnan(batch.norms["err_state"][0, 1:]))
    assert np.all(np.isfinite(batch.norms["err_state"][1]))


def test_simulate_raises_with_partial_trajectory():
    sc = lfso_scenario("lfso_passive", t_end=0.05)
    sc.estimate_X = sc.plant_state().X @ exp_so3(skew3([0, np.pi - 1e-9, 0]))
    with pytest.raises(StepFailure) as info:
        simulate(sc)
    assert info.value.time == 0.0
    assert info.value.trajectory is not None


def test_lpso_batch_with_stacked_plant_ics(rng):
    sc = lpso_scenario("lpso_direct", t_end=0.1)
    p = sc.plant_state()
    R = p.X @ exp_so3(skew3(0.1 * rng.standard_normal((4, 3))))
    batch = simulate_batch(sc, plant_ics=ChainState(R, (np.broadcast_to(p.xs[0], (4, 3, 3)),)))
    assert len(batch) == 4
    assert set(batch.norms) == set(norm_columns(2))


def test_commutator_pair_stays_related(rng):
    E0 = mat_exp(random_algebra("GL(3)", rng, 5, 0.8))
    t, E, e = simulate_commutator_pair(E0, InputSignal.sinusoid(), 1.0, IntegratorConfig("rkmk4", 1e-2))
    assert E.shape == (len(t), 5, 3, 3)
    # different routes for E and e: agreement up to the O(dt^4) truncation error
    assert np.max(operator_norm(mat_exp(e) - E)) < 1e-7


def test_block_companion_layout():
    M = block_companion(ObserverGains((1.0, 2.0)), 3)
    np.testing.assert_array_equal(M[:3, :3], -2 * np.eye(3))
    np.testing.assert_array_equal(M[3:, :3], -1 * np.eye(3))
    np.testing.assert_array_equal(M[:3, 3:], np.eye(3))
    np.testing.assert_array_equal(M[3:, 3:], np.zeros((3, 3)))


def test_linearization_spectrum_repeats_roots():
    w = np.sort_complex(linearization_spectrum(ObserverGains((6.0, 11.0, 6.0)), 2))
    np.testing.assert_allclose(w.real, [-3, -3, -2, -2, -1, -1], atol=1e-10)

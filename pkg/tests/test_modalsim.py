import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from beamflat.errors import DivergenceError
from beamflat.green import evenly_spaced, solve_amplitudes, steady_shape, three_bump_shape, zero_shape
from beamflat.modalsim import (ClosedLoopConfig, Integrator, ModalState, ModeBasis, displacement, feedback_warnings,
                               project_initial, regulation_error, run_scenario, static_modes, step)

from conftest import scenario_h0


def test_basis_boundary_rows():
    b = ModeBasis(40)
    np.testing.assert_allclose(b.beta[:3], [0.5 * np.pi, 1.5 * np.pi, 2.5 * np.pi])
    assert not np.any(b.shape_derivative(0.0, 0))
    assert np.all(np.abs(b.shape_derivative(0.0, 2)) <= 1e-14 * b.beta**2)
    assert np.all(np.abs(b.shape_derivative(1.0, 1)) <= 1e-15 * b.beta**2)
    assert np.all(np.abs(b.shape_derivative(1.0, 3)) <= 1e-15 * b.beta**4)
    np.testing.assert_allclose(np.abs(b.shapes(1.0)), np.sqrt(2.0), rtol=1e-14)


@pytest.mark.parametrize("k, l", [(0, 0), (0, 1), (3, 3), (5, 17), (39, 39)])
def test_orthonormality(k, l):
    b = ModeBasis(40)
    val = quad(lambda x: b.shapes(x)[k] * b.shapes(x)[l], 0, 1, limit=400, epsabs=1e-13)[0]
    assert val == pytest.approx(1.0 if k == l else 0.0, abs=1e-10)


def test_projection():
    b = ModeBasis(40)
    s = project_initial(lambda x: b.shapes(x)[..., 0], None, b)
    np.testing.assert_allclose(s.q, np.eye(40)[0], atol=1e-10)
    assert not np.any(s.qdot)
    z = project_initial(lambda x: 0.0 * x, lambda x: 0.0 * x, b)
    assert not np.any(z.q) and not np.any(z.qdot)
    bump = project_initial(scenario_h0, None, b)
    x = np.linspace(0, 1, 1001)
    assert np.abs(displacement(bump, b, x) - scenario_h0(x)).max() < 1e-5


def test_displacement_examples():
    b = ModeBasis(8)
    assert displacement(ModalState(np.zeros(8), np.zeros(8)), b, 0.3) == 0.0
    assert displacement(ModalState(np.eye(8)[0], np.zeros(8)), b, 1.0) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_single_mode_energy_conserved():
    b = ModeBasis(1)
    integ = Integrator(b, 1e-4, 0.0, 1.0)
    q, v = np.array([0.3]), np.array([-0.2])
    e0 = 0.5 * (v**2 + b.omega**2 * q**2).sum()
    for _ in range(100_000):
        q, v = integ.step(q, v, 0.0)
    e1 = 0.5 * (v**2 + b.omega**2 * q**2).sum()
    assert abs(e1 - e0) <= 1e-10 * e0


def test_rotation_is_exact():
    b = ModeBasis(3)
    integ = Integrator(b, 0.01, 0.0, 1.0)
    q, v = np.array([1.0, 0.5, -0.2]), np.zeros(3)
    for _ in range(50):
        q, v = integ.step(q, v, 0.0)
    np.testing.assert_allclose(q, np.array([1.0, 0.5, -0.2]) * np.cos(b.omega * 0.5), atol=1e-12)


def test_feedback_dissipates_every_step():
    b = ModeBasis(40)
    integ = Integrator(b, 1e-4, 2.0, 1.0)
    state = project_initial(scenario_h0, None, b)
    q, v = state.q, state.qdot
    energy = lambda q, v: 0.5 * np.sum(v**2 + b.omega**2 * q**2)
    prev = energy(q, v)
    for _ in range(5000):
        q, v = integ.step(q, v, 0.0)
        now = energy(q, v)
        assert now <= prev + 1e-12 * max(prev, 1e-300)
        prev = now
    assert prev < energy(state.q, state.qdot)


def test_step_function_matches_integrator(scenario_plan):
    cfg = ClosedLoopConfig(plan=scenario_plan, forcing="constant", dt=1e-3, mode_count=10)
    b = ModeBasis(10)
    s = step(ModalState(np.zeros(10), np.zeros(10)), cfg, scenario_plan.alpha_bar, b)
    force = b.shapes(scenario_plan.actuator_positions).T @ scenario_plan.alpha_bar
    q, v = Integrator(b, 1e-3, 2.0, 1.0).step(np.zeros(10), np.zeros(10), force)
    np.testing.assert_array_equal(s.q, q)
    assert s.t == pytest.approx(1e-3)


def test_constant_input_reaches_green_superposition(scenario_plan):
    cfg = ClosedLoopConfig(plan=scenario_plan, forcing="constant", dt=5e-4, t_final=10.0, mode_count=40,
                           record_every=2000, snapshot_every=20000)
    res = run_scenario(cfg)
    x = cfg.x_grid
    assert np.abs(res.snapshots[-1] - steady_shape(scenario_plan, x)).max() < 1e-4
    b = ModeBasis(40)
    np.testing.assert_allclose(res.final_state.q, static_modes(b, scenario_plan.actuator_positions,
                                                               scenario_plan.alpha_bar), atol=1e-9)


def test_conservative_limit_keeps_energy(scenario_plan):
    cfg = ClosedLoopConfig(plan=scenario_plan, forcing="none", feedback_gain=0.0, h0=scenario_h0,
                           dt=1e-3, t_final=2.0, mode_count=40, record_every=100)
    res = run_scenario(cfg)
    np.testing.assert_allclose(res.energy, res.energy[0], rtol=1e-10)
    assert res.error_sup.min() > 1e-4  # no decay without feedback


def test_zero_everything_gives_zero_outputs():
    plan = solve_amplitudes(evenly_spaced(3), zero_shape())
    cfg = ClosedLoopConfig(plan=plan, forcing="none", feedback_gain=0.0, dt=1e-3, t_final=0.1)
    res = run_scenario(cfg)
    assert not res.snapshots.any() and not res.energy.any() and not res.controls.any()


def test_initial_error_is_initial_minus_target(scenario_plan):
    cfg = ClosedLoopConfig(plan=scenario_plan, trajectories=[], forcing="constant", h0=scenario_h0,
                           dt=1e-3, t_final=0.01, record_every=1)
    res = run_scenario(cfg)
    x = cfg.x_grid
    assert res.error_sup[0] == pytest.approx(np.abs(scenario_h0(x) - steady_shape(scenario_plan, x)).max(), abs=1e-5)


def test_regulation_error_zero_cases(scenario_plan):
    b = ModeBasis(40)
    x = np.linspace(0, 1, 101)
    zero_plan = solve_amplitudes(evenly_spaced(2), zero_shape())
    e, sup, l2 = regulation_error(ModalState(np.zeros(40), np.zeros(40)), zero_plan, b, x)
    assert sup == 0.0 and l2 == 0.0 and not e.any()
    q = static_modes(b, scenario_plan.actuator_positions, scenario_plan.alpha_bar)
    _, sup, _ = regulation_error(ModalState(q, np.zeros(40)), scenario_plan, b, x)
    assert sup < 1e-5  # only modal truncation of the point loads remains


def test_second_order_in_time(scenario_plan):
    def final(dt):
        cfg = ClosedLoopConfig(plan=scenario_plan, forcing="constant", h0=scenario_h0, dt=dt, t_final=0.5,
                               mode_count=20, record_every=10**9, snapshot_every=10**9)
        return run_scenario(cfg).snapshots[-1]

    a, b, c = final(4e-3), final(2e-3), final(1e-3)
    ratio = np.abs(a - b).max() / np.abs(b - c).max()
    assert 3.5 < ratio < 6.0


@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
def test_divergence_names_time_and_mode(scenario_plan):
    def nan_h0(x):
        return np.where(np.asarray(x) > 0.5, np.nan, 0.0)

    cfg = ClosedLoopConfig(plan=scenario_plan, forcing="none", h0=nan_h0, dt=1e-3, t_final=0.01)
    with pytest.raises(DivergenceError) as info:
        run_scenario(cfg)
    assert info.value.mode == 1 and info.value.t == pytest.approx(1e-3)
    with pytest.raises(DivergenceError):
        step(ModalState(np.full(4, np.inf), np.zeros(4)), ClosedLoopConfig(plan=None, mode_count=4), [])


def test_feedback_node_warning():
    b = ModeBasis(10)
    assert feedback_warnings(1.0, b) == []
    notes = feedback_warnings(2.0 / 3.0, b)
    assert notes and "mode 2" in notes[0]
    plan = solve_amplitudes([0.25], three_bump_shape())
    cfg = ClosedLoopConfig(plan=plan, forcing="none", feedback_position=2.0 / 3.0, dt=1e-3, t_final=0.01,
                           mode_count=10)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = run_scenario(cfg)
    assert res.warnings and caught


def test_config_problems(scenario_plan):
    cfg = ClosedLoopConfig(plan=scenario_plan, feedback_position=scenario_plan.actuator_positions[3],
                           feedback_gain=-1.0, dt=0.0, forcing="feedforward")
    problems = cfg.problems()
    assert len(problems) == 4
    with pytest.raises(ValueError):
        run_scenario(cfg)
